"""The 32-agent full-factorial population and per-agent memory."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from .ledger import BlockRecord, Ledger


class Style(str, Enum):
    TECH = "Tech"
    FUND = "Fund"

    @property
    def opposite(self) -> "Style":
        return Style.FUND if self is Style.TECH else Style.TECH


# Order fixes the id bit layout: bit 0 is loss_aversion, bit 3 mispricing, bit 4 style.
DRIVERS = ("loss_aversion", "herding", "wealth_diff", "mispricing")
N_AGENTS = 2 ** (len(DRIVERS) + 1)


@dataclass(frozen=True)
class TraitVector:
    loss_aversion: int = 0
    herding: int = 0
    wealth_diff: int = 0
    mispricing: int = 0

    def __post_init__(self) -> None:
        for name in DRIVERS:
            if getattr(self, name) not in (0, 1):
                raise ValueError(f"trait {name} must be 0 or 1")

    def bit(self, driver: str) -> int:
        if driver not in DRIVERS:
            raise KeyError(driver)
        return getattr(self, driver)

    def as_tuple(self) -> tuple[int, int, int, int]:
        return tuple(getattr(self, d) for d in DRIVERS)


@dataclass(frozen=True)
class AgentSpec:
    id: int
    traits: TraitVector
    initial_style: Style
    persona_text: str


@dataclass
class AgentMemory:
    current_style: Style
    block_summaries: list["BlockRecord"] = field(default_factory=list)
    rationale_log: list[str] = field(default_factory=list)
    ledger: "Ledger | None" = None

    @property
    def hold_streak(self) -> dict[str, int]:
        return self.ledger.hold_streak if self.ledger is not None else {}


def persona_resource(driver: str, bit: int) -> str:
    name = f"{driver}_{'strong' if bit else 'weak'}.txt"
    try:
        return resources.files("styleswitch.resources.personas").joinpath(name).read_text(encoding="utf-8")
    except FileNotFoundError as exc:
        raise FileNotFoundError(f"missing persona resource {name}") from exc


def persona_text(traits: TraitVector) -> str:
    return "\n".join(persona_resource(d, traits.bit(d)) for d in DRIVERS)


def spec_from_id(agent_id: int) -> AgentSpec:
    if not 0 <= agent_id < N_AGENTS:
        raise ValueError(f"agent id {agent_id} out of range")
    bits = [(agent_id >> k) & 1 for k in range(len(DRIVERS))]
    traits = TraitVector(*bits)
    style = Style.FUND if (agent_id >> len(DRIVERS)) & 1 else Style.TECH
    return AgentSpec(agent_id, traits, style, persona_text(traits))


def build_population() -> list[AgentSpec]:
    return [spec_from_id(i) for i in range(N_AGENTS)]


def cohorts(population: list[AgentSpec], driver: str) -> tuple[list[int], list[int]]:
    """Split agent ids by ``driver`` bit: (aligned = bit 1, non-aligned = bit 0)."""
    aligned = [a.id for a in population if a.traits.bit(driver) == 1]
    non_aligned = [a.id for a in population if a.traits.bit(driver) == 0]
    return aligned, non_aligned
