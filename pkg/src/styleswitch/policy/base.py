"""Decision contexts and actions shared by the rule-based and LLM policies."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

from ..agents import Style, TraitVector
from ..indicators import FundSnapshot, TechSnapshot
from ..ledger import Side


@dataclass(frozen=True)
class DecisionContext:
    agent_id: int
    date: str
    style: Style
    tickers: tuple[str, ...]
    tech: Mapping[str, TechSnapshot]
    fund: Mapping[str, FundSnapshot]
    mispricing_gap: Mapping[str, Optional[float]]
    holdings: Mapping[str, float]
    cash: float
    hold_streak: Mapping[str, int]
    persona_text: str = ""

    def ret_1d(self, ticker: str) -> Optional[float]:
        return self.tech[ticker].pct_chg


@dataclass(frozen=True)
class HoldingView:
    ticker: str
    shares: float
    price: float
    fund: FundSnapshot


@dataclass(frozen=True)
class SwitchContext:
    agent_id: int
    block_index: int
    date: str
    current_style: Style
    traits: TraitVector
    holdings: Sequence[HoldingView]
    cash: float
    block_pnl: float
    ytd_pnl: float
    opposite_style_avg_profit: float
    n_current: int
    n_opposite: int
    actual_return: float
    counterfactual_return: float
    # signed change in mean |mispricing gap| over the block; positive favors Fund
    mispricing_signal: float = 0.0
    persona_text: str = ""

    @property
    def n_total(self) -> int:
        return self.n_current + self.n_opposite


@dataclass(frozen=True)
class Action:
    ticker: str
    side: Side
    confidence: float = 1.0
    reason: str = ""

    def __post_init__(self) -> None:
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence {self.confidence} outside [0, 1]")
        object.__setattr__(self, "side", Side(self.side))


@dataclass(frozen=True)
class SwitchDecision:
    switch: bool
    reason: str
    score: Optional[float] = None
    components: dict = field(default_factory=dict)
