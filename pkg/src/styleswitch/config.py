"""Run configuration: one YAML file, every tunable constant has a key and a default."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields
from datetime import date
from pathlib import Path
from typing import Any, Optional

import yaml

from .market_data import SECTORS

MODES = ("rule", "llm", "ablation")


class ConfigError(ValueError):
    """Invalid configuration; message is prefixed with ``config:``."""

    def __init__(self, msg: str):
        super().__init__(f"config: {msg}")


@dataclass(frozen=True)
class TickerConfig:
    ticker: str
    sector: str
    shares_outstanding: float
    prices: str
    reports: str


@dataclass(frozen=True)
class SizingConfig:
    buy_fraction: float = 0.10
    sell_fraction: float = 1.0
    equity_share: float = 0.5
    per_stock: float = 0.10


@dataclass(frozen=True)
class RuleConfig:
    tech_band: float = 0.002
    fund_current_ratio_min: float = 1.0
    fund_leverage_max: float = 0.9
    fund_buy_gap: float = 0.02


@dataclass(frozen=True)
class SwitchConfig:
    w_wealth: float = 1.0
    w_herding: float = 0.5
    w_mispricing: float = 0.5
    w_loss: float = 0.6
    tau: float = 0.01
    jitter: float = 0.002
    ablation_p: float = 0.1


@dataclass(frozen=True)
class MispricingConfig:
    horizon: int = 20
    min_pairs: int = 30
    signal_lookback: int = 6    # prior reviews averaged into the reference level of the switch signal


@dataclass(frozen=True)
class LLMConfig:
    base_url: str = "http://127.0.0.1:8000/v1"
    model: str = "gpt-4o-mini"
    api_key_env: str = "OPENAI_API_KEY"
    timeout: float = 30.0
    retries: int = 3
    backoff: float = 0.5
    max_in_flight: int = 4
    temperature: float = 0.0


@dataclass(frozen=True)
class SimConfig:
    start: date
    end: date
    pool: tuple[TickerConfig, ...]
    auxiliary: dict[str, TickerConfig]
    seed: int = 0
    mode: str = "rule"
    block_length: int = 10
    initial_wealth: float = 100_000.0
    sizing: SizingConfig = field(default_factory=SizingConfig)
    rules: RuleConfig = field(default_factory=RuleConfig)
    switch: SwitchConfig = field(default_factory=SwitchConfig)
    mispricing: MispricingConfig = field(default_factory=MispricingConfig)
    llm: LLMConfig = field(default_factory=LLMConfig)
    base_dir: Path = Path(".")

    def resolve(self, rel: str) -> Path:
        p = Path(rel)
        return p if p.is_absolute() else self.base_dir / p

    def to_dict(self) -> dict:
        d = asdict(self)
        d["start"] = self.start.isoformat()
        d["end"] = self.end.isoformat()
        d.pop("base_dir")
        return d

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()


def _section(cls, raw: Any, name: str):
    if raw is None:
        return cls()
    if not isinstance(raw, dict):
        raise ConfigError(f"{name} must be a mapping")
    known = {f.name for f in fields(cls)}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown key(s) in {name}: {', '.join(sorted(unknown))}")
    return cls(**raw)


def _ticker(raw: Any, where: str, sector: Optional[str] = None) -> TickerConfig:
    if not isinstance(raw, dict):
        raise ConfigError(f"{where} must be a mapping")
    raw = dict(raw)
    if sector is not None:
        raw.setdefault("sector", sector)
    for key in ("ticker", "sector", "shares_outstanding", "prices", "reports"):
        if key not in raw:
            raise ConfigError(f"{where}: missing {key}")
    if raw["sector"] not in SECTORS:
        raise ConfigError(f"{where}: unknown sector {raw['sector']!r}")
    if not float(raw["shares_outstanding"]) > 0:
        raise ConfigError(f"{where}: shares_outstanding must be positive")
    return TickerConfig(str(raw["ticker"]), raw["sector"], float(raw["shares_outstanding"]),
                        str(raw["prices"]), str(raw["reports"]))


def _date(raw: Any, name: str) -> date:
    if isinstance(raw, date):
        return raw
    try:
        return date.fromisoformat(str(raw))
    except ValueError:
        raise ConfigError(f"{name} is not an ISO date") from None


def parse_config(raw: dict, base_dir: Path = Path("."), *, mode: Optional[str] = None,
                 seed: Optional[int] = None) -> SimConfig:
    if not isinstance(raw, dict):
        raise ConfigError("top level must be a mapping")
    cal = raw.get("calendar") or {}
    if "start" not in cal or "end" not in cal:
        raise ConfigError("calendar.start and calendar.end are required")
    start, end = _date(cal["start"], "calendar.start"), _date(cal["end"], "calendar.end")
    if end < start:
        raise ConfigError("calendar.end precedes calendar.start")

    pool = tuple(_ticker(t, f"pool[{i}]") for i, t in enumerate(raw.get("pool") or []))
    if len(pool) != 5:
        raise ConfigError(f"pool must list five tickers, got {len(pool)}")
    if len({t.ticker for t in pool}) != 5:
        raise ConfigError("pool tickers must be distinct")
    aux_raw = raw.get("auxiliary") or {}
    if not isinstance(aux_raw, dict):
        raise ConfigError("auxiliary must map sector to ticker entry")
    auxiliary = {}
    for sector in sorted({t.sector for t in pool}):
        if sector not in aux_raw or aux_raw[sector] is None:
            raise ConfigError(f"auxiliary ticker missing for sector {sector}")
        auxiliary[sector] = _ticker(aux_raw[sector], f"auxiliary[{sector}]", sector)
        if auxiliary[sector].sector != sector:
            raise ConfigError(f"auxiliary[{sector}] declares sector {auxiliary[sector].sector}")

    mode = mode or raw.get("mode", "rule")
    if mode not in MODES:
        raise ConfigError(f"mode must be one of {', '.join(MODES)}")
    seed = int(raw.get("seed", 0)) if seed is None else int(seed)
    if not 0 <= seed < 2 ** 64:
        raise ConfigError("seed must fit in 64 bits")
    block_length = int(raw.get("block_length", 10))
    if block_length < 1:
        raise ConfigError("block_length must be >= 1")
    initial_wealth = float(raw.get("initial_wealth", 100_000.0))
    if not initial_wealth > 0:
        raise ConfigError("initial_wealth must be positive")

    sizing = _section(SizingConfig, raw.get("sizing"), "sizing")
    if not (0 < sizing.buy_fraction <= 1 and 0 < sizing.sell_fraction <= 1):
        raise ConfigError("sizing fractions must lie in (0, 1]")
    known = {"calendar", "pool", "auxiliary", "mode", "seed", "block_length", "initial_wealth",
             "sizing", "rules", "switch", "mispricing", "llm"}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown top-level key(s): {', '.join(sorted(unknown))}")
    return SimConfig(
        start=start, end=end, pool=pool, auxiliary=auxiliary, seed=seed, mode=mode,
        block_length=block_length, initial_wealth=initial_wealth, sizing=sizing,
        rules=_section(RuleConfig, raw.get("rules"), "rules"),
        switch=_section(SwitchConfig, raw.get("switch"), "switch"),
        mispricing=_section(MispricingConfig, raw.get("mispricing"), "mispricing"),
        llm=_section(LLMConfig, raw.get("llm"), "llm"),
        base_dir=base_dir,
    )


def load_config(path: Path | str, **overrides) -> SimConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"file not found: {path}")
    try:
        raw = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"unparsable YAML ({exc.__class__.__name__})") from None
    return parse_config(raw, path.parent.resolve(), **overrides)
