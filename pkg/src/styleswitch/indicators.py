"""Technical and fundamental indicator snapshots.

Every field is a float or ``None``; ``None`` marks a value that is not yet
computable (warm-up, missing report, division guard) and is rendered as
``NA`` wherever it reaches an agent.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Optional, Sequence

from .market_data import DailyBar, QuarterlyReport

WINDOWS = (5, 10, 30)
LONGEST_WINDOW = max(WINDOWS)

MACD_FAST = 12
MACD_SLOW = 26
MACD_SIGNAL = 9
RSI_PERIOD = 14
VOLATILITY_WINDOW = 20
VOLUME_TREND_WINDOW = 20

NA = None


@dataclass(frozen=True)
class TechSnapshot:
    close: Optional[float] = NA
    pre_close: Optional[float] = NA
    change: Optional[float] = NA
    pct_chg: Optional[float] = NA
    vol: Optional[float] = NA
    vol_5: Optional[float] = NA
    vol_10: Optional[float] = NA
    vol_30: Optional[float] = NA
    ma_5: Optional[float] = NA
    ma_10: Optional[float] = NA
    ma_30: Optional[float] = NA
    macd: Optional[float] = NA
    macd_signal: Optional[float] = NA
    macd_hist: Optional[float] = NA
    rsi_14: Optional[float] = NA
    volatility_20: Optional[float] = NA
    volume_trend_20: Optional[float] = NA

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class FundSnapshot:
    leverage: Optional[float] = NA
    current_ratio: Optional[float] = NA
    ocf: Optional[float] = NA
    fcf: Optional[float] = NA
    fcf_to_capex: Optional[float] = NA

    def to_dict(self) -> dict:
        return asdict(self)


def trailing_mean(values: Sequence[float], n: int) -> Optional[float]:
    """Mean of the last ``n`` values, NA with fewer than ``n`` observations."""
    if len(values) < n:
        return NA
    return math.fsum(values[-n:]) / n


def ema(values: Sequence[float], span: int) -> list[Optional[float]]:
    """Exponential moving average with alpha = 2/(span+1), seeded by the simple
    mean of the first ``span`` values; entries before the seed are NA."""
    out: list[Optional[float]] = [NA] * len(values)
    if len(values) < span:
        return out
    alpha = 2.0 / (span + 1)
    cur = math.fsum(values[:span]) / span
    out[span - 1] = cur
    for i in range(span, len(values)):
        cur = alpha * values[i] + (1.0 - alpha) * cur
        out[i] = cur
    return out


def macd(closes: Sequence[float]) -> tuple[Optional[float], Optional[float], Optional[float]]:
    fast = ema(closes, MACD_FAST)
    slow = ema(closes, MACD_SLOW)
    line = [f - s for f, s in zip(fast, slow) if f is not None and s is not None]
    if not line:
        return NA, NA, NA
    signal = ema(line, MACD_SIGNAL)[-1]
    if signal is None:
        return line[-1], NA, NA
    return line[-1], signal, line[-1] - signal


def rsi(closes: Sequence[float], period: int = RSI_PERIOD) -> Optional[float]:
    """Wilder RSI. A flat window (no gains, no losses) reads 50."""
    if len(closes) < period + 1:
        return NA
    diffs = [b - a for a, b in zip(closes, closes[1:])]
    gain = math.fsum(max(d, 0.0) for d in diffs[:period]) / period
    loss = math.fsum(max(-d, 0.0) for d in diffs[:period]) / period
    for d in diffs[period:]:
        gain = (gain * (period - 1) + max(d, 0.0)) / period
        loss = (loss * (period - 1) + max(-d, 0.0)) / period
    if loss == 0.0:
        return 50.0 if gain == 0.0 else 100.0
    return 100.0 - 100.0 / (1.0 + gain / loss)


def pct_changes(closes: Sequence[float]) -> list[float]:
    return [100.0 * (b - a) / a for a, b in zip(closes, closes[1:])]


def sample_std(values: Sequence[float]) -> float:
    n = len(values)
    m = math.fsum(values) / n
    return math.sqrt(math.fsum((v - m) ** 2 for v in values) / (n - 1))


def tech_snapshot(history: Sequence[DailyBar]) -> TechSnapshot:
    """Indicators over ``history``, which must hold only bars dated before the decision day."""
    if not history:
        return TechSnapshot()
    closes = [b.close for b in history]
    vols = [b.volume for b in history]
    out = {"close": closes[-1], "vol": vols[-1]}
    if len(closes) >= 2:
        out["pre_close"] = closes[-2]
        out["change"] = closes[-1] - closes[-2]
        out["pct_chg"] = 100.0 * (closes[-1] - closes[-2]) / closes[-2]
    for n in WINDOWS:
        out[f"ma_{n}"] = trailing_mean(closes, n)
        out[f"vol_{n}"] = trailing_mean(vols, n)
    out["macd"], out["macd_signal"], out["macd_hist"] = macd(closes)
    out["rsi_14"] = rsi(closes)
    if len(closes) >= VOLATILITY_WINDOW + 1:
        out["volatility_20"] = sample_std(pct_changes(closes[-(VOLATILITY_WINDOW + 1):]))
    avg_vol = trailing_mean(vols, VOLUME_TREND_WINDOW)
    if avg_vol:
        out["volume_trend_20"] = vols[-1] / avg_vol
    return TechSnapshot(**out)


def fund_snapshot(report: Optional[QuarterlyReport]) -> FundSnapshot:
    if report is None:
        return FundSnapshot()
    fcf = report.ocf - report.capex
    return FundSnapshot(
        leverage=report.liabilities / report.assets,
        current_ratio=report.assets_current / report.liabilities_current if report.liabilities_current > 0 else NA,
        ocf=report.ocf,
        fcf=fcf,
        fcf_to_capex=fcf / report.capex if report.capex > 0 else NA,
    )
