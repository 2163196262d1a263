"""Per-agent alignment scores and the sector valuation regression.

Block conventions: a BlockRecord for block b carries the style held during b
and the switch decision taken at its end, so the style adopted at the end of
block b differs from the one adopted at the end of b-1 exactly when
``record.switch`` is true. Events are counted for b = 2..B.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from datetime import date
from typing import Mapping, Optional, Sequence

from .ledger import BlockRecord
from .market_data import StockSeries

log = logging.getLogger(__name__)

FORWARD_HORIZON = 20
MIN_FIT_PAIRS = 30

SCORE_COLUMNS = ("agent_id", "las", "has", "aas", "mas", "n_stay", "n_switch")


class RegressionError(ValueError):
    pass


@dataclass(frozen=True)
class AgentScoreRow:
    agent_id: int
    las: float
    has: float
    aas: float
    mas: float
    n_stay: int
    n_switch: int

    def as_row(self) -> list:
        return [self.agent_id, self.las, self.has, self.aas, self.mas, self.n_stay, self.n_switch]


def _ordered(blocks: Sequence[BlockRecord]) -> list[BlockRecord]:
    return sorted(blocks, key=lambda r: r.block_index)


def events(blocks: Sequence[BlockRecord]) -> tuple[list[BlockRecord], list[BlockRecord]]:
    """(stay, switch) records among blocks 2..B."""
    recs = _ordered(blocks)[1:]
    return [r for r in recs if not r.switch], [r for r in recs if r.switch]


def _mean(values: list[float]) -> float:
    return math.fsum(values) / len(values) if values else 0.0


def las(blocks: Sequence[BlockRecord]) -> float:
    recs = _ordered(blocks)
    vals = []
    for prev, cur in zip(recs, recs[1:]):
        if cur.switch:
            continue
        drop = prev.actual_return - cur.actual_return
        vals.append(drop if cur.actual_return < prev.actual_return else 0.0)
    return _mean(vals)


def has(blocks: Sequence[BlockRecord]) -> float:
    _, switches = events(blocks)
    return _mean([r.population_share_other for r in switches])


def aas(blocks: Sequence[BlockRecord]) -> float:
    _, switches = events(blocks)
    return _mean([max(r.counterfactual_return - r.actual_return, 0.0) for r in switches])


def mas(blocks: Sequence[BlockRecord]) -> float:
    """Mispricing magnitude summed over Tech->Fund switches minus Fund->Tech switches."""
    _, switches = events(blocks)
    to_fund, to_tech = [], []
    for r in switches:
        if r.mispricing_eval is None:
            log.info("agent %s block %s: switch without a full forward window, excluded from MAS",
                     r.agent_id, r.block_index)
            continue
        (to_fund if r.style == "Tech" else to_tech).append(r.mispricing_eval)
    return math.fsum(to_fund) - math.fsum(to_tech)


def score_agent(agent_id: int, blocks: Sequence[BlockRecord]) -> AgentScoreRow:
    stay, switch = events(blocks)
    return AgentScoreRow(agent_id, las(blocks), has(blocks), aas(blocks), mas(blocks), len(stay), len(switch))


def score_all(blocks: Sequence[BlockRecord]) -> dict[int, AgentScoreRow]:
    by_agent: dict[int, list[BlockRecord]] = {}
    for r in blocks:
        by_agent.setdefault(r.agent_id, []).append(r)
    return {aid: score_agent(aid, recs) for aid, recs in sorted(by_agent.items())}


# --- valuation regression -------------------------------------------------

@dataclass(frozen=True)
class MispricingModel:
    alpha: float
    beta: float
    fit_start: date
    fit_end: date
    auxiliary_ticker: str
    n_obs: int

    def predict(self, x: float) -> float:
        return self.alpha + self.beta * x


def ocf_asof(series: StockSeries, d: date) -> Optional[float]:
    """OCF from the latest report filed on or before ``d`` (known by that day's close)."""
    best = None
    for rep in series.reports:
        if rep.filing_date <= d:
            best = rep
        else:
            break
    return best.ocf if best is not None else None


def valuation_x(series: StockSeries, i: int) -> Optional[float]:
    """Market cap over latest OCF at bar ``i``; NA without a usable positive OCF."""
    ocf = ocf_asof(series, series.bars[i].date)
    if ocf is None or ocf <= 0.0:
        return None
    return series.bars[i].close * series.shares_outstanding / ocf


def forward_return(series: StockSeries, i: int, horizon: int = FORWARD_HORIZON) -> Optional[float]:
    if i + horizon >= len(series.bars):
        return None
    c0 = series.bars[i].close
    return (series.bars[i + horizon].close - c0) / c0


def all_regression_pairs(series: StockSeries, horizon: int = FORWARD_HORIZON) -> list[tuple[date, date, float, float]]:
    """(anchor date, forward-window end date, X, Y) for every usable anchor."""
    out = []
    for i in range(len(series.bars) - horizon):
        x = valuation_x(series, i)
        if x is None:
            continue
        out.append((series.bars[i].date, series.bars[i + horizon].date, x, forward_return(series, i, horizon)))
    return out


def regression_pairs(series: StockSeries, end: date, horizon: int = FORWARD_HORIZON) -> list[tuple[date, float, float]]:
    """(anchor date, X, Y) pairs whose forward window closes on or before ``end``."""
    return [(a, x, y) for a, e, x, y in all_regression_pairs(series, horizon) if e <= end]


def ols(xs: Sequence[float], ys: Sequence[float]) -> tuple[float, float]:
    n = len(xs)
    mx = math.fsum(xs) / n
    my = math.fsum(ys) / n
    sxx = math.fsum((x - mx) ** 2 for x in xs)
    if sxx <= 1e-12 * max(1.0, mx * mx) * n:
        raise RegressionError("degenerate regressor")
    sxy = math.fsum((x - mx) * (y - my) for x, y in zip(xs, ys))
    beta = sxy / sxx
    return my - beta * mx, beta


def fit_pairs(pairs: Sequence[tuple[date, float, float]], ticker: str,
              min_pairs: int = MIN_FIT_PAIRS) -> MispricingModel:
    if len(pairs) < min_pairs:
        raise RegressionError(f"{ticker}: {len(pairs)} usable pairs, need {min_pairs}")
    alpha, beta = ols([p[1] for p in pairs], [p[2] for p in pairs])
    if not (math.isfinite(alpha) and math.isfinite(beta)):
        raise RegressionError(f"{ticker}: non-finite coefficients")
    return MispricingModel(alpha, beta, pairs[0][0], pairs[-1][0], ticker, len(pairs))


def fit_mispricing(aux: StockSeries, end: date, horizon: int = FORWARD_HORIZON,
                   min_pairs: int = MIN_FIT_PAIRS) -> MispricingModel:
    """OLS of the forward return on the valuation proxy, expanding window up to ``end``."""
    return fit_pairs(regression_pairs(aux, end, horizon), aux.ticker, min_pairs)


def mispricing_gap(series: StockSeries, anchor: date, model: MispricingModel,
                   horizon: int = FORWARD_HORIZON) -> Optional[float]:
    """Predicted minus realized forward return at ``anchor``; the prediction
    alone when the series has no full forward window past the anchor.
    Positive reads as undervalued."""
    i = series.index_of(anchor)
    x = valuation_x(series, i)
    if x is None:
        return None
    fwd = forward_return(series, i, horizon)
    return model.predict(x) - (fwd if fwd is not None else 0.0)


def mispricing_magnitude(pool: Sequence[StockSeries], anchor: date,
                         models: Mapping[str, MispricingModel],
                         horizon: int = FORWARD_HORIZON) -> Optional[float]:
    """Mean |predicted - realized| forward return over the pool at ``anchor``.
    None unless every stock has a full forward window and a usable report."""
    errs = []
    for s in pool:
        if s.sector not in models:
            raise RegressionError(f"no mispricing model for sector {s.sector}")
        i = s.index_of(anchor)
        x = valuation_x(s, i)
        fwd = forward_return(s, i, horizon)
        if x is None or fwd is None:
            return None
        errs.append(abs(models[s.sector].predict(x) - fwd))
    return math.fsum(errs) / len(errs)
