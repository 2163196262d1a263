"""Year-long simulation loop: daily decide/execute on twin ledgers, block reviews."""

from __future__ import annotations

import bisect
import logging
import math
from dataclasses import dataclass, field
from datetime import date
from typing import Mapping, Optional, Sequence

from . import metrics
from .agents import AgentMemory, AgentSpec, Style
from .config import SimConfig
from .indicators import fund_snapshot, tech_snapshot
from .ledger import BlockRecord, Ledger, block_return, init_portfolio, sync_counterfactual
from .market_data import DataError, StockSeries, bars_asof, calendar, latest_report, load_series
from .policy import DecisionContext, HoldingView, LLMPolicy, RulePolicy, SwitchContext

log = logging.getLogger(__name__)


@dataclass
class MarketData:
    pool: list[StockSeries]
    auxiliary: dict[str, StockSeries]

    @property
    def tickers(self) -> tuple[str, ...]:
        return tuple(s.ticker for s in self.pool)


@dataclass
class RunLog:
    trades: list[dict]
    blocks: list[BlockRecord]
    snapshots: list[dict]
    final_wealth: dict[int, float]
    days: list[date]
    policy_failures: list[str] = field(default_factory=list)


def load_market(cfg: SimConfig) -> MarketData:
    pool = [load_series(cfg.resolve(t.prices), cfg.resolve(t.reports), t.ticker, t.sector, t.shares_outstanding)
            for t in cfg.pool]
    aux = {s: load_series(cfg.resolve(t.prices), cfg.resolve(t.reports), t.ticker, t.sector, t.shares_outstanding)
           for s, t in cfg.auxiliary.items()}
    return MarketData(pool, aux)


def make_policy(cfg: SimConfig):
    if cfg.mode == "llm":
        return LLMPolicy(cfg.llm)
    return RulePolicy(cfg.rules, cfg.switch, cfg.seed, ablation=cfg.mode == "ablation")


def population_shares(styles: Mapping[int, Style]) -> dict[Style, int]:
    counts = {Style.TECH: 0, Style.FUND: 0}
    for s in styles.values():
        counts[s] += 1
    return counts


class MispricingSignals:
    """Point-in-time mispricing gaps: the sector model is fitted on auxiliary
    pairs whose forward window has closed by the anchor day, and the pool
    stock is seen only up to that day, so the gap is the prediction alone."""

    def __init__(self, data: MarketData, horizon: int, min_pairs: int):
        self.data = data
        self.horizon = horizon
        self.min_pairs = min_pairs
        self._pairs = {s: metrics.all_regression_pairs(a, horizon) for s, a in data.auxiliary.items()}
        self._pair_ends = {s: [p[1] for p in pairs] for s, pairs in self._pairs.items()}
        self._models: dict[tuple[str, date], Optional[metrics.MispricingModel]] = {}

    def model(self, sector: str, end: date) -> Optional[metrics.MispricingModel]:
        key = (sector, end)
        if key not in self._models:
            if sector not in self._pairs:
                raise metrics.RegressionError(f"no auxiliary series for sector {sector}")
            k = bisect.bisect_right(self._pair_ends[sector], end)
            pairs = [(a, x, y) for a, _, x, y in self._pairs[sector][:k]]
            try:
                self._models[key] = metrics.fit_pairs(pairs, self.data.auxiliary[sector].ticker, self.min_pairs)
            except metrics.RegressionError as exc:
                log.debug("no mispricing model for %s at %s: %s", sector, end, exc)
                self._models[key] = None
        return self._models[key]

    def gap(self, series: StockSeries, anchor: date) -> Optional[float]:
        model = self.model(series.sector, anchor)
        if model is None:
            return None
        return metrics.mispricing_gap(series.truncated(anchor), anchor, model, self.horizon)

    def realized_level(self, start: date, today: date) -> Optional[float]:
        """Mean over the pool of |prediction at ``start`` - return from ``start``
        to ``today``|, using only bars up to ``today``."""
        errs = []
        for s in self.data.pool:
            model = self.model(s.sector, start)
            i = s.index_of(start)
            x = metrics.valuation_x(s, i)
            if model is None or x is None:
                return None
            c0 = s.bars[i].close
            errs.append(abs(model.predict(x) - (s.bar(today).close - c0) / c0))
        return math.fsum(errs) / len(errs)

    def evaluation(self, anchor: date) -> Optional[float]:
        """Mean |predicted - realized| forward return, for scoring only (looks ahead)."""
        models = {}
        for s in self.data.pool:
            m = self.model(s.sector, anchor)
            if m is None:
                return None
            models[s.sector] = m
        return metrics.mispricing_magnitude(self.data.pool, anchor, models, self.horizon)


def _trade_line(day: str, agent_id: int, book: str, ex) -> dict:
    line = {
        "day": day, "event": "trade", "agent_id": agent_id, "ledger": book, "ticker": ex.ticker, "side": ex.side,
        "fill_price": ex.fill_price, "shares": ex.shares, "cash_after": ex.cash_after,
    }
    if ex.note:
        line["note"] = ex.note
    return line


def run(cfg: SimConfig, data: MarketData, population: Sequence[AgentSpec], policy=None) -> RunLog:
    policy = policy or make_policy(cfg)
    tickers = data.tickers
    days = calendar(data.pool, cfg.start, cfg.end)
    if not days:
        raise DataError("no trading days in the configured calendar range")
    for s in list(data.pool) + list(data.auxiliary.values()):
        have = set(s.dates)
        for d in days:
            if d not in have:
                raise DataError(f"{s.ticker}: no bar on calendar day {d}")
        if s.dates[0] >= days[0]:
            raise DataError(f"{s.ticker}: no history before first simulated day {days[0]}")

    signals = MispricingSignals(data, cfg.mispricing.horizon, cfg.mispricing.min_pairs)

    # day t decisions see bars up to t-1; fills happen at close(t-1)
    def market_view(t: date):
        tech, fund, gap, fill = {}, {}, {}, {}
        for s in data.pool:
            hist = bars_asof(s, t)
            tech[s.ticker] = tech_snapshot(hist)
            fund[s.ticker] = fund_snapshot(latest_report(s, t))
            gap[s.ticker] = signals.gap(s, hist[-1].date)
            fill[s.ticker] = hist[-1].close
        return tech, fund, gap, fill

    w0 = cfg.initial_wealth
    init_prices = {s.ticker: bars_asof(s, days[0])[-1].close for s in data.pool}
    actual: dict[int, Ledger] = {}
    shadow: dict[int, Ledger] = {}
    memory: dict[int, AgentMemory] = {}
    for a in population:
        actual[a.id] = init_portfolio(Ledger(), init_prices, w0, cfg.sizing.equity_share, cfg.sizing.per_stock)
        shadow[a.id] = actual[a.id].copy()
        memory[a.id] = AgentMemory(a.initial_style, ledger=actual[a.id])
    agents = {a.id: a for a in population}
    ids = sorted(agents)

    trades: list[dict] = []
    snapshots: list[dict] = []
    blocks: list[BlockRecord] = []
    block_first = days[0]
    past_levels: list[float] = []
    logged = {i: (0, 0) for i in ids}

    for k, t in enumerate(days):
        day = t.isoformat()
        tech, fund, gap, fill = market_view(t)
        for tk in tickers:
            snapshots.append({"day": day, "event": "snapshot", "ticker": tk, "tech": tech[tk].to_dict(),
                              "fund": fund[tk].to_dict(), "mispricing_gap": gap[tk]})

        ctxs = []
        for i in ids:
            style = memory[i].current_style
            for book, st in ((actual[i], style), (shadow[i], style.opposite)):
                ctxs.append(DecisionContext(
                    agent_id=i, date=day, style=st, tickers=tickers, tech=tech, fund=fund,
                    mispricing_gap=gap, holdings={tk: book.shares(tk) for tk in tickers},
                    cash=book.cash, hold_streak=dict(book.hold_streak), persona_text=agents[i].persona_text,
                ))
        decisions = policy.decide_daily_batch(ctxs)

        closes = {s.ticker: s.bar(t).close for s in data.pool}
        for n, i in enumerate(ids):
            for book, acts in ((actual[i], decisions[2 * n]), (shadow[i], decisions[2 * n + 1])):
                for act in acts:
                    book.execute(day, act.ticker, act.side, fill[act.ticker], fill,
                                 cfg.sizing.buy_fraction, cfg.sizing.sell_fraction)
                for s in data.pool:
                    div = s.bar(t).dividend
                    if div > 0:
                        book.credit_dividend(day, s.ticker, div)
            for name, book in (("actual", actual[i]), ("counterfactual", shadow[i])):
                start = logged[i][0 if name == "actual" else 1]
                for ex in book.trade_log[start:]:
                    trades.append(_trade_line(day, i, name, ex))
            logged[i] = (len(actual[i].trade_log), len(shadow[i].trade_log))
            for a in decisions[2 * n]:
                if a.side.value != "Hold":
                    memory[i].rationale_log.append(f"{day} {a.ticker} {a.side.value}: {a.reason}")

        # a trailing partial block gets no review
        if (k + 1) % cfg.block_length:
            continue

        # block review: styles are frozen, every agent sees the same share snapshot
        b = (k + 1) // cfg.block_length
        styles = {i: memory[i].current_style for i in ids}
        shares = population_shares(styles)
        total = len(ids)
        pnl = {i: actual[i].wealth(closes) - actual[i].block_start_wealth for i in ids}
        # mispricing signal: the gap realized so far, positive (toward Fund) when
        # wider than at recent reviews and negative (toward Tech) otherwise
        level = signals.realized_level(block_first, t)
        recent = past_levels[-cfg.mispricing.signal_lookback:]
        m_signal = 0.0
        if level is not None and recent:
            m_signal = level if level > math.fsum(recent) / len(recent) else -level
        if level is not None:
            past_levels.append(level)
        sctxs = []
        for i in ids:
            cur = styles[i]
            opp = [pnl[j] for j in ids if styles[j] is cur.opposite]
            sctxs.append(SwitchContext(
                agent_id=i, block_index=b, date=day, current_style=cur, traits=agents[i].traits,
                holdings=[HoldingView(tk, actual[i].shares(tk), closes[tk], fund[tk]) for tk in tickers],
                cash=actual[i].cash, block_pnl=pnl[i], ytd_pnl=actual[i].wealth(closes) - w0,
                opposite_style_avg_profit=math.fsum(opp) / len(opp) if opp else 0.0,
                n_current=shares[cur], n_opposite=shares[cur.opposite],
                actual_return=block_return(actual[i], closes),
                counterfactual_return=block_return(shadow[i], closes),
                mispricing_signal=m_signal, persona_text=agents[i].persona_text,
            ))
        batch = getattr(policy, "decide_switch_batch", None)
        verdicts = batch(sctxs) if batch else [policy.decide_switch(c) for c in sctxs]
        for ctx, v in zip(sctxs, verdicts):
            i = ctx.agent_id
            rec = BlockRecord(
                agent_id=i, block_index=b, start_date=block_first.isoformat(), end_date=day,
                style=ctx.current_style.value, actual_return=ctx.actual_return,
                counterfactual_return=ctx.counterfactual_return, switch=bool(v.switch),
                population_share_other=ctx.n_opposite / total, n_current=ctx.n_current,
                n_opposite=ctx.n_opposite, rationale=v.reason,
                wealth_end=actual[i].wealth(closes), counterfactual_wealth_end=shadow[i].wealth(closes),
            )
            blocks.append(rec)
            memory[i].block_summaries.append(rec)
            memory[i].rationale_log.append(f"block {b}: {'switch' if v.switch else 'stay'}: {v.reason}")
            if v.switch:
                memory[i].current_style = ctx.current_style.opposite
            actual[i].block_start_wealth = rec.wealth_end
            sync_counterfactual(actual[i], shadow[i])
        if k + 1 < len(days):
            block_first = days[k + 1]

    # scoring-only field: needs realized forward returns past the review date
    evals = {}
    for rec in blocks:
        if rec.start_date not in evals:
            evals[rec.start_date] = signals.evaluation(date.fromisoformat(rec.start_date))
        rec.mispricing_eval = evals[rec.start_date]

    last = {s.ticker: s.bar(days[-1]).close for s in data.pool}
    return RunLog(
        trades=trades, blocks=blocks, snapshots=snapshots,
        final_wealth={i: actual[i].wealth(last) for i in ids}, days=days,
        policy_failures=list(getattr(policy, "failures", [])),
    )


def replay_final_wealth(trades: Sequence[dict], init_prices: Mapping[str, float], cfg: SimConfig,
                        final_closes: Mapping[str, float], agent_ids: Sequence[int]) -> dict[int, float]:
    """Rebuild every actual ledger from fill prices and share counts in the
    trade log and value it at ``final_closes``."""
    books = {i: init_portfolio(Ledger(), init_prices, cfg.initial_wealth, cfg.sizing.equity_share,
                               cfg.sizing.per_stock) for i in agent_ids}
    for line in trades:
        if line.get("ledger") != "actual":
            continue
        book = books[line["agent_id"]]
        pos = book.positions[line["ticker"]]
        amount = line["fill_price"] * line["shares"]
        if line["side"] == "Buy":
            pos.shares += line["shares"]
            book.cash -= amount
        elif line["side"] == "Sell":
            pos.shares -= line["shares"]
            book.cash += amount
        elif line["side"] == "Dividend":
            book.cash += amount
    return {i: b.wealth(final_closes) for i, b in sorted(books.items())}
