"""Deterministic chartist/fundamentalist baseline and its trait-driven switch score."""

from __future__ import annotations

import numpy as np

from ..agents import Style
from ..config import RuleConfig, SwitchConfig
from ..ledger import Side
from .base import Action, DecisionContext, SwitchContext, SwitchDecision


def tech_rule(close, ma_30, macd_hist, band: float) -> tuple[Side, str]:
    if close is None or ma_30 is None or macd_hist is None:
        return Side.HOLD, "no signal (NA indicators)"
    if close > ma_30 * (1 + band) and macd_hist > 0:
        return Side.BUY, f"close {close:.2f} above ma_30 {ma_30:.2f} with positive MACD histogram"
    if close < ma_30 * (1 - band) and macd_hist < 0:
        return Side.SELL, f"close {close:.2f} below ma_30 {ma_30:.2f} with negative MACD histogram"
    return Side.HOLD, "trend signals mixed"


def fund_rule(fund, gap, rules: RuleConfig) -> tuple[Side, str]:
    cr, lev, fcf = fund.current_ratio, fund.leverage, fund.fcf
    flags = []
    if cr is not None and cr < rules.fund_current_ratio_min:
        flags.append(f"current ratio {cr:.2f}")
    if lev is not None and lev > rules.fund_leverage_max:
        flags.append(f"leverage {lev:.2f}")
    if fcf is not None and fcf < 0:
        flags.append("negative free cash flow")
    if flags:
        return Side.SELL, "balance-sheet risk: " + ", ".join(flags)
    if cr is None or lev is None or gap is None:
        return Side.HOLD, "no signal (NA fundamentals)"
    if gap > rules.fund_buy_gap:
        return Side.BUY, f"undervalued: mispricing gap {gap:.4f}"
    return Side.HOLD, "fundamentals sound, no valuation edge"


class RulePolicy:
    """Rule baseline. With ``ablation=True`` the switch ignores traits and
    follows a seeded coin."""

    kind = "rule"

    def __init__(self, rules: RuleConfig | None = None, switch: SwitchConfig | None = None,
                 seed: int = 0, ablation: bool = False):
        self.rules = rules or RuleConfig()
        self.switch_cfg = switch or SwitchConfig()
        self.seed = seed
        self.ablation = ablation
        if ablation:
            self.kind = "ablation"

    def decide_daily(self, ctx: DecisionContext) -> list[Action]:
        actions = []
        for t in ctx.tickers:
            if ctx.style is Style.TECH:
                s = ctx.tech[t]
                side, why = tech_rule(s.close, s.ma_30, s.macd_hist, self.rules.tech_band)
            else:
                side, why = fund_rule(ctx.fund[t], ctx.mispricing_gap.get(t), self.rules)
            actions.append(Action(t, side, 1.0, why))
        return actions

    def decide_daily_batch(self, ctxs: list[DecisionContext]) -> list[list[Action]]:
        return [self.decide_daily(c) for c in ctxs]

    def _uniform(self, agent_id: int, block_index: int, stream: int) -> float:
        rng = np.random.default_rng([self.seed, agent_id, block_index, stream])
        return float(rng.random())

    def score(self, ctx: SwitchContext) -> tuple[float, dict]:
        cfg = self.switch_cfg
        tr = ctx.traits
        n = ctx.n_total or 1
        signal = ctx.mispricing_signal
        toward = signal if ctx.current_style is Style.TECH else -signal
        parts = {
            "wealth": cfg.w_wealth * max(ctx.counterfactual_return - ctx.actual_return, 0.0) * tr.wealth_diff,
            "herding": cfg.w_herding * (ctx.n_opposite - ctx.n_current) / n * tr.herding,
            "mispricing": cfg.w_mispricing * max(toward, 0.0) * tr.mispricing,
            "loss": -cfg.w_loss * (1.0 if tr.loss_aversion and ctx.actual_return < 0 else 0.0),
            "jitter": cfg.jitter * (2.0 * self._uniform(ctx.agent_id, ctx.block_index, 0) - 1.0),
        }
        return sum(parts.values()), parts

    def decide_switch(self, ctx: SwitchContext) -> SwitchDecision:
        if self.ablation:
            u = self._uniform(ctx.agent_id, ctx.block_index, 1)
            go = u < self.switch_cfg.ablation_p
            return SwitchDecision(go, f"random regrouping draw {u:.4f} vs p={self.switch_cfg.ablation_p}", u)
        a, parts = self.score(ctx)
        go = a >= self.switch_cfg.tau
        detail = ", ".join(f"{k} {v:+.4f}" for k, v in parts.items())
        verdict = "switch" if go else "stay"
        return SwitchDecision(go, f"attractiveness {a:+.4f} ({detail}) vs tau {self.switch_cfg.tau} -> {verdict}",
                              a, parts)
