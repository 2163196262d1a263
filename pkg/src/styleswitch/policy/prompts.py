"""Prompt rendering for the chat-completion policy. Missing values render as ``NA``."""

from __future__ import annotations

from functools import lru_cache
from importlib import resources

from ..agents import DRIVERS, Style
from .base import DecisionContext, SwitchContext

NA_TOKEN = "NA"

TRAIT_NAMES = {
    "loss_aversion": "loss aversion",
    "herding": "herding",
    "wealth_diff": "wealth differentiation",
    "mispricing": "mispricing sensitivity",
}

DAILY_FORMAT = (
    'Respond with a JSON object only: {"side": "BUY" | "SELL" | "HOLD", '
    '"confidence": <number between 0 and 1>, "reason": "<short rationale>"}'
)
SWITCH_FORMAT = 'Respond with a JSON object only: {"switch": true | false, "reason": "<short rationale>"}'


@lru_cache(maxsize=None)
def template(name: str) -> str:
    return resources.files("styleswitch.resources.prompts").joinpath(f"{name}.txt").read_text(encoding="utf-8")


def fmt(value, digits: int = 4) -> str:
    if value is None:
        return NA_TOKEN
    if isinstance(value, float):
        return f"{value:.{digits}f}"
    return str(value)


def trading_prompt(ctx: DecisionContext, ticker: str) -> str:
    tech, fund = ctx.tech[ticker], ctx.fund[ticker]
    position = f"{ticker} shares={fmt(ctx.holdings.get(ticker, 0.0))} hold_streak={ctx.hold_streak.get(ticker, 0)}"
    if ctx.style is Style.FUND:
        return template("trading_fund").format(
            persona_prompt=ctx.persona_text,
            date=ctx.date,
            current_ratio=fmt(fund.current_ratio),
            leverage=fmt(fund.leverage),
            free_cash_flow=fmt(fund.fcf, 0),
            fcf_to_capex=fmt(fund.fcf_to_capex),
            position=position,
            ret1d=fmt(ctx.ret_1d(ticker)),
        )
    return template("trading_tech").format(
        persona_prompt=ctx.persona_text,
        date=ctx.date,
        price=fmt(tech.close),
        Pre_close_price=fmt(tech.pre_close),
        change=fmt(tech.change),
        pct_chg=fmt(tech.pct_chg),
        macd=fmt(tech.macd),
        macd_signal=fmt(tech.macd_signal),
        macd_hist=fmt(tech.macd_hist),
        vol=fmt(tech.volatility_20),
        volume_trend=fmt(tech.volume_trend_20),
        ret1d=fmt(ctx.ret_1d(ticker)),
        position=position,
    )


def trait_line(ctx: SwitchContext) -> str:
    return "; ".join(
        f"{'aligned' if ctx.traits.bit(d) else 'not aligned'} with {TRAIT_NAMES[d]}" for d in DRIVERS
    )


def holdings_text(ctx: SwitchContext) -> str:
    parts = []
    for h in ctx.holdings:
        f = h.fund
        parts.append(
            f"Stock {h.ticker}: Shares {fmt(h.shares)}, Price {fmt(h.price)}, "
            f"Debt-to-Asset Ratio {fmt(f.leverage)}, Current Ratio {fmt(f.current_ratio)}, "
            f"Net Operating Cash Flow {fmt(f.ocf, 0)}, Free Cash Flow {fmt(f.fcf, 0)}."
        )
    return " ".join(parts)


def switch_prompt(ctx: SwitchContext) -> str:
    return template("switching").format(
        current_style=ctx.current_style.value,
        traits=trait_line(ctx),
        holdings=holdings_text(ctx),
        current_fund=fmt(ctx.cash, 2),
        opposite_profit=fmt(ctx.opposite_style_avg_profit, 2),
        num_current=ctx.n_current,
        num_opposite=ctx.n_opposite,
    )
