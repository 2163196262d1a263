"""Long-only, unlevered portfolio ledgers (actual and counterfactual) and block records."""

from __future__ import annotations

import copy
import hashlib
import json
import math
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Mapping, Optional


class Side(str, Enum):
    BUY = "Buy"
    SELL = "Sell"
    HOLD = "Hold"


class LedgerError(ValueError):
    pass


@dataclass
class Position:
    ticker: str
    shares: float = 0.0
    entry_price: float = 0.0


@dataclass(frozen=True)
class Execution:
    day: str
    ticker: str
    side: str
    fill_price: float
    shares: float
    cash_delta: float
    cash_after: float
    note: str = ""


@dataclass
class Ledger:
    cash: float = 0.0
    positions: dict[str, Position] = field(default_factory=dict)
    trade_log: list[Execution] = field(default_factory=list)
    block_start_wealth: float = 0.0
    hold_streak: dict[str, int] = field(default_factory=dict)

    def shares(self, ticker: str) -> float:
        pos = self.positions.get(ticker)
        return pos.shares if pos else 0.0

    def wealth(self, prices: Mapping[str, float]) -> float:
        total = self.cash + math.fsum(p.shares * prices[t] for t, p in self.positions.items() if p.shares)
        if not math.isfinite(total):
            raise LedgerError("non-finite wealth")
        return total

    def digest(self) -> str:
        state = {
            "cash": self.cash,
            "positions": {t: [p.shares, p.entry_price] for t, p in sorted(self.positions.items())},
            "hold_streak": dict(sorted(self.hold_streak.items())),
            "n_trades": len(self.trade_log),
            "block_start_wealth": self.block_start_wealth,
        }
        return hashlib.sha256(json.dumps(state, sort_keys=True).encode()).hexdigest()

    def _hold(self, day: str, ticker: str, fill_price: float, note: str = "") -> Execution:
        self.hold_streak[ticker] = self.hold_streak.get(ticker, 0) + 1
        ex = Execution(day, ticker, Side.HOLD.value, fill_price, 0.0, 0.0, self.cash, note)
        if note:
            self.trade_log.append(ex)
        return ex

    def execute(
        self,
        day: str,
        ticker: str,
        side: Side,
        fill_price: float,
        prices: Mapping[str, float],
        buy_fraction: float = 0.10,
        sell_fraction: float = 1.0,
    ) -> Execution:
        """Fill one order at ``fill_price``; ``prices`` values the book for Buy sizing.

        Holds only touch ``hold_streak``. A Buy without cash or a Sell without
        shares degrades to Hold and is logged with a note.
        """
        if not fill_price > 0:
            raise LedgerError(f"{ticker}: non-positive fill price {fill_price}")
        side = Side(side)
        if side is Side.HOLD:
            return self._hold(day, ticker, fill_price)

        pos = self.positions.setdefault(ticker, Position(ticker))
        if side is Side.BUY:
            if self.cash <= 0.0:
                return self._hold(day, ticker, fill_price, "degraded: buy with no cash")
            spend = min(self.cash, buy_fraction * self.wealth(prices))
            if spend <= 0.0:
                return self._hold(day, ticker, fill_price, "degraded: zero buy size")
            qty = spend / fill_price
            pos.entry_price = (pos.shares * pos.entry_price + spend) / (pos.shares + qty)
            pos.shares += qty
            # spend == cash lands exactly on zero, never below
            self.cash = self.cash - spend if spend < self.cash else 0.0
            cash_delta = -spend
        else:
            if pos.shares <= 0.0:
                return self._hold(day, ticker, fill_price, "degraded: sell with no shares")
            qty = pos.shares * sell_fraction
            proceeds = qty * fill_price
            pos.shares = pos.shares - qty if sell_fraction < 1.0 else 0.0
            if pos.shares == 0.0:
                pos.entry_price = 0.0
            self.cash += proceeds
            cash_delta = proceeds
        self.hold_streak[ticker] = 0
        ex = Execution(day, ticker, side.value, fill_price, qty, cash_delta, self.cash)
        self.trade_log.append(ex)
        return ex

    def credit_dividend(self, day: str, ticker: str, per_share: float) -> Optional[Execution]:
        held = self.shares(ticker)
        if per_share <= 0.0 or held <= 0.0:
            return None
        amount = held * per_share
        self.cash += amount
        ex = Execution(day, ticker, "Dividend", per_share, held, amount, self.cash)
        self.trade_log.append(ex)
        return ex

    def copy(self) -> "Ledger":
        return copy.deepcopy(self)


def init_portfolio(
    ledger: Ledger, prices: Mapping[str, float], initial_wealth: float,
    equity_share: float = 0.5, per_stock: float = 0.10,
) -> Ledger:
    """Half the wealth in cash, ``per_stock`` of it in each pool stock (fractional shares)."""
    for t, p in prices.items():
        if not p > 0:
            raise LedgerError(f"{t}: non-positive initial price {p}")
    if abs(per_stock * len(prices) - equity_share) > 1e-12:
        raise LedgerError("per-stock allocations must add up to the equity share")
    ledger.cash = (1.0 - equity_share) * initial_wealth
    ledger.positions = {
        t: Position(t, per_stock * initial_wealth / p, p) for t, p in prices.items()
    }
    ledger.hold_streak = {t: 0 for t in prices}
    ledger.block_start_wealth = initial_wealth
    return ledger


def block_return(ledger: Ledger, closes: Mapping[str, float]) -> float:
    start = ledger.block_start_wealth
    if start <= 0:
        raise LedgerError("block start wealth must be positive")
    return (ledger.wealth(closes) - start) / start


def sync_counterfactual(actual: Ledger, counterfactual: Ledger) -> Ledger:
    """Reset the shadow book to the actual book, keeping its own trade history."""
    counterfactual.cash = actual.cash
    counterfactual.positions = copy.deepcopy(actual.positions)
    counterfactual.hold_streak = dict(actual.hold_streak)
    counterfactual.block_start_wealth = actual.block_start_wealth
    return counterfactual


@dataclass
class BlockRecord:
    agent_id: int
    block_index: int
    start_date: str
    end_date: str
    style: str
    actual_return: float
    counterfactual_return: float
    switch: bool
    population_share_other: float
    n_current: int
    n_opposite: int
    rationale: str
    wealth_end: float = 0.0
    counterfactual_wealth_end: float = 0.0
    # evaluation-time only: mean |predicted - realized| forward return over the pool
    # at this block's start date, None when the forward window is unavailable
    mispricing_eval: Optional[float] = None

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: Mapping) -> "BlockRecord":
        return cls(**d)
