
import pytest
from hypothesis import given, settings, strategies as st

from styleswitch.ledger import (
    BlockRecord, Ledger, LedgerError, Side, block_return, init_portfolio, sync_counterfactual,
)

TICKERS = ("MSFT", "ICE", "VRTX", "CAT", "CLX")


def fresh(prices=None):
    prices = prices or {t: 100.0 for t in TICKERS}
    return init_portfolio(Ledger(), prices, 100_000.0), prices


def test_init_example():
    prices = {"MSFT": 400.0, "ICE": 125.0, "VRTX": 400.0, "CAT": 290.0, "CLX": 145.0}
    led, _ = fresh(prices)
    assert led.shares("MSFT") == 25.0
    assert led.cash == 50_000.0
    assert led.wealth(prices) == 100_000.0
    values = {t: led.shares(t) * p for t, p in prices.items()}
    assert all(v == pytest.approx(10_000.0, abs=1e-9) for v in values.values())


def test_buy_example():
    led, prices = fresh()
    ex = led.execute("2024-01-02", "MSFT", Side.BUY, 100.0, prices)
    assert ex.cash_delta == -10_000.0
    assert ex.shares == 100.0
    assert led.shares("MSFT") == 200.0
    assert led.cash == 40_000.0


def test_sell_entire_position():
    prices = {"MSFT": 400.0, "ICE": 125.0, "VRTX": 400.0, "CAT": 290.0, "CLX": 145.0}
    led, _ = fresh(prices)
    cash = led.cash
    ex = led.execute("2024-01-02", "MSFT", Side.SELL, 400.0, prices)
    assert ex.shares == 25.0
    assert led.cash == cash + 10_000.0
    assert led.shares("MSFT") == 0.0


def test_hold_only_bumps_streak():
    led, prices = fresh()
    before = (led.cash, {t: led.shares(t) for t in TICKERS}, len(led.trade_log))
    led.execute("2024-01-02", "ICE", Side.HOLD, 100.0, prices)
    assert (led.cash, {t: led.shares(t) for t in TICKERS}, len(led.trade_log)) == before
    assert led.hold_streak["ICE"] == 1
    led.execute("2024-01-03", "ICE", Side.HOLD, 100.0, prices)
    assert led.hold_streak["ICE"] == 2
    led.execute("2024-01-04", "ICE", Side.BUY, 100.0, prices)
    assert led.hold_streak["ICE"] == 0


def test_degraded_orders_are_logged_holds():
    led, prices = fresh()
    led.execute("d", "MSFT", Side.SELL, 100.0, prices)
    ex = led.execute("d", "MSFT", Side.SELL, 100.0, prices)
    assert ex.side == "Hold" and "no shares" in ex.note
    led.cash = 0.0
    ex = led.execute("d", "ICE", Side.BUY, 100.0, prices)
    assert ex.side == "Hold" and "no cash" in ex.note


def test_buy_capped_by_cash():
    led, prices = fresh()
    led.cash = 3_000.0
    led.execute("d", "CAT", Side.BUY, 100.0, prices)
    assert led.cash == 0.0


def test_entry_price_is_volume_weighted():
    led, prices = fresh()
    led.execute("d", "MSFT", Side.BUY, 200.0, prices)
    # 100 shares at 100 plus 50 at 200
    assert led.positions["MSFT"].entry_price == pytest.approx(20_000.0 / 150.0)


def test_dividend_credit():
    led, _ = fresh()
    ex = led.credit_dividend("d", "MSFT", 0.75)
    assert ex.cash_delta == 75.0 and led.cash == 50_075.0
    assert led.credit_dividend("d", "MSFT", 0.0) is None


def test_block_return():
    led, prices = fresh()
    led.block_start_wealth = 100_000.0
    led.cash += 3_000.0
    assert block_return(led, prices) == pytest.approx(0.03)
    led2, prices2 = fresh()
    assert block_return(led2, prices2) == 0.0


def test_twin_ledgers_over_three_days():
    actual, prices = fresh()
    shadow = actual.copy()
    days = [{t: 100.0 for t in TICKERS}, {t: 110.0 for t in TICKERS}, {t: 121.0 for t in TICKERS}]
    # actual holds, shadow buys MSFT at 100 on day 1 and sells it at 110 on day 2
    shadow.execute("1", "MSFT", Side.BUY, 100.0, days[0])
    shadow.execute("2", "MSFT", Side.SELL, 110.0, days[1])
    closes = days[2]
    r = block_return(actual, closes)
    r_bar = block_return(shadow, closes)
    # actual: 50k cash + 500 shares at 121 = 110500
    assert r == pytest.approx(0.105)
    # shadow: buy 10000 of MSFT leaves 40000 cash, selling 200 shares at 110 adds 22000
    assert r_bar == pytest.approx((62_000.0 + 400 * 121.0) / 100_000.0 - 1.0)
    assert r_bar < r


def test_sync_copy_and_idempotent():
    actual, prices = fresh()
    shadow = actual.copy()
    shadow.execute("d", "MSFT", Side.SELL, 100.0, prices)
    sync_counterfactual(actual, shadow)
    assert shadow.wealth(prices) == actual.wealth(prices)
    once = shadow.digest()
    sync_counterfactual(actual, shadow)
    assert shadow.digest() == once
    shadow.execute("d", "ICE", Side.SELL, 100.0, prices)
    assert actual.shares("ICE") == 100.0


def test_counterfactual_isolation():
    actual, prices = fresh()
    shadow = actual.copy()
    h = actual.digest()
    for side in (Side.BUY, Side.SELL, Side.HOLD):
        for t in TICKERS:
            shadow.execute("d", t, side, 101.0, prices)
    assert actual.digest() == h


def test_rejects_bad_fill():
    led, prices = fresh()
    with pytest.raises(LedgerError):
        led.execute("d", "MSFT", Side.BUY, 0.0, prices)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.sampled_from(TICKERS), st.sampled_from(list(Side)),
                          st.floats(min_value=1.0, max_value=1000.0)), max_size=60))
def test_conservation_and_solvency(orders):
    led, prices = fresh()
    for t, side, px in orders:
        prices = dict(prices, **{t: px})
        ex = led.execute("d", t, side, px, prices)
        signed = ex.shares if ex.side == "Buy" else -ex.shares if ex.side == "Sell" else 0.0
        assert abs(ex.cash_delta + px * signed) < 1e-9
        assert led.cash >= 0.0
        assert all(p.shares >= 0.0 for p in led.positions.values())


def test_block_record_roundtrip():
    rec = BlockRecord(1, 2, "2024-01-02", "2024-01-16", "Tech", 0.01, 0.02, True, 0.5, 16, 16, "why")
    assert BlockRecord.from_dict(rec.to_dict()) == rec
