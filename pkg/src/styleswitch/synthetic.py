"""Seeded synthetic market: five pool stocks plus one auxiliary stock per sector.

Prices follow a latent log-value with regime-switching market drift; a
sector-level valuation deviation mean-reverts, so the valuation proxy
(market cap over quarterly OCF) carries information about 20-day forward
returns. Files are written in the loader's CSV layout together with a
ready-to-run config.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from datetime import date, timedelta
from pathlib import Path

import numpy as np
import yaml

from .market_data import PRICE_COLUMNS, REPORT_COLUMNS

SIM_START = date(2024, 1, 2)
SIM_DAYS = 253
WARMUP_DAYS = 250
TRAILING_DAYS = 25

# Herding and mispricing weights used by the shipped fixture. The defaults
# (0.5 and 0.5) let the herding term lock the majority in place, which leaves
# half of the herding cohort without a single switch.
FIXTURE_SWITCH = {"w_herding": 0.05, "w_mispricing": 1.0}
FIXTURE_SEED = 3

HOLIDAYS = {
    date(2023, 1, 2), date(2023, 1, 16), date(2023, 2, 20), date(2023, 4, 7), date(2023, 5, 29),
    date(2023, 6, 19), date(2023, 7, 4),
    date(2023, 9, 4), date(2023, 11, 23), date(2023, 12, 25),
    date(2024, 1, 1), date(2024, 1, 15), date(2024, 2, 19), date(2024, 3, 29), date(2024, 5, 27),
    date(2024, 7, 4), date(2024, 9, 2), date(2024, 11, 28), date(2024, 12, 25),
    date(2025, 1, 1), date(2025, 1, 20),
}


@dataclass(frozen=True)
class StockProfile:
    ticker: str
    sector: str
    price0: float
    shares: float
    beta: float
    leverage: tuple[float, ...]          # per quarter, cycled
    current_ratio: tuple[float, ...]
    capex_share: tuple[float, ...]       # capex as a share of OCF; > 1 means negative FCF
    dividend: float = 0.0


POOL = (
    StockProfile("MSFT", "Information Technology", 370.0, 7.43e9, 1.2, (0.52, 0.50, 0.48),
                 (1.25, 1.30, 1.22), (0.35, 0.45, 0.40), 0.75),
    StockProfile("ICE", "Financials", 125.0, 5.7e8, 0.9, (0.84, 0.93, 0.88, 0.91),
                 (1.02, 0.98, 1.04, 1.01), (0.10, 0.12, 0.11, 0.10), 0.42),
    StockProfile("VRTX", "Health Care", 400.0, 2.58e8, 0.7, (0.22, 0.24, 0.23),
                 (2.6, 2.4, 2.5), (0.15, 1.3, 0.2)),
    StockProfile("CAT", "Industrials", 290.0, 4.9e8, 1.1, (0.74, 0.76, 0.75),
                 (1.35, 1.30, 1.40), (0.30, 0.35, 0.30), 1.30),
    StockProfile("CLX", "Consumer Staples", 145.0, 1.24e8, 0.5, (0.95, 0.86, 0.88),
                 (0.86, 1.05, 0.97), (0.30, 0.25, 0.40), 1.20),
)

AUXILIARY = (
    StockProfile("AAPL", "Information Technology", 190.0, 1.55e10, 1.1, (0.82,), (1.0,), (0.2,)),
    StockProfile("CME", "Financials", 210.0, 3.6e8, 0.8, (0.80,), (1.02,), (0.05,)),
    StockProfile("REGN", "Health Care", 880.0, 1.1e8, 0.7, (0.25,), (4.5,), (0.2,)),
    StockProfile("DE", "Industrials", 400.0, 2.8e8, 1.1, (0.85,), (1.9,), (0.4,)),
    StockProfile("CL", "Consumer Staples", 80.0, 8.2e8, 0.5, (0.85,), (0.95,), (0.2,)),
)

QUARTER_ENDS = (
    date(2022, 9, 30), date(2022, 12, 31),
    date(2023, 3, 31), date(2023, 6, 30), date(2023, 9, 30), date(2023, 12, 31),
    date(2024, 3, 31), date(2024, 6, 30), date(2024, 9, 30), date(2024, 12, 31),
)


def trading_days() -> tuple[list[date], list[date], list[date]]:
    """(warm-up, simulated year, trailing) weekday calendars around 2024."""
    def walk(start: date, step: int, n: int) -> list[date]:
        out, d = [], start
        while len(out) < n:
            if d.weekday() < 5 and d not in HOLIDAYS:
                out.append(d)
            d += timedelta(days=step)
        return out

    sim = walk(SIM_START, 1, SIM_DAYS)
    warm = walk(SIM_START - timedelta(days=1), -1, WARMUP_DAYS)[::-1]
    trail = walk(sim[-1] + timedelta(days=1), 1, TRAILING_DAYS)
    return warm, sim, trail


def _regime_drift(rng: np.random.Generator, n: int) -> np.ndarray:
    drift = np.empty(n)
    i = 0
    while i < n:
        length = int(rng.integers(15, 45))
        drift[i:i + length] = rng.choice([-1.0, 1.0]) * rng.uniform(0.001, 0.003)
        i += length
    return drift


def _vol_regime(rng: np.random.Generator, n: int) -> np.ndarray:
    """Persistent volatility multiplier; calm and stressed spells alternate."""
    scale = np.empty(n)
    i = 0
    while i < n:
        length = int(rng.integers(15, 40))
        scale[i:i + length] = rng.choice([0.5, 1.0, 2.2])
        i += length
    return scale


def simulate(seed: int = FIXTURE_SEED) -> dict:
    """Generate bars and reports for every ticker; returns {ticker: (profile, bars, reports)}."""
    rng = np.random.default_rng(seed)
    warm, sim, trail = trading_days()
    days = warm + sim + trail
    n = len(days)
    vscale = _vol_regime(rng, n)
    market = _regime_drift(rng, n) + vscale * rng.normal(0.0, 0.007, n)
    sectors = sorted({p.sector for p in POOL})
    deviation = {}
    for s in sectors:
        d = np.zeros(n)
        d[0] = rng.normal(0.0, 0.05)
        for t in range(1, n):
            d[t] = 0.965 * d[t - 1] + vscale[t] * rng.normal(0.0, 0.012)
        deviation[s] = d

    out = {}
    for prof in POOL + AUXILIARY:
        value = np.cumsum(prof.beta * market + vscale * rng.normal(0.0, 0.006, n))
        idio = np.zeros(n)
        for t in range(1, n):
            idio[t] = 0.9 * idio[t - 1] + vscale[t] * rng.normal(0.0, 0.004)
        log_price = value + deviation[prof.sector] + idio
        close = prof.price0 * np.exp(log_price - log_price[0])
        fair = prof.price0 * np.exp(value - value[0])

        bars = []
        paid = set()
        prev = close[0]
        for t, d in enumerate(days):
            c = float(close[t])
            o = float(prev * np.exp(rng.normal(0.0, 0.003)))
            hi = max(o, c) * float(np.exp(abs(rng.normal(0.0, 0.004))))
            lo = min(o, c) * float(np.exp(-abs(rng.normal(0.0, 0.004))))
            vol = float(np.round(prof.shares * 0.004 * np.exp(rng.normal(0.0, 0.25)) * (1 + 20 * abs(c / prev - 1))))
            div = 0.0
            if prof.dividend and d.month in (2, 5, 8, 11) and d.day >= 14 and (d.year, d.month) not in paid:
                div = prof.dividend
                paid.add((d.year, d.month))
            bars.append((d, o, hi, lo, c, vol, div, 1.0))
            prev = c

        reports = []
        for q, pe in enumerate(QUARTER_ENDS):
            filing = pe + timedelta(days=int(rng.integers(28, 42)))
            # OCF tracks fair value at the period end: market cap / OCF ~ 100 at zero deviation
            idx = max(0, min(n - 1, np.searchsorted(np.array(days), pe)))
            ocf = float(fair[idx] * prof.shares / 100.0 * np.exp(rng.normal(0.0, 0.02)))
            assets = ocf * 12.0
            lev = prof.leverage[q % len(prof.leverage)]
            cr = prof.current_ratio[q % len(prof.current_ratio)]
            cl = assets * 0.2
            capex = ocf * prof.capex_share[q % len(prof.capex_share)]
            reports.append((pe, filing, assets, assets * lev, cl * cr, cl, ocf, capex))
        out[prof.ticker] = (prof, bars, reports)
    return out


def write_fixture(out_dir: Path | str, seed: int = FIXTURE_SEED, run_seed: int = 7, mode: str = "rule") -> Path:
    """Write CSVs under ``out_dir/data`` and ``out_dir/config.yaml``; returns the config path."""
    out_dir = Path(out_dir)
    data_dir = out_dir / "data"
    data_dir.mkdir(parents=True, exist_ok=True)
    series = simulate(seed)
    for ticker, (_, bars, reports) in series.items():
        with (data_dir / f"{ticker}_prices.csv").open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(PRICE_COLUMNS)
            for d, *vals in bars:
                w.writerow([d.isoformat()] + [repr(round(v, 6)) for v in vals])
        with (data_dir / f"{ticker}_reports.csv").open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(REPORT_COLUMNS)
            for pe, filing, *vals in reports:
                w.writerow([pe.isoformat(), filing.isoformat()] + [repr(round(v, 2)) for v in vals])

    def entry(p: StockProfile) -> dict:
        return {"ticker": p.ticker, "sector": p.sector, "shares_outstanding": p.shares,
                "prices": f"data/{p.ticker}_prices.csv", "reports": f"data/{p.ticker}_reports.csv"}

    _, sim, _ = trading_days()
    config = {
        "seed": run_seed,
        "mode": mode,
        "calendar": {"start": sim[0].isoformat(), "end": sim[-1].isoformat()},
        "block_length": 10,
        "initial_wealth": 100000.0,
        "pool": [entry(p) for p in POOL],
        "auxiliary": {p.sector: entry(p) for p in AUXILIARY},
        "switch": dict(FIXTURE_SWITCH),
    }
    path = out_dir / "config.yaml"
    path.write_text(yaml.safe_dump(config, sort_keys=False))
    return path
