"""Point-in-time daily bars and quarterly disclosures for the stock pool."""

from __future__ import annotations

import bisect
import csv
import math
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path

SECTORS = (
    "Information Technology",
    "Financials",
    "Health Care",
    "Industrials",
    "Consumer Staples",
)

PRICE_COLUMNS = ("date", "open", "high", "low", "close", "volume", "dividend", "split_ratio")
REPORT_COLUMNS = (
    "period_end",
    "filing_date",
    "assets",
    "liabilities",
    "assets_current",
    "liabilities_current",
    "ocf",
    "capex",
)


class DataError(ValueError):
    """Raised when an input file is missing or violates the record invariants."""


@dataclass(frozen=True)
class DailyBar:
    date: date
    open: float
    high: float
    low: float
    close: float
    volume: float
    dividend: float = 0.0
    split_ratio: float = 1.0

    def validate(self) -> None:
        vals = (self.open, self.high, self.low, self.close, self.volume, self.dividend, self.split_ratio)
        if not all(math.isfinite(v) for v in vals):
            raise DataError(f"non-finite value in bar {self.date}")
        if not (self.low <= self.open <= self.high and self.low <= self.close <= self.high):
            raise DataError(f"OHLC out of range on {self.date}")
        if self.volume < 0:
            raise DataError(f"negative volume on {self.date}")
        if self.split_ratio <= 0:
            raise DataError(f"non-positive split_ratio on {self.date}")
        if self.dividend < 0:
            raise DataError(f"negative dividend on {self.date}")


@dataclass(frozen=True)
class QuarterlyReport:
    period_end: date
    filing_date: date
    assets: float
    liabilities: float
    assets_current: float
    liabilities_current: float
    ocf: float
    capex: float

    def validate(self) -> None:
        if self.filing_date < self.period_end:
            raise DataError(f"filing_date {self.filing_date} precedes period_end {self.period_end}")
        if not self.assets > 0:
            raise DataError(f"assets must be positive (period_end {self.period_end})")
        if self.liabilities < 0 or self.liabilities_current < 0:
            raise DataError(f"negative liabilities (period_end {self.period_end})")
        if self.capex < 0:
            raise DataError(f"capex must be stored non-negative (period_end {self.period_end})")


@dataclass(frozen=True)
class StockSeries:
    ticker: str
    sector: str
    bars: tuple[DailyBar, ...]
    reports: tuple[QuarterlyReport, ...]
    shares_outstanding: float
    _dates: tuple[date, ...] = field(init=False, repr=False, compare=False)
    _filings: tuple[date, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "_dates", tuple(b.date for b in self.bars))
        object.__setattr__(self, "_filings", tuple(r.filing_date for r in self.reports))

    @property
    def dates(self) -> tuple[date, ...]:
        return self._dates

    def index_of(self, d: date) -> int:
        """Position of the bar dated exactly ``d``; ``KeyError`` if absent."""
        i = bisect.bisect_left(self._dates, d)
        if i == len(self._dates) or self._dates[i] != d:
            raise KeyError(f"{self.ticker}: no bar on {d}")
        return i

    def bar(self, d: date) -> DailyBar:
        return self.bars[self.index_of(d)]

    def truncated(self, last: date) -> "StockSeries":
        """Copy containing only bars dated <= last and reports filed <= last."""
        nb = bisect.bisect_right(self._dates, last)
        nr = bisect.bisect_right(self._filings, last)
        return StockSeries(self.ticker, self.sector, self.bars[:nb], self.reports[:nr], self.shares_outstanding)


def _parse_date(text: str, where: str) -> date:
    try:
        return date.fromisoformat(text.strip())
    except ValueError as exc:
        raise DataError(f"{where}: bad date {text!r}") from exc


def _parse_float(text: str, where: str) -> float:
    if text is None or text.strip() == "":
        raise DataError(f"{where}: missing value")
    try:
        return float(text)
    except ValueError as exc:
        raise DataError(f"{where}: bad number {text!r}") from exc


def _read_rows(path: Path, columns: tuple[str, ...]) -> list[dict[str, str]]:
    if not path.is_file():
        raise DataError(f"missing file {path}")
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or tuple(h.strip() for h in reader.fieldnames) != columns:
            raise DataError(f"{path}: header must be {','.join(columns)}")
        return list(reader)


def read_bars(path: Path | str) -> list[DailyBar]:
    path = Path(path)
    bars = []
    for lineno, row in enumerate(_read_rows(path, PRICE_COLUMNS), start=2):
        where = f"{path.name}:{lineno}"
        vals = {k: _parse_float(row[k], where) for k in PRICE_COLUMNS[1:]}
        bar = DailyBar(_parse_date(row["date"], where), **vals)
        try:
            bar.validate()
        except DataError as exc:
            raise DataError(f"{where}: {exc}") from None
        bars.append(bar)
    if not bars:
        raise DataError(f"{path}: no bars")
    for prev, cur in zip(bars, bars[1:]):
        if cur.date == prev.date:
            raise DataError(f"{path}: duplicate date {cur.date}")
        if cur.date < prev.date:
            raise DataError(f"{path}: dates not increasing at {cur.date}")
    return bars


def read_reports(path: Path | str) -> list[QuarterlyReport]:
    path = Path(path)
    reports = []
    for lineno, row in enumerate(_read_rows(path, REPORT_COLUMNS), start=2):
        where = f"{path.name}:{lineno}"
        vals = {k: _parse_float(row[k], where) for k in REPORT_COLUMNS[2:]}
        rep = QuarterlyReport(_parse_date(row["period_end"], where), _parse_date(row["filing_date"], where), **vals)
        try:
            rep.validate()
        except DataError as exc:
            raise DataError(f"{where}: {exc}") from None
        reports.append(rep)
    reports.sort(key=lambda r: (r.filing_date, r.period_end))
    for prev, cur in zip(reports, reports[1:]):
        if cur.filing_date == prev.filing_date:
            raise DataError(f"{path}: duplicate filing_date {cur.filing_date}")
    return reports


def load_series(price_file, report_file, ticker: str, sector: str, shares: float) -> StockSeries:
    if sector not in SECTORS:
        raise DataError(f"{ticker}: unknown sector {sector!r}")
    if not shares > 0:
        raise DataError(f"{ticker}: shares_outstanding must be positive")
    return StockSeries(ticker, sector, tuple(read_bars(price_file)), tuple(read_reports(report_file)), float(shares))


def bars_asof(series: StockSeries, t: date) -> list[DailyBar]:
    """Bars visible when deciding on day ``t``: everything strictly before ``t``."""
    return list(series.bars[: bisect.bisect_left(series.dates, t)])


def latest_report(series: StockSeries, t: date) -> QuarterlyReport | None:
    # a filing dated t is not yet usable on t
    i = bisect.bisect_left(series._filings, t)
    return series.reports[i - 1] if i else None


def check_split_consistency(series: StockSeries) -> None:
    """Inputs are pre-adjusted; a split day must not show a raw price gap of the split size."""
    for prev, cur in zip(series.bars, series.bars[1:]):
        if cur.split_ratio != 1.0:
            jump = prev.close / cur.open
            if abs(jump - cur.split_ratio) < 0.05 * cur.split_ratio and abs(cur.split_ratio - 1.0) > 0.1:
                raise DataError(f"{series.ticker}: bars on {cur.date} look unadjusted for a {cur.split_ratio} split")


def adjust_for_splits(bars: list[DailyBar]) -> list[DailyBar]:
    """Back-adjust raw bars by cumulative split ratios. Identity when every ratio is 1."""
    out = list(bars)
    factor = 1.0
    for i in range(len(out) - 1, -1, -1):
        b = out[i]
        if factor != 1.0:
            out[i] = DailyBar(
                b.date, b.open / factor, b.high / factor, b.low / factor, b.close / factor,
                b.volume * factor, b.dividend / factor, b.split_ratio,
            )
        factor *= b.split_ratio
    return out


def calendar(series: list[StockSeries], start: date, end: date) -> list[date]:
    """Union of bar dates across files within [start, end]."""
    days = sorted({d for s in series for d in s.dates if start <= d <= end})
    return days
