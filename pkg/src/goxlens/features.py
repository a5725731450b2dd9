"""30-minute bars and derived measures.

Everything downstream runs on five aligned series built here from flagged
trades: wash volume, nonwash volume, total volume, Amihud illiquidity ("liq")
and realized volatility ("vol"). Also: percent changes, supply interpolation,
daily wash-volume quartiles, ISO-week rollups with a stationarity filter, and
external asset bars with closed-market zeros.

Measure conventions (the bar-level formulas are ours; sources define only the
names): Amihud is |log return of bar VWAP| per unit of bar dollar volume,
realized volatility is the sum of squared per-trade log returns within the
bar. Both are 0 whenever an input is missing (empty bar, absent VWAP, zero
dollar volume) so sparse stretches stay finite.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from datetime import date as _date
from datetime import datetime, timezone
from typing import Callable, Optional, Sequence

import numpy as np

from .detect import FlaggedLedger, TimeWindow
from .errors import DataError, DegenerateSeriesError
from .ingest import (
    AuxSeries,
    BTC_UNIT,
    DAY,
    MONEY_UNIT,
    Source,
    _open_text,
    day_of,
    fmt_date,
    fmt_ts,
    parse_scaled,
    parse_ts,
)

log = logging.getLogger("goxlens.features")

BAR_SECONDS = 1800
BARS_PER_DAY = DAY // BAR_SECONDS  # 48

#: The five core series every study consumes, in canonical order.
STUDY_SERIES = ("wash", "nonwash", "total", "liq", "vol")


def amihud(prev_vwap: Optional[float], vwap: Optional[float], dollar_volume: float) -> float:
    """|ln(vwap_t / vwap_{t-1})| / dollar_volume_t; 0 when any input is missing."""
    if prev_vwap is None or vwap is None or prev_vwap <= 0.0 or vwap <= 0.0:
        return 0.0
    if dollar_volume <= 0.0:
        return 0.0
    return abs(math.log(vwap / prev_vwap)) / dollar_volume


def realized_vol(prices: Sequence[float]) -> float:
    """Sum of squared log returns over consecutive positive prices; 0 if < 2."""
    total = 0.0
    prev = None
    for p in prices:
        if p <= 0.0:
            continue
        if prev is not None:
            r = math.log(p / prev)
            total += r * r
        prev = p
    return total


def pct_change(series: np.ndarray) -> np.ndarray:
    """100 * (x_t - x_{t-1}) / x_{t-1}; 0 at t=0 and wherever x_{t-1} = 0."""
    x = np.asarray(series, dtype=np.float64)
    out = np.zeros_like(x)
    prev = x[:-1]
    np.divide(x[1:] - prev, prev, out=out[1:], where=prev != 0.0)
    out *= 100.0
    return out


@dataclass(slots=True)
class Bar:
    """One 30-minute bar. Volume fields are fixed-point sums; float views below."""

    start: int
    wash_e8: int = 0
    nonwash_e8: int = 0
    dollar_e5: int = 0
    n_trades: int = 0
    vwap: Optional[float] = None
    amihud: float = 0.0
    rvol: float = 0.0

    @property
    def total_e8(self) -> int:
        return self.wash_e8 + self.nonwash_e8

    @property
    def wash_volume(self) -> float:
        return self.wash_e8 / BTC_UNIT

    @property
    def nonwash_volume(self) -> float:
        return self.nonwash_e8 / BTC_UNIT

    @property
    def total_volume(self) -> float:
        return self.total_e8 / BTC_UNIT

    @property
    def dollar_volume(self) -> float:
        return self.dollar_e5 / MONEY_UNIT


_COLUMN_GETTERS = {
    "wash": lambda b: b.wash_volume,
    "nonwash": lambda b: b.nonwash_volume,
    "total": lambda b: b.total_volume,
    "dollar": lambda b: b.dollar_volume,
    "vwap": lambda b: math.nan if b.vwap is None else b.vwap,
    "amihud": lambda b: b.amihud,
    "liq": lambda b: b.amihud,
    "rvol": lambda b: b.rvol,
    "vol": lambda b: b.rvol,
}


@dataclass
class BarSeries:
    """Dense bars on the 30-minute grid covering a window."""

    bars: list[Bar]
    window: TimeWindow
    label: str = "mtgox"

    def __post_init__(self):
        for a, b in zip(self.bars, self.bars[1:]):
            if b.start - a.start != BAR_SECONDS:
                raise DataError(
                    f"bar grid broken: {fmt_ts(a.start)} then {fmt_ts(b.start)}"
                )

    def __len__(self) -> int:
        return len(self.bars)

    def __iter__(self):
        return iter(self.bars)

    def starts(self) -> np.ndarray:
        return np.array([b.start for b in self.bars], dtype=np.int64)

    def column(self, name: str) -> np.ndarray:
        try:
            get = _COLUMN_GETTERS[name]
        except KeyError:
            raise DataError(f"unknown bar column {name!r}") from None
        return np.array([get(b) for b in self.bars], dtype=np.float64)

    def matrix(self, names: Sequence[str] = STUDY_SERIES) -> np.ndarray:
        return np.column_stack([self.column(n) for n in names])

    def series_map(self, names: Sequence[str] = STUDY_SERIES) -> dict:
        return {n: self.column(n) for n in names}

    def slice(self, window: TimeWindow) -> "BarSeries":
        """Bars whose start lies in the window; grid alignment is kept."""
        kept = [b for b in self.bars if window.contains(b.start)]
        if not kept:
            raise DataError(
                f"no bars in window {fmt_ts(window.start)}..{fmt_ts(window.end)}"
            )
        return BarSeries(kept, window, self.label)

    def to_csv(self, stream) -> None:
        w = csv.writer(stream)
        w.writerow(["start", "wash", "nonwash", "total", "dollar", "vwap", "amihud", "rvol"])
        for b in self.bars:
            w.writerow(
                [
                    fmt_ts(b.start),
                    _fixed8(b.wash_e8),
                    _fixed8(b.nonwash_e8),
                    _fixed8(b.total_e8),
                    _fixed5(b.dollar_e5),
                    "" if b.vwap is None else repr(b.vwap),
                    repr(b.amihud),
                    repr(b.rvol),
                ]
            )

    @classmethod
    def from_csv(cls, source: Source, label: str = "mtgox") -> "BarSeries":
        fh, should_close = _open_text(source)
        try:
            reader = csv.reader(fh)
            header = next(reader, None)
            expected = ["start", "wash", "nonwash", "total", "dollar", "vwap", "amihud", "rvol"]
            if header is None or [h.strip() for h in header] != expected:
                raise DataError(f"bad bars header: {header}; expected {expected}")
            bars = []
            for row in reader:
                if not row:
                    continue
                start = parse_ts(row[0])
                bars.append(
                    Bar(
                        start=start,
                        wash_e8=parse_scaled(row[1], 8),
                        nonwash_e8=parse_scaled(row[2], 8),
                        dollar_e5=parse_scaled(row[4], 5),
                        vwap=None if row[5] == "" else float(row[5]),
                        amihud=float(row[6]),
                        rvol=float(row[7]),
                    )
                )
            if not bars:
                raise DataError("empty bars file")
            window = TimeWindow(bars[0].start, bars[-1].start + BAR_SECONDS)
            return cls(bars, window, label)
        finally:
            if should_close:
                fh.close()


def _fixed8(v: int) -> str:
    return f"{v // BTC_UNIT}.{v % BTC_UNIT:08d}"


def _fixed5(v: int) -> str:
    return f"{v // MONEY_UNIT}.{v % MONEY_UNIT:05d}"


def build_bars(flagged: FlaggedLedger) -> BarSeries:
    """Aggregate flagged trades onto the dense 30-minute grid of their window.

    Gaps become zero-volume bars. VWAP is sum(money)/sum(bitcoins) over priced
    (bitcoins > 0) trades; Amihud uses the previous bar's VWAP (0 at the first
    bar or across a VWAP gap); realized volatility uses within-bar trade
    prices in ledger order.
    """
    window = flagged.window
    n_bars = -((window.start - window.end) // BAR_SECONDS)
    bars = [Bar(start=window.start + i * BAR_SECONDS) for i in range(n_bars)]
    prices: list[list[float]] = [[] for _ in range(n_bars)]
    btc_priced = [0] * n_bars
    money_priced = [0] * n_bars

    for trade, is_wash in flagged:
        i = (trade.ts - window.start) // BAR_SECONDS
        b = bars[i]
        b.n_trades += 1
        if is_wash:
            b.wash_e8 += trade.bitcoins_e8
        else:
            b.nonwash_e8 += trade.bitcoins_e8
        b.dollar_e5 += trade.money_e5
        if trade.bitcoins_e8 > 0:
            btc_priced[i] += trade.bitcoins_e8
            money_priced[i] += trade.money_e5
            prices[i].append(trade.price)

    prev_vwap: Optional[float] = None
    for i, b in enumerate(bars):
        if btc_priced[i] > 0:
            b.vwap = (money_priced[i] / MONEY_UNIT) / (btc_priced[i] / BTC_UNIT)
        b.amihud = amihud(prev_vwap, b.vwap, b.dollar_volume)
        b.rvol = realized_vol(prices[i])
        prev_vwap = b.vwap
    return BarSeries(bars, window)


@dataclass
class SupplyCurve:
    """Piecewise-linear circulating supply, anchored at daily points."""

    day_ts: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.day_ts = np.asarray(self.day_ts, dtype=np.float64)
        self.values = np.asarray(self.values, dtype=np.float64)
        if len(self.day_ts) < 2:
            raise DataError("supply curve needs at least 2 anchor points")
        if np.any(np.diff(self.day_ts) <= 0):
            raise DataError("supply anchors must be strictly increasing in time")
        if np.any(np.diff(self.values) < 0):
            raise DataError("circulating supply must be non-decreasing")

    def at(self, ts) -> np.ndarray:
        """Supply on the UTC day of ts; clamped (with a warning) outside anchors."""
        day = np.asarray(ts, dtype=np.int64)
        day = day - day % DAY
        n_out = int(np.sum((day < self.day_ts[0]) | (day > self.day_ts[-1])))
        if n_out:
            log.warning(
                "supply lookup: %d timestamp(s) outside anchor range %s..%s, clamped",
                n_out,
                fmt_date(int(self.day_ts[0])),
                fmt_date(int(self.day_ts[-1])),
            )
        return np.interp(day, self.day_ts, self.values)


def interpolate_supply(points) -> SupplyCurve:
    """Build a SupplyCurve from (day epoch, supply) pairs or a supply AuxSeries."""
    if isinstance(points, AuxSeries):
        if points.kind != "supply":
            raise DataError(f"expected supply aux series, got {points.kind!r}")
        pairs = [(p.ts, p.values["supply"]) for p in points.points]
    else:
        pairs = [(int(ts), float(v)) for ts, v in points]
    return SupplyCurve(
        np.array([t for t, _ in pairs]), np.array([v for _, v in pairs])
    )


def marketcap_share(flagged: FlaggedLedger, curve: SupplyCurve, prices=None) -> float:
    """Mean over wash trades of 100 * trade BTC / circulating supply that day.

    The share of market cap taken by a BTC-denominated trade is price-invariant
    (price cancels from numerator and denominator), so `prices` is accepted for
    interface symmetry but unused.
    """
    wash = flagged.wash_trades()
    if not wash:
        return math.nan
    ts = np.array([t.ts for t in wash], dtype=np.int64)
    btc = np.array([t.bitcoins_e8 for t in wash], dtype=np.float64) / BTC_UNIT
    supply = curve.at(ts)
    return float(np.mean(100.0 * btc / supply))


@dataclass(frozen=True)
class QuartileLabel:
    day: int  # epoch of UTC midnight
    quartile: int  # 1 (lowest daily wash volume) .. 4 (highest)

    @property
    def date(self) -> _date:
        return datetime.fromtimestamp(self.day, tz=timezone.utc).date()


def daily_quartiles(bars: BarSeries) -> list[QuartileLabel]:
    """Label each day Q1..Q4 by its total wash volume.

    Days are ranked ascending (ties broken by date), and quartile bounds fall
    at the 25/50/75 percentiles of the ranking, so group sizes differ by at
    most one. Returned sorted by date.
    """
    per_day: dict[int, int] = {}
    for b in bars:
        d = day_of(b.start)
        per_day[d] = per_day.get(d, 0) + b.wash_e8
    if len(per_day) < 4:
        raise DataError(f"quartiles need >= 4 days, got {len(per_day)}")
    ranked = sorted(per_day.items(), key=lambda kv: (kv[1], kv[0]))
    n = len(ranked)
    labels = [
        QuartileLabel(day, 1 + (4 * i) // n) for i, (day, _vol) in enumerate(ranked)
    ]
    labels.sort(key=lambda lab: lab.day)
    return labels


def quartile_map(labels: Sequence[QuartileLabel]) -> dict[int, int]:
    return {lab.day: lab.quartile for lab in labels}


@dataclass
class WeeklyBucket:
    """One ISO week: summed series values plus the in-week per-bar paths."""

    week_start: int  # epoch of the ISO Monday, UTC midnight
    sums: dict[str, float]
    series: dict[str, np.ndarray]
    n_bars: int


def week_start_of(ts: int) -> int:
    day_number = ts // DAY
    weekday = (day_number + 3) % 7  # epoch day 0 was a Thursday
    return (day_number - weekday) * DAY


def weekly_rollup(bars: BarSeries) -> list[WeeklyBucket]:
    """Accumulate the five study series to ISO weeks (Monday start, UTC).

    Sums are over every bar of the week; per-bar paths are retained so the
    stationarity filter can test within-week behaviour. Partial edge weeks are
    kept here and left to the filter.
    """
    order: list[int] = []
    grouped: dict[int, list[Bar]] = {}
    for b in bars:
        wk = week_start_of(b.start)
        if wk not in grouped:
            grouped[wk] = []
            order.append(wk)
        grouped[wk].append(b)

    out = []
    for wk in order:
        chunk = grouped[wk]
        series = {
            name: np.array([_COLUMN_GETTERS[name](b) for b in chunk], dtype=np.float64)
            for name in STUDY_SERIES
        }
        sums = {name: float(series[name].sum()) for name in STUDY_SERIES}
        out.append(WeeklyBucket(wk, sums, series, len(chunk)))
    return out


def filter_stationary_weeks(
    weekly: Sequence[WeeklyBucket],
    test: Optional[Callable[[np.ndarray], bool]] = None,
) -> tuple[list[WeeklyBucket], list[tuple[int, str, str]]]:
    """Drop weeks where any of the five in-week series fails the test.

    The default test is an ADF rejection at 5% (AIC lag choice). Returns
    (retained, dropped) where dropped entries are (week_start, series,
    reason) with reason in {"nonstationary", "degenerate", "insufficient"}.
    """
    if test is None:
        from .econometrics import adf

        def test(x: np.ndarray) -> bool:
            return adf(x, lag_rule="aic").reject_at_5pct

    retained: list[WeeklyBucket] = []
    dropped: list[tuple[int, str, str]] = []
    for wk in weekly:
        verdict = None
        for name in STUDY_SERIES:
            try:
                ok = test(wk.series[name])
            except DegenerateSeriesError:
                verdict = (wk.week_start, name, "degenerate")
                break
            except DataError:
                verdict = (wk.week_start, name, "insufficient")
                break
            if not ok:
                verdict = (wk.week_start, name, "nonstationary")
                break
        if verdict is None:
            retained.append(wk)
        else:
            dropped.append(verdict)
    return retained, dropped


@dataclass
class AssetBarSeries:
    """External asset, 30-minute percent-change bars; zero when closed.

    Columns: pct_close, pct_liq, pct_vol, pct_tick_or_volume. The liq and vol
    measures are bar-level analogues of the ledger measures (|log return| per
    unit of activity; squared log return), computed over consecutive open
    bars, then percent-changed. `activity_source` records whether tick counts
    or traded volume fed liq and the fourth column.
    """

    label: str
    starts: np.ndarray
    open_mask: np.ndarray
    columns: dict[str, np.ndarray]
    activity_source: str

    def __len__(self) -> int:
        return len(self.starts)


ASSET_COLUMNS = ("pct_close", "pct_liq", "pct_vol", "pct_tick_or_volume")


def build_asset_bars(aux: AuxSeries, window: TimeWindow, label: str) -> AssetBarSeries:
    """Align an asset_bar aux series to the window's 30-minute grid.

    Slots without data are closed-market slots and contribute exact zeros to
    every column. Within a slot the last close wins and tick/volume sum. All
    outputs are finite (zero-previous-value percent changes emit 0).
    """
    if aux.kind != "asset_bar":
        raise DataError(f"expected asset_bar aux series, got {aux.kind!r}")
    n = -((window.start - window.end) // BAR_SECONDS)
    close = np.zeros(n)
    tick = np.zeros(n)
    volume = np.zeros(n)
    open_mask = np.zeros(n, dtype=bool)
    for p in aux.points:
        if not window.contains(p.ts):
            continue
        i = (p.ts - window.start) // BAR_SECONDS
        close[i] = p.values["close"]
        tick[i] += p.values.get("tick", 0.0)
        volume[i] += p.values.get("volume", 0.0)
        open_mask[i] = True

    activity_source = "tick" if np.any(tick != 0.0) else "volume"
    activity = tick if activity_source == "tick" else volume

    # Bar-level measures over consecutive open slots.
    liq = np.zeros(n)
    vol = np.zeros(n)
    prev_close = None
    for i in np.flatnonzero(open_mask):
        if prev_close is not None and prev_close > 0.0 and close[i] > 0.0:
            r = math.log(close[i] / prev_close)
            vol[i] = r * r
            if activity[i] > 0.0:
                liq[i] = abs(r) / activity[i]
        prev_close = close[i]

    def pct_open(values: np.ndarray) -> np.ndarray:
        out = np.zeros(n)
        prev = None
        for i in np.flatnonzero(open_mask):
            if prev is not None and prev != 0.0:
                out[i] = 100.0 * (values[i] - prev) / prev
            prev = values[i]
        return out

    starts = window.start + BAR_SECONDS * np.arange(n, dtype=np.int64)
    columns = {
        "pct_close": pct_open(close),
        "pct_liq": pct_open(liq),
        "pct_vol": pct_open(vol),
        "pct_tick_or_volume": pct_open(activity),
    }
    return AssetBarSeries(label, starts, open_mask, columns, activity_source)


def daily_sums(bars: BarSeries, name: str) -> list[tuple[int, float]]:
    """(day epoch, summed column value) per UTC day, in date order."""
    col = bars.column(name)
    out: dict[int, float] = {}
    for b, v in zip(bars, col):
        d = day_of(b.start)
        out[d] = out.get(d, 0.0) + float(v)
    return sorted(out.items())
