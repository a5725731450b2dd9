"""End-to-end analyses over flagged bar series.

Each study is a pure function from immutable inputs to a StudyReport: a study
id, a content digest of every input, the parameters used, named result tables,
and free-form notes. Reports are deterministic, so two runs over the same
inputs produce identical bytes once serialized.

Impulse-response table columns are named "<shock>_to_<effect>" and hold the
percent-convention responses (response scaled by the effect series' mean
absolute level).
"""

from __future__ import annotations

import csv
import hashlib
import io
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .detect import TimeWindow
from .econometrics import adf, engle_granger, granger, irf, johansen, ols, var_fit
from .errors import AnalysisAbort, DataError, DegenerateSeriesError, StationarityError
from .features import (
    ASSET_COLUMNS,
    BAR_SECONDS,
    STUDY_SERIES,
    AssetBarSeries,
    BarSeries,
    QuartileLabel,
    WeeklyBucket,
    quartile_map,
    week_start_of,
)
from .ingest import DAY, AuxSeries, day_of, fmt_date, fmt_ts, parse_date
from .ml import (
    build_lagged,
    importance_report,
    train_boost,
    train_forest,
    train_rnn,
    train_tree,
)
from .ml.dataset import DEFAULT_LAGS

__all__ = [
    "EventConfig",
    "ReportTable",
    "StudyReport",
    "study_cross_asset",
    "study_event",
    "study_market",
    "study_media",
    "study_onchain",
    "study_timing",
    "train_model_suite",
]

DEFAULT_EVENT_TS = parse_date("2012-04-20")

# (shock, effect) pairs, in presentation order
_TIMING_IRF_PAIRS = (
    ("wash", "nonwash"),
    ("nonwash", "wash"),
    ("wash", "total"),
    ("total", "wash"),
)
_EVENT_IRF_PAIRS = (
    ("wash", "total"),
    ("wash", "nonwash"),
    ("total", "wash"),
    ("nonwash", "wash"),
)


@dataclass
class ReportTable:
    """Named numeric cells; every row carries the same column set."""

    name: str
    columns: List[str]
    rows: List[Tuple[str, Dict[str, float]]] = field(default_factory=list)

    def add(self, label: str, cells: Dict[str, float]) -> None:
        clean = {}
        for key, v in cells.items():
            if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
                clean[key] = int(v)
            else:
                clean[key] = float(v)
        self.rows.append((label, clean))

    def to_dict(self) -> dict:
        return {
            "columns": list(self.columns),
            "rows": [{"label": label, "cells": cells} for label, cells in self.rows],
        }

    def write_csv(self, stream) -> None:
        w = csv.writer(stream)
        w.writerow(["row", *self.columns])
        for label, cells in self.rows:
            w.writerow([label, *(_cell(cells.get(c)) for c in self.columns)])


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return repr(float(v))


@dataclass
class StudyReport:
    study: str
    inputs: Dict[str, str]
    parameters: dict
    tables: Dict[str, ReportTable]
    notes: List[str]

    def to_dict(self) -> dict:
        return {
            "study": self.study,
            "inputs": dict(self.inputs),
            "parameters": dict(self.parameters),
            "tables": {name: t.to_dict() for name, t in self.tables.items()},
            "notes": list(self.notes),
        }


@dataclass(frozen=True)
class EventConfig:
    """An event timestamp with symmetric-by-default day windows around it."""

    event_ts: int = DEFAULT_EVENT_TS
    pre_days: int = 14
    post_days: int = 14

    def __post_init__(self):
        if self.pre_days < 1 or self.post_days < 1:
            raise DataError(
                f"event windows must be at least one day, got "
                f"pre={self.pre_days} post={self.post_days}"
            )

    @property
    def pre_window(self) -> TimeWindow:
        return TimeWindow(self.event_ts - self.pre_days * DAY, self.event_ts)

    @property
    def post_window(self) -> TimeWindow:
        return TimeWindow(self.event_ts, self.event_ts + self.post_days * DAY)


# --- input digests -----------------------------------------------------------

def _digest(*parts) -> str:
    h = hashlib.sha256()
    for part in parts:
        if isinstance(part, str):
            part = part.encode()
        h.update(len(part).to_bytes(8, "big"))
        h.update(part)
    return h.hexdigest()


def digest_bars(bars: BarSeries) -> str:
    buf = io.StringIO()
    bars.to_csv(buf)
    return _digest("bars", bars.label, buf.getvalue())


def digest_aux(aux: AuxSeries) -> str:
    parts = ["aux", aux.kind]
    for p in aux.points:
        parts.append(f"{p.ts}:{sorted(p.values.items())!r}")
    return _digest(*parts)


def digest_labels(labels: Sequence[QuartileLabel]) -> str:
    return _digest("labels", repr([(lab.day, lab.quartile) for lab in labels]))


def digest_daily(pairs: Sequence[Tuple[int, float]]) -> str:
    return _digest("daily", repr([(int(d), float(v)) for d, v in pairs]))


def digest_weekly(weekly: Sequence[WeeklyBucket]) -> str:
    parts: list = ["weekly"]
    for wk in weekly:
        parts.append(f"{wk.week_start}:{wk.n_bars}")
        for name in STUDY_SERIES:
            parts.append(name)
            parts.append(np.ascontiguousarray(wk.series[name]).tobytes())
    return _digest(*parts)


def digest_asset(ab: AssetBarSeries) -> str:
    parts: list = ["asset", ab.label, ab.activity_source]
    parts.append(np.ascontiguousarray(ab.starts).tobytes())
    parts.append(np.ascontiguousarray(ab.open_mask).tobytes())
    for name in ASSET_COLUMNS:
        parts.append(name)
        parts.append(np.ascontiguousarray(ab.columns[name]).tobytes())
    return _digest(*parts)


# --- shared pieces -----------------------------------------------------------

def _seed_words(seed: int, n: int) -> list[int]:
    return [int(w) for w in np.random.SeedSequence(seed).generate_state(n, dtype=np.uint64)]


def train_model_suite(series, lags, seed: int, threads: int = 1, target: str = "wash"):
    """Build the lagged dataset and train all six model families.

    The placebo column and each stochastic trainer get their own sub-seed
    derived from `seed`, so one integer pins the whole suite. Returns
    (dataset, models) with the models in a fixed family order.
    """
    words = _seed_words(seed, 6)
    ds = build_lagged(series, lags, seed=words[0], target=target)
    models = [
        train_tree(ds),
        train_forest(ds, seed=words[1], threads=threads),
        train_boost(ds, "gradient_second_order", seed=words[2]),
        train_boost(ds, "adaboost_regression", seed=words[3]),
        train_rnn(ds, "gru", seed=words[4]),
        train_rnn(ds, "lstm", seed=words[5]),
    ]
    return ds, models


def _irf_table(name: str, irfm, pairs, n: int, horizons: int) -> ReportTable:
    columns = [f"{shock}_to_{effect}" for shock, effect in pairs]
    table = ReportTable(name, columns)
    series = {
        col: irfm.percent_response(effect, shock)
        for col, (shock, effect) in zip(columns, pairs)
    }
    for h in range(1, horizons + 1):
        table.add(f"h={h}", {col: float(series[col][h - 1]) for col in columns})
    table.add("sum", {col: float(series[col][:horizons].sum()) for col in columns})
    table.add("n", {col: float(n) for col in columns})
    return table


_BLANK_CELL_NOTE = (
    "all h=1 cells are emitted, including the wash-response columns that "
    "summary layouts sometimes leave blank"
)


def _quartile_of(qmap: Dict[int, int], day: int, what: str) -> int:
    try:
        return qmap[day]
    except KeyError:
        raise DataError(f"quartile labels do not cover {what} {fmt_date(day)}") from None


# --- studies -----------------------------------------------------------------

def study_timing(
    bars: BarSeries,
    lags: Sequence[int] = DEFAULT_LAGS,
    seed: int = 0,
    force: bool = False,
    threads: int = 1,
    var_order: int = 4,
    horizons: int = 10,
) -> StudyReport:
    """Lead-lag structure of wash volume against the other ledger series.

    Gates on ADF stationarity of all five series (override with `force`),
    then reports cross-family feature importances, a cointegration rank
    table, a Granger grid with wash as the cause, and the impulse responses
    of a VAR on all five series.
    """
    series = bars.series_map()
    tables: Dict[str, ReportTable] = {}
    notes: List[str] = []

    adf_table = ReportTable("adf", ["stat", "lag", "reject_5pct"])
    failures: Dict[str, Optional[float]] = {}
    for name in STUDY_SERIES:
        try:
            r = adf(series[name])
        except (DegenerateSeriesError, DataError):
            failures[name] = None
            adf_table.add(name, {"stat": float("nan"), "lag": -1, "reject_5pct": 0})
            continue
        adf_table.add(
            name,
            {"stat": r.statistic, "lag": r.lag, "reject_5pct": int(r.reject_at_5pct)},
        )
        if not r.reject_at_5pct:
            failures[name] = r.statistic
    if failures and not force:
        raise StationarityError(failures)
    for name in sorted(failures):
        notes.append(f"forced past stationarity failure on {name}")
    tables["adf"] = adf_table

    _ds, models = train_model_suite(series, lags, seed, threads=threads)
    rep = importance_report(models)
    value_table = ReportTable("importance", rep.families)
    rank_table = ReportTable("importance_rank", rep.families)
    for col in rep.columns:
        value_table.add(col, {fam: rep.values[fam][col] for fam in rep.families})
        rank_table.add(col, {fam: rep.ranks[fam][col] for fam in rep.families})
    tables["importance"] = value_table
    tables["importance_rank"] = rank_table
    for fam in rep.families:
        below = ", ".join(sorted(rep.features_below_placebo[fam])) or "none"
        notes.append(f"{fam}: features below placebo: {below}")
    notes.append(
        "recurrent importances are mean absolute prediction gradients over the test rows"
    )

    data = bars.matrix()
    # total is the exact sum of wash and nonwash, which makes the five-series
    # system singular; the rank test runs on the four free series instead.
    joh_series = ("wash", "nonwash", "liq", "vol")
    joh = johansen(bars.matrix(joh_series), var_order, names=list(joh_series))
    notes.append("johansen excludes total (exact sum of wash and nonwash)")
    joh_table = ReportTable(
        "johansen",
        ["eigenvalue", "trace", "trace_crit_95", "max_eigen", "max_eigen_crit_95"],
    )
    for r_idx in range(len(joh.eigenvalues)):
        joh_table.add(
            f"r={r_idx}",
            {
                "eigenvalue": joh.eigenvalues[r_idx],
                "trace": joh.trace_stats[r_idx],
                "trace_crit_95": joh.trace_crit_95[r_idx],
                "max_eigen": joh.max_eigen_stats[r_idx],
                "max_eigen_crit_95": joh.max_eigen_crit_95[r_idx],
            },
        )
    tables["johansen"] = joh_table
    notes.append(f"johansen rank = {joh.rank}")

    granger_table = ReportTable("granger", ["fstat", "pvalue", "passed"])
    for effect in ("nonwash", "total", "liq", "vol"):
        for lag in (1, 2):
            g = granger(data, "wash", effect, lag, names=list(STUDY_SERIES))
            granger_table.add(
                f"wash->{effect}_L{lag}",
                {"fstat": g.fstat, "pvalue": g.pvalue, "passed": int(g.passed)},
            )
    tables["granger"] = granger_table

    model = var_fit(data, var_order, names=list(STUDY_SERIES))
    irfm = irf(model, horizons)
    tables["irf"] = _irf_table("irf", irfm, _TIMING_IRF_PAIRS, model.nobs, horizons)
    notes.append(_BLANK_CELL_NOTE)

    return StudyReport(
        study="timing",
        inputs={"bars": digest_bars(bars)},
        parameters={
            "lags": sorted(set(int(l) for l in lags)),
            "seed": seed,
            "var_order": var_order,
            "horizons": horizons,
            "force": force,
        },
        tables=tables,
        notes=notes,
    )


def study_onchain(
    bars: BarSeries,
    onchain: AuxSeries,
    labels: Sequence[QuartileLabel],
    min_bars: int = 30,
    min_eg_len: int = 50,
) -> StudyReport:
    """Relate blockchain settlement volume to honest exchange volume.

    On-chain outputs are summed into the 30-minute bar grid; within each
    wash-volume quartile the study regresses on-chain volume on non-wash
    volume and runs the pairwise cointegration test. Quartiles with too few
    bars are marked insufficient rather than dropped.
    """
    if onchain.kind != "onchain":
        raise DataError(f"expected onchain aux series, got {onchain.kind!r}")
    window = bars.window
    chain = np.zeros(len(bars))
    skipped = 0
    for p in onchain.points:
        if not window.contains(p.ts):
            skipped += 1
            continue
        chain[(p.ts - window.start) // BAR_SECONDS] += p.values["output"]

    nonwash = bars.column("nonwash")
    qmap = quartile_map(labels)
    quartiles = np.array(
        [_quartile_of(qmap, day_of(b.start), "bar day") for b in bars]
    )

    table = ReportTable("quartiles", ["slope", "pvalue", "adj_r2", "eg_pvalue", "n"])
    notes: List[str] = []
    if skipped:
        notes.append(f"{skipped} on-chain points outside the bar window were ignored")
    nan = float("nan")
    for q in (1, 2, 3, 4):
        mask = quartiles == q
        n = int(mask.sum())
        if n < min_bars:
            table.add(f"Q{q}", {"slope": nan, "pvalue": nan, "adj_r2": nan, "eg_pvalue": nan, "n": n})
            notes.append(f"Q{q}: insufficient ({n} bars, need {min_bars})")
            continue
        fit = ols(chain[mask], nonwash[mask][:, None])
        cells = {
            "slope": float(fit.params[1]),
            "pvalue": float(fit.pvalues[1]),
            "adj_r2": float(fit.rsquared_adj),
            "n": n,
        }
        if n < min_eg_len:
            cells["eg_pvalue"] = nan
            notes.append(f"Q{q}: too few bars for the cointegration test ({n})")
        else:
            cells["eg_pvalue"] = engle_granger(chain[mask], nonwash[mask]).pvalue
        table.add(f"Q{q}", cells)

    return StudyReport(
        study="onchain",
        inputs={
            "bars": digest_bars(bars),
            "onchain": digest_aux(onchain),
            "labels": digest_labels(labels),
        },
        parameters={"min_bars": min_bars, "min_eg_len": min_eg_len},
        tables={"quartiles": table},
        notes=notes,
    )


def study_market(
    daily_nonwash: Sequence[Tuple[int, float]],
    market: AuxSeries,
    labels: Sequence[QuartileLabel],
    min_days: int = 30,
) -> StudyReport:
    """Relate rival-exchange volume to honest volume, day by day.

    Joins the two daily series on shared dates, regresses market volume on
    non-wash volume within each quartile, and reports the per-day share of
    combined volume that the ledger carries (with its mean).
    """
    if market.kind != "market_daily":
        raise DataError(f"expected market_daily aux series, got {market.kind!r}")
    market_map = {p.ts: p.values["volume_btc"] for p in market.points}
    joined = [(d, v, market_map[d]) for d, v in daily_nonwash if d in market_map]
    if not joined:
        raise DataError("no overlapping days between the daily series")
    dropped = len(daily_nonwash) - len(joined)

    qmap = quartile_map(labels)
    days = np.array([d for d, _, _ in joined])
    nw = np.array([v for _, v, _ in joined])
    mkt = np.array([m for _, _, m in joined])
    quartiles = np.array([_quartile_of(qmap, int(d), "day") for d in days])

    table = ReportTable("quartiles", ["slope", "pvalue", "adj_r2", "n"])
    notes: List[str] = []
    if dropped:
        notes.append(f"{dropped} days without a market observation were dropped")
    nan = float("nan")
    for q in (1, 2, 3, 4):
        mask = quartiles == q
        n = int(mask.sum())
        if n < min_days:
            table.add(f"Q{q}", {"slope": nan, "pvalue": nan, "adj_r2": nan, "n": n})
            notes.append(f"Q{q}: insufficient ({n} days, need {min_days})")
            continue
        fit = ols(mkt[mask], nw[mask][:, None])
        table.add(
            f"Q{q}",
            {
                "slope": float(fit.params[1]),
                "pvalue": float(fit.pvalues[1]),
                "adj_r2": float(fit.rsquared_adj),
                "n": n,
            },
        )

    share_table = ReportTable("exchange_share", ["pct"])
    finite: List[float] = []
    for d, v, m in joined:
        denom = v + m
        share = 100.0 * v / denom if denom > 0 else nan
        if share == share:
            finite.append(share)
        share_table.add(fmt_date(d), {"pct": share})
    share_table.add("mean", {"pct": sum(finite) / len(finite) if finite else nan})

    return StudyReport(
        study="market",
        inputs={
            "daily_nonwash": digest_daily(daily_nonwash),
            "market": digest_aux(market),
            "labels": digest_labels(labels),
        },
        parameters={"min_days": min_days},
        tables={"quartiles": table, "exchange_share": share_table},
        notes=notes,
    )


def study_cross_asset(
    bars: BarSeries,
    assets: Sequence[AssetBarSeries],
    var_order: int = 4,
    horizons: int = 10,
) -> StudyReport:
    """Response of wash volume to shocks in outside asset markets.

    Each nonzero asset column enters a two-variable VAR with wash volume
    (wash ordered first); the table holds the percent responses of wash to a
    one-standard-deviation shock in the asset variable. All-zero columns
    (markets closed throughout) are skipped with a note.
    """
    wash = bars.column("wash")
    starts = bars.starts()
    notes: List[str] = []
    inputs = {"bars": digest_bars(bars)}
    columns: List[str] = []
    responses: Dict[str, np.ndarray] = {}
    nobs: Dict[str, int] = {}

    seen = set()
    for ab in assets:
        if ab.label in seen:
            raise DataError(f"duplicate asset label {ab.label!r}")
        seen.add(ab.label)
        inputs[f"asset:{ab.label}"] = digest_asset(ab)
        if not np.array_equal(ab.starts, starts):
            raise DataError(f"asset {ab.label!r} is not on the bar grid")
        for col in ASSET_COLUMNS:
            vals = ab.columns[col]
            name = f"{ab.label}:{col}"
            if not np.any(vals != 0.0):
                notes.append(f"{name}: all zero; skipped")
                continue
            data = np.column_stack([wash, vals])
            model = var_fit(data, var_order, names=["wash", name])
            irfm = irf(model, horizons)
            columns.append(name)
            responses[name] = irfm.percent_response("wash", name)
            nobs[name] = model.nobs

    table = ReportTable("irf", columns)
    for h in range(1, horizons + 1):
        table.add(f"h={h}", {c: float(responses[c][h - 1]) for c in columns})
    table.add("sum", {c: float(responses[c][:horizons].sum()) for c in columns})
    table.add("n", {c: float(nobs[c]) for c in columns})

    return StudyReport(
        study="cross_asset",
        inputs=inputs,
        parameters={"var_order": var_order, "horizons": horizons},
        tables={"irf": table},
        notes=notes,
    )


def study_media(
    weekly: Sequence[WeeklyBucket],
    trends: AuxSeries,
    var_order: int = 4,
    horizons: int = 10,
    min_weeks: int = 20,
) -> StudyReport:
    """Impulse responses conditioned on public search attention.

    Weeks (already screened for in-week stationarity) are split at the median
    trend score: strictly above versus at-or-below. Each side gets its own
    VAR on the five weekly sums, with the order clamped down when a side has
    too few weeks to support it.
    """
    if trends.kind != "trends":
        raise DataError(f"expected trends aux series, got {trends.kind!r}")
    if not weekly:
        raise DataError("no weeks to analyze")
    tmap: Dict[int, float] = {}
    for p in trends.points:
        tmap[week_start_of(p.ts)] = p.values["score"]
    scores = []
    for wk in weekly:
        if wk.week_start not in tmap:
            raise DataError(f"no trend score for week {fmt_date(wk.week_start)}")
        scores.append(tmap[wk.week_start])
    scores = np.array(scores)
    if scores.max() == scores.min():
        raise AnalysisAbort("trend scores are constant; median split impossible")
    median = float(np.median(scores))

    tables: Dict[str, ReportTable] = {}
    notes = [f"{len(weekly)} weeks in; trend median {median!r}"]
    k = len(STUDY_SERIES)
    for side, group in (
        ("above", [wk for wk, s in zip(weekly, scores) if s > median]),
        ("below", [wk for wk, s in zip(weekly, scores) if s <= median]),
    ):
        n = len(group)
        if n < min_weeks:
            notes.append(f"{side}: only {n} weeks (need {min_weeks}); skipped")
            continue
        data = np.array([[wk.sums[name] for name in STUDY_SERIES] for wk in group])
        p = var_order
        while p > 1 and n - p <= k * p + 1:  # var_fit feasibility
            p -= 1
        if p != var_order:
            notes.append(f"{side}: VAR order clamped to {p}")
        model = var_fit(data, p, names=list(STUDY_SERIES))
        irfm = irf(model, horizons)
        tables[side] = _irf_table(side, irfm, _EVENT_IRF_PAIRS, n, horizons)
    notes.append(_BLANK_CELL_NOTE)

    return StudyReport(
        study="media",
        inputs={"weekly": digest_weekly(weekly), "trends": digest_aux(trends)},
        parameters={
            "var_order": var_order,
            "horizons": horizons,
            "min_weeks": min_weeks,
        },
        tables=tables,
        notes=notes,
    )


def study_event(
    bars: BarSeries,
    config: EventConfig = EventConfig(),
    var_order: int = 4,
    horizons: int = 10,
) -> StudyReport:
    """Separate VARs on the bars before and after an event timestamp."""
    tables: Dict[str, ReportTable] = {}
    for name, win, days in (
        ("pre", config.pre_window, config.pre_days),
        ("post", config.post_window, config.post_days),
    ):
        expected = days * (DAY // BAR_SECONDS)
        try:
            sub = bars.slice(win)
        except DataError:
            raise DataError(
                f"{name} window {fmt_ts(win.start)}..{fmt_ts(win.end)} has no bars"
            ) from None
        if len(sub) != expected:
            raise DataError(
                f"{name} window needs {expected} bars, found {len(sub)}"
            )
        model = var_fit(sub.matrix(), var_order, names=list(STUDY_SERIES))
        irfm = irf(model, horizons)
        tables[name] = _irf_table(name, irfm, _EVENT_IRF_PAIRS, len(sub), horizons)

    return StudyReport(
        study="event",
        inputs={"bars": digest_bars(bars)},
        parameters={
            "event": fmt_ts(config.event_ts),
            "pre_days": config.pre_days,
            "post_days": config.post_days,
            "var_order": var_order,
            "horizons": horizons,
        },
        tables=tables,
        notes=[_BLANK_CELL_NOTE],
    )
