"""Augmented Dickey-Fuller unit-root test, constant-only case.

Critical values are the classical finite-sample tabulation for the
constant/no-trend regression (asymptotic row -3.43 / -2.86 / -2.57),
interpolated linearly in 1/T between tabulated sample sizes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..errors import DataError, DegenerateSeriesError
from .ols import ols

# Rows: T = 25, 50, 100, 250, 500, asymptotic. Columns follow _CRIT_LEVELS.
_CRIT_T = np.array([25.0, 50.0, 100.0, 250.0, 500.0, np.inf])
_CRIT_LEVELS = (1, 5, 10)
_CRIT_TABLE = np.array(
    [
        [-3.75, -3.00, -2.63],
        [-3.58, -2.93, -2.60],
        [-3.51, -2.89, -2.58],
        [-3.46, -2.88, -2.57],
        [-3.44, -2.87, -2.57],
        [-3.43, -2.86, -2.57],
    ]
)


def critical_values(nobs: int) -> dict[int, float]:
    """Interpolate the critical-value table in 1/T; clamped below T=25."""
    x = 1.0 / nobs
    xs = 1.0 / _CRIT_T[::-1]  # ascending: 0 .. 0.04
    out = {}
    for j, level in enumerate(_CRIT_LEVELS):
        ys = _CRIT_TABLE[::-1, j]
        out[level] = float(np.interp(x, xs, ys))
    return out


def default_max_lag(n: int) -> int:
    """Schwert's rule of thumb: 12 * (n/100)^0.25, floored."""
    return int(12.0 * (n / 100.0) ** 0.25)


@dataclass
class AdfResult:
    statistic: float
    lag: int
    critical: dict[int, float]  # keys 1, 5, 10 (percent)
    reject_at_5pct: bool
    nobs: int


def _adf_tstat(
    y: np.ndarray, max_lag: int, lag_rule: str, constant: bool
) -> tuple[float, int, int]:
    """t-ratio on the lagged level; returns (stat, lag used, regression nobs).

    With lag_rule="aic" the lag is chosen on a common sample (rows aligned at
    max_lag), then the winner is re-estimated on its own maximal sample.
    """
    n = len(y)
    dy = np.diff(y)

    def design(lag: int, start: int):
        # Rows are t = start .. n-2 in diff indexing: dy[t] on y[t], dy[t-1..t-lag].
        rows = np.arange(start, n - 1)
        cols = [y[rows]]
        for j in range(1, lag + 1):
            cols.append(dy[rows - j])
        return dy[rows], np.column_stack(cols)

    if lag_rule == "fixed":
        chosen = max_lag
    elif lag_rule == "aic":
        best = (np.inf, 0)
        for lag in range(max_lag + 1):
            dep, X = design(lag, max_lag)
            fit = ols(dep, X, intercept=constant)
            nobs = len(dep)
            rss = max(fit.rss, np.finfo(float).tiny)
            k = X.shape[1] + (1 if constant else 0)
            aic = np.log(rss / nobs) + 2.0 * k / nobs
            if aic < best[0]:
                best = (aic, lag)
        chosen = best[1]
    else:
        raise DataError(f"unknown lag_rule {lag_rule!r}")

    dep, X = design(chosen, chosen)
    fit = ols(dep, X, intercept=constant)
    # The lagged level is the first X column; intercept (if any) precedes it.
    pos = 1 if constant else 0
    return float(fit.tvalues[pos]), chosen, len(dep)


def adf(series, max_lag: Optional[int] = None, lag_rule: str = "aic") -> AdfResult:
    """ADF test with a constant; statistic is the t-ratio on the lagged level.

    max_lag defaults to Schwert's rule. A constant series is degenerate; a
    series shorter than 25 + max_lag is insufficient.
    """
    y = np.asarray(series, dtype=np.float64).ravel()
    n = len(y)
    if n == 0 or np.ptp(y) == 0.0:
        raise DegenerateSeriesError(f"constant series (n={n})")
    if max_lag is None:
        max_lag = default_max_lag(n)
        # keep the search feasible on short series
        max_lag = min(max_lag, max(0, (n - 25)))
    if n < 25 + max_lag:
        raise DataError(f"need >= {25 + max_lag} observations for max_lag={max_lag}, got {n}")

    stat, lag, nobs = _adf_tstat(y, max_lag, lag_rule, constant=True)
    crit = critical_values(nobs)
    return AdfResult(
        statistic=stat,
        lag=lag,
        critical=crit,
        reject_at_5pct=stat < crit[5],
        nobs=nobs,
    )
