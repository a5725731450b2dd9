"""Statistical kernel: OLS, unit roots, VAR/Granger, cointegration, IRFs."""

from .cointegration import (
    EgResult,
    JohansenResult,
    MAXEIG_CV_95,
    TRACE_CV_95,
    engle_granger,
    johansen,
    mackinnon_pvalue,
)
from .irf import IrfMatrix, irf
from .ols import OlsFit, ols
from .unitroot import AdfResult, adf, critical_values, default_max_lag
from .varmodel import (
    GrangerResult,
    VarModel,
    companion,
    granger,
    select_lag_aic,
    spectral_radius,
    var_fit,
)

__all__ = [
    "AdfResult",
    "EgResult",
    "GrangerResult",
    "IrfMatrix",
    "JohansenResult",
    "MAXEIG_CV_95",
    "OlsFit",
    "TRACE_CV_95",
    "VarModel",
    "adf",
    "companion",
    "critical_values",
    "default_max_lag",
    "engle_granger",
    "granger",
    "irf",
    "johansen",
    "mackinnon_pvalue",
    "ols",
    "select_lag_aic",
    "spectral_radius",
    "var_fit",
]
