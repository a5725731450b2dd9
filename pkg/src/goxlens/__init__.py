"""Forensic analysis of exchange trade ledgers.

The pipeline runs ingest (half-row pairing, dedup) -> detect (wash flagging)
-> features (30-minute bars, quartiles, weekly rollups) -> studies (VAR,
cointegration, impulse responses, model-based importance ranking), with a
statistics kernel in `econometrics`, regressors in `ml`, and ground-truth
generators in `synth`. The `goxlens` console script exposes the same stages
as batch subcommands.
"""

from .detect import FlaggedLedger, TimeWindow, flag_wash
from .errors import (
    AnalysisAbort,
    DataError,
    DegenerateSeriesError,
    GoxlensError,
    PairingError,
    SchemaError,
    SingularityError,
    StationarityError,
    TrainingDivergence,
)
from .features import (
    AssetBarSeries,
    Bar,
    BarSeries,
    QuartileLabel,
    SupplyCurve,
    WeeklyBucket,
    build_asset_bars,
    build_bars,
    daily_quartiles,
    daily_sums,
    filter_stationary_weeks,
    interpolate_supply,
    marketcap_share,
    weekly_rollup,
)
from .ingest import (
    AuxSeries,
    PairedTrade,
    TradeLedger,
    pair_and_dedup,
    parse_aux,
    parse_trade_log,
    write_canonical_csv,
)
from .studies import (
    EventConfig,
    ReportTable,
    StudyReport,
    study_cross_asset,
    study_event,
    study_market,
    study_media,
    study_onchain,
    study_timing,
)
from .synth import SynthSpec, gen_cointegrated_pair, gen_exchange_log, gen_var_process

__version__ = "0.1.0"

__all__ = [
    "AnalysisAbort",
    "AssetBarSeries",
    "AuxSeries",
    "Bar",
    "BarSeries",
    "DataError",
    "DegenerateSeriesError",
    "EventConfig",
    "FlaggedLedger",
    "GoxlensError",
    "PairedTrade",
    "PairingError",
    "QuartileLabel",
    "ReportTable",
    "SchemaError",
    "SingularityError",
    "StationarityError",
    "StudyReport",
    "SupplyCurve",
    "SynthSpec",
    "TimeWindow",
    "TradeLedger",
    "TrainingDivergence",
    "WeeklyBucket",
    "build_asset_bars",
    "build_bars",
    "daily_quartiles",
    "daily_sums",
    "filter_stationary_weeks",
    "flag_wash",
    "gen_cointegrated_pair",
    "gen_exchange_log",
    "gen_var_process",
    "interpolate_supply",
    "marketcap_share",
    "pair_and_dedup",
    "parse_aux",
    "parse_trade_log",
    "study_cross_asset",
    "study_event",
    "study_market",
    "study_media",
    "study_onchain",
    "study_timing",
    "weekly_rollup",
    "write_canonical_csv",
]
