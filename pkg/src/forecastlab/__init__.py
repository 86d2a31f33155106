"""Deterministic univariate forecasting pipeline with auditable decision logs."""

from .advisor import Advisor, AdvisorDecision, InsufficientQualityError, LLMClient, LLMConfig
from .ensemble import (
    EnsembleConfig,
    EnsembleDecision,
    aggregate_scores,
    combine,
    decide,
    disagreement_index,
    gap_test,
    performance_weights,
)
from .models import (
    Forecast,
    MODEL_IDS,
    ModelFailureError,
    ModelSpec,
    fit_forecast,
    hyperparameter_space,
    minimum_train_length,
)
from .pipeline import (
    PipelineConfig,
    PipelineError,
    PipelineResult,
    SliceResult,
    make_slices,
    replay_slice,
    run_pipeline,
)
from .planner import BacktestRecord, Candidate, CandidatePool, backtest_pool, rank_top_models
from .preprocess import (
    DetectionPolicy,
    QualityDiagnostics,
    RepairPolicy,
    detect_outliers,
    diagnose,
    fill_missing,
)
from .profiling import TemporalProfile, acf_pacf, adf_test, build_profile, decompose
from .reporter import IntervalForecast, WorkflowLog, build_intervals, render_report
from .series import Series, SplitSpec, mae, mape, metrics_pair, split

__version__ = "0.1.0"

__all__ = [
    "Advisor",
    "AdvisorDecision",
    "BacktestRecord",
    "Candidate",
    "CandidatePool",
    "DetectionPolicy",
    "EnsembleConfig",
    "EnsembleDecision",
    "Forecast",
    "IntervalForecast",
    "InsufficientQualityError",
    "LLMClient",
    "LLMConfig",
    "MODEL_IDS",
    "ModelFailureError",
    "ModelSpec",
    "PipelineConfig",
    "PipelineError",
    "PipelineResult",
    "QualityDiagnostics",
    "RepairPolicy",
    "Series",
    "SliceResult",
    "SplitSpec",
    "TemporalProfile",
    "WorkflowLog",
    "acf_pacf",
    "adf_test",
    "aggregate_scores",
    "backtest_pool",
    "build_intervals",
    "build_profile",
    "combine",
    "decide",
    "decompose",
    "detect_outliers",
    "diagnose",
    "disagreement_index",
    "fill_missing",
    "fit_forecast",
    "gap_test",
    "hyperparameter_space",
    "mae",
    "make_slices",
    "mape",
    "metrics_pair",
    "minimum_train_length",
    "performance_weights",
    "rank_top_models",
    "render_report",
    "replay_slice",
    "run_pipeline",
    "split",
    "__version__",
]
