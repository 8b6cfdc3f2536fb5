"""Desk-scale radio-resource-management testbed: MDP environments, a solver
catalog from closed-form optimization to tabular RL, parameter tuning, and a
technique-selection advisor."""

from .core import (
    DEFAULT_DISCOUNT,
    DEFAULT_HORIZON,
    EpisodeLog,
    Environment,
    MetricsRecord,
    Policy,
    ScriptedPolicy,
    StepOutcome,
    StepRecord,
    TabularMdp,
    discounted_return,
    metrics_summary,
    replay_episode,
    run_episode,
)
from .errors import (
    ConfigError,
    GpNumericalError,
    InvalidActionError,
    MissingDiagnosticError,
    NotTractableError,
    OccamRrmError,
    PlotDataError,
)

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_DISCOUNT",
    "DEFAULT_HORIZON",
    "ConfigError",
    "Environment",
    "EpisodeLog",
    "GpNumericalError",
    "InvalidActionError",
    "MetricsRecord",
    "MissingDiagnosticError",
    "NotTractableError",
    "OccamRrmError",
    "PlotDataError",
    "Policy",
    "ScriptedPolicy",
    "StepOutcome",
    "StepRecord",
    "TabularMdp",
    "discounted_return",
    "metrics_summary",
    "replay_episode",
    "run_episode",
    "__version__",
]
