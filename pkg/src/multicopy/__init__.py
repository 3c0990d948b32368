"""Discriminating two pure states from N copies with collective, fixed and adaptive measurements."""

from .bounds import (
    BinaryChannel,
    ChernoffResult,
    best_measured_chernoff,
    chernoff_min,
    chernoff_value,
    statistical_overlap,
)
from .ensemble import (
    Ensemble,
    MeasurementAngle,
    collective_error,
    collective_error_asymptote,
    helstrom_angle,
    helstrom_error,
    make_ensemble,
    outcome_prob,
    posterior_update,
)
from .exact import (
    EvalReport,
    exact_error,
    r_function,
    stationarity_check,
    verify_induction_invariant,
    verify_recursion,
)
from .montecarlo import SimConfig, SimReport, sample_trial, simulate
from .strategies import (
    BayesState,
    OutcomeHistory,
    StrategyKind,
    adaptive_angle_closed,
    bayes_step,
    decide,
    next_angle,
)

__version__ = "0.1.0"
