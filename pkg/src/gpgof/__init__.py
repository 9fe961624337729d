"""Goodness-of-fit tests for count distributions in the GP family.

The family covers the Katz, Poisson-Poisson (Neyman type A) and
Poisson-Binomial laws, all characterised by a linear recurrence on the pmf.
The test statistic is a weighted sum of squared empirical residuals of that
recurrence, calibrated by parametric bootstrap.
"""

from .alternatives import AlternativeSpec, sample_alt
from .bootstrap import (
    ALL_STATISTICS,
    GofTestResult,
    bootstrap_test,
    bootstrap_tests,
    critical_value,
    p_value,
    reject,
)
from .counts import CountSample
from .edf import DegenerateModelWarning, ad_statistic, cvm_statistic
from .families import (
    ComputationError,
    DomainError,
    EstimationError,
    Family,
    FamilySpec,
    FittedParams,
    PmfTable,
    estimate_moments,
    moments,
    p0_series,
    pmf_table,
    q_coeff,
    sample,
)
from .harness import ConfigError, SimConfig, SimResult, run_diagnostics, run_experiment
from .statistic import (
    PRESETS,
    DhatVector,
    Recommendation,
    WeightDiagnostics,
    WeightScheme,
    dhat,
    diagnostics,
    statistic,
    weight,
)

__version__ = "0.1.0"

__all__ = [
    "ALL_STATISTICS",
    "PRESETS",
    "AlternativeSpec",
    "ComputationError",
    "ConfigError",
    "CountSample",
    "DegenerateModelWarning",
    "DhatVector",
    "DomainError",
    "EstimationError",
    "Family",
    "FamilySpec",
    "FittedParams",
    "GofTestResult",
    "PmfTable",
    "Recommendation",
    "SimConfig",
    "SimResult",
    "WeightDiagnostics",
    "WeightScheme",
    "ad_statistic",
    "bootstrap_test",
    "bootstrap_tests",
    "critical_value",
    "cvm_statistic",
    "dhat",
    "diagnostics",
    "estimate_moments",
    "moments",
    "p0_series",
    "p_value",
    "pmf_table",
    "q_coeff",
    "reject",
    "run_diagnostics",
    "run_experiment",
    "sample",
    "sample_alt",
    "statistic",
    "weight",
]
