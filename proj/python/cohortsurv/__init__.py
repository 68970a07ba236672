"""Survival analysis of character cohorts (Kaplan-Meier, Cox, logistic)."""

from ._core import (
    Cohort,
    DataError,
    Error,
    ModelError,
    baseline_table,
    cox_fit,
    cox_table,
    generate_calibrated,
    km_fit,
    log_rank,
    logit_fit,
    parse_cohort,
    read_cohort,
    run,
)

__all__ = [
    "Cohort",
    "DataError",
    "Error",
    "ModelError",
    "baseline_table",
    "cox_fit",
    "cox_table",
    "generate_calibrated",
    "km_fit",
    "log_rank",
    "logit_fit",
    "parse_cohort",
    "read_cohort",
    "run",
]
