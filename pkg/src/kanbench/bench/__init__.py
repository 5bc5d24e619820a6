"""Experiment harness: plans, execution pool, CSV outputs, CLI."""

from .plans import TABLE2_PAIRS, ExperimentPlan, PairSpec, load_plan
from .runner import (
    ComparisonSummary,
    PlanResult,
    build_cells,
    epochs_to_factor_of_final,
    epochs_to_threshold,
    matched_time_run,
    run_cell,
    run_plan,
    slope_study,
    summarize,
)
from .csvio import write_plan_outputs

__all__ = [
    "TABLE2_PAIRS",
    "ExperimentPlan",
    "PairSpec",
    "load_plan",
    "ComparisonSummary",
    "PlanResult",
    "build_cells",
    "epochs_to_factor_of_final",
    "epochs_to_threshold",
    "matched_time_run",
    "run_cell",
    "run_plan",
    "slope_study",
    "summarize",
    "write_plan_outputs",
]
