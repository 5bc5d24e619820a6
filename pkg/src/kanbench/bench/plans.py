"""Experiment plan definitions, Table-pair registry and TOML loading.

A plan expands into a grid of fully-specified run cells (function x
network x optimizer x samples x sigma x seed); every KAN/MLP pair in a plan
comes from the same parameter-matched table row.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field

from ..corpus import get_function
from ..models import build_kan, build_mlp, count_params
from ..spline import SplineSpec

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

__all__ = ["PairSpec", "TABLE2_PAIRS", "ExperimentPlan", "load_plan", "PLAN_KINDS"]

PLAN_KINDS = (
    "sample_sweep",
    "epoch_sweep",
    "optimizer_duel",
    "slope_study",
    "noise_sweep",
    "matched_time",
)


@dataclass(frozen=True)
class PairSpec:
    """One parameter-matched KAN/MLP pair (a row of the network table)."""

    row: int
    mlp_widths: tuple
    kan_widths: tuple
    grid: int = 3
    k: int = 3

    def check_matched(self):
        mlp = build_mlp(self.mlp_widths)
        kan = build_kan(self.kan_widths, SplineSpec(grid=self.grid, degree=self.k))
        gap = abs(count_params(kan, "table2") - count_params(mlp, "trainable"))
        if gap > 2:
            raise ValueError(f"pair row {self.row} is not parameter-matched (gap {gap})")


TABLE2_PAIRS = {
    1: PairSpec(row=1, mlp_widths=(1, 7, 1), kan_widths=(1, 1, 1)),
    2: PairSpec(row=2, mlp_widths=(1, 39, 1), kan_widths=(1, 5, 1)),
    3: PairSpec(row=3, mlp_widths=(1, 79, 1), kan_widths=(1, 10, 1)),
}


def _as_list(v, cast=None):
    if not isinstance(v, (list, tuple)):
        v = [v]
    return [cast(x) if cast else x for x in v]


@dataclass
class ExperimentPlan:
    plan: str
    functions: list
    pairs: list = field(default_factory=lambda: [1])
    optimizers: list = field(default_factory=lambda: ["lbfgs"])
    epochs: list = field(default_factory=lambda: [200])
    samples: list = field(default_factory=lambda: [1000])
    sigma: list = field(default_factory=lambda: [0.0])
    seeds: list = field(default_factory=lambda: [0, 1, 2, 3, 4])
    lr: float = 0.01
    # MLP activation for the plan's runs.  The paper never names its MLP
    # activation; relu reproduces its irregular-function orderings and is
    # recorded in every fingerprint.
    activation: str = "relu"
    threshold: float = 1.0  # slope_study epochs-to-threshold target

    def __post_init__(self):
        if self.plan not in PLAN_KINDS:
            raise ValueError(f"unknown plan kind {self.plan!r}")
        if not self.functions:
            raise ValueError("plan needs at least one function")
        for fid in self.functions:
            get_function(fid)  # raises on unknown ids
        for row in self.pairs:
            if row not in TABLE2_PAIRS:
                raise ValueError(f"unknown pair row {row}")
            TABLE2_PAIRS[row].check_matched()
        for opt in self.optimizers:
            if opt not in ("adam", "lbfgs"):
                raise ValueError(f"unknown optimizer {opt!r}")
        if any(e < 1 for e in self.epochs):
            raise ValueError("epochs must be >= 1")
        if any(n < 1 for n in self.samples):
            raise ValueError("samples must be >= 1")
        if any(s < 0 for s in self.sigma):
            raise ValueError("sigma must be >= 0")


def load_plan(path, seeds_override=None) -> ExperimentPlan:
    """Read a plan TOML (keys: plan, functions, pairs, optimizer, epochs,
    samples, sigma, seeds; optional lr, activation, threshold)."""
    with open(path, "rb") as fh:
        raw = tomllib.load(fh)
    known = {"plan", "functions", "pairs", "optimizer", "epochs", "samples",
             "sigma", "seeds", "lr", "activation", "threshold"}
    unknown = set(raw) - known
    if unknown:
        raise ValueError(f"unknown plan keys: {sorted(unknown)}")
    plan = ExperimentPlan(
        plan=raw["plan"],
        functions=_as_list(raw["functions"], str),
        pairs=_as_list(raw.get("pairs", [1]), int),
        optimizers=_as_list(raw.get("optimizer", ["lbfgs"]), str),
        epochs=_as_list(raw.get("epochs", [200]), int),
        samples=_as_list(raw.get("samples", [1000]), int),
        sigma=_as_list(raw.get("sigma", [0.0]), float),
        seeds=_as_list(raw.get("seeds", [0, 1, 2, 3, 4]), int),
        lr=float(raw.get("lr", 0.01)),
        activation=str(raw.get("activation", "relu")),
        threshold=float(raw.get("threshold", 1.0)),
    )
    if seeds_override is not None:
        plan.seeds = list(range(int(seeds_override)))
    return plan
