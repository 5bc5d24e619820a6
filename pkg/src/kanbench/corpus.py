"""The ten benchmark functions, the additive-noise model and dataset generation.

Function ids f1..f10 cover six regularity classes; "kx:<slope>" ids give the
linear slope family used by the epochs-versus-slope study.  Test targets are
always available noise-free; training targets get i.i.d. zero-mean Gaussian
noise when sigma > 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = [
    "CorpusFunction",
    "NoiseModel",
    "Dataset",
    "CorpusDomainError",
    "FUNCTIONS",
    "get_function",
    "eval_function",
    "linear_slope_function",
    "make_dataset",
    "export_dataset",
    "N_TEST_POINTS",
]

N_TEST_POINTS = 1000

CATEGORIES = ("regular", "nondiff", "jump", "singular", "oscillatory", "linear-slope")


class CorpusDomainError(ValueError):
    """Evaluation requested at a point where the function is undefined."""


@dataclass(frozen=True)
class CorpusFunction:
    id: str
    fn: Callable[[np.ndarray], np.ndarray]
    domain: tuple[float, float]
    category: str
    formula: str
    # in-domain points where the function has no value (e.g. cos(1/x) at 0)
    undefined_points: tuple[float, ...] = ()

    def __call__(self, x):
        xa = np.asarray(x, dtype=np.float64)
        for p in self.undefined_points:
            if np.any(xa == p):
                raise CorpusDomainError(f"{self.id} is undefined at x={p}")
        out = self.fn(xa)
        return float(out) if np.ndim(x) == 0 else out


def _f5(x):
    return np.where(np.abs(x) < 0.5, 1.0, 0.0)


def _f6(x):
    return np.where(np.abs(x) < 0.5, 1.0 - 4.0 * x * x, 1.0)


FUNCTIONS: dict[str, CorpusFunction] = {
    f.id: f
    for f in [
        CorpusFunction("f1", lambda x: x * x, (-1.0, 1.0), "regular", "x^2"),
        CorpusFunction("f2", np.exp, (-1.0, 1.0), "regular", "exp(x)"),
        CorpusFunction("f3", np.abs, (-1.0, 1.0), "nondiff", "|x|"),
        CorpusFunction("f4", lambda x: 1.0 - np.sqrt(np.abs(x)), (-1.0, 1.0), "nondiff", "1 - sqrt(|x|)"),
        CorpusFunction("f5", _f5, (-1.0, 1.0), "jump", "1 if |x|<0.5 else 0"),
        CorpusFunction("f6", _f6, (-1.0, 1.0), "jump", "1-4x^2 if |x|<0.5 else 1"),
        CorpusFunction("f7", lambda x: 1.0 / x, (0.001, 1.0), "singular", "1/x", undefined_points=(0.0,)),
        CorpusFunction(
            "f8",
            lambda x: 1.0 / (1.0 - x * x) - 1.0,
            (-0.999, 0.999),
            "singular",
            "1/(1-x^2) - 1",
            undefined_points=(-1.0, 1.0),
        ),
        CorpusFunction(
            "f9", lambda x: np.cos(1.0 / x), (-0.999, 0.999), "oscillatory", "cos(1/x)", undefined_points=(0.0,)
        ),
        CorpusFunction(
            "f10",
            lambda x: np.cos(2.0 * np.pi / (1.0 - x * x)),
            (-0.999, 0.999),
            "oscillatory",
            "cos(2*pi/(1-x^2))",
            undefined_points=(-1.0, 1.0),
        ),
    ]
}


def linear_slope_function(k: float) -> CorpusFunction:
    """f(x) = k*x on [0, 1]; derivative is k everywhere."""
    if not math.isfinite(k):
        raise ValueError("slope must be finite")
    return CorpusFunction(
        id=f"kx:{k:g}",
        fn=lambda x, k=k: k * x,
        domain=(0.0, 1.0),
        category="linear-slope",
        formula=f"{k:g}*x",
    )


def get_function(fid) -> CorpusFunction:
    if isinstance(fid, CorpusFunction):
        return fid
    if fid in FUNCTIONS:
        return FUNCTIONS[fid]
    if isinstance(fid, str) and fid.startswith("kx:"):
        return linear_slope_function(float(fid[3:]))
    raise KeyError(f"unknown corpus function {fid!r}")


def eval_function(fid, x):
    """Closed-form value; raises CorpusDomainError at true singularities."""
    return get_function(fid)(x)


@dataclass(frozen=True)
class NoiseModel:
    """Additive zero-mean Gaussian noise; sigma=0 reproduces the clean data."""

    sigma: float = 0.0
    seed: int = 0
    kind: str = "gaussian"

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError("sigma must be >= 0")


@dataclass
class Dataset:
    function_id: str
    sigma: float
    seed: int
    n_train: int
    x_train: np.ndarray
    y_train: np.ndarray  # noisy when sigma > 0
    y_train_clean: np.ndarray
    x_test: np.ndarray
    y_test: np.ndarray  # always clean
    y_test_noisy: np.ndarray | None = None


def make_dataset(fid, n_train: int, sigma: float = 0.0, seed: int = 0,
                 noisy_test: bool = False) -> Dataset:
    """Seeded dataset: uniform train inputs, 1000 equispaced test points.

    Train points landing exactly on an undefined point are redrawn from the
    same stream, so generation stays reproducible.
    """
    if n_train < 1:
        raise ValueError("n_train must be >= 1")
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    f = get_function(fid)
    a, b = f.domain
    rng = np.random.default_rng(seed)

    x_train = rng.uniform(a, b, size=n_train)
    if f.undefined_points:
        bad = np.isin(x_train, f.undefined_points)
        while np.any(bad):
            x_train[bad] = rng.uniform(a, b, size=int(bad.sum()))
            bad = np.isin(x_train, f.undefined_points)

    y_clean = f(x_train)
    noise = rng.standard_normal(n_train)
    y_train = y_clean + sigma * noise

    x_test = np.linspace(a, b, N_TEST_POINTS)
    if f.undefined_points and np.any(np.isin(x_test, f.undefined_points)):
        raise CorpusDomainError(f"test grid for {f.id} hits an undefined point")
    y_test = f(x_test)
    y_test_noisy = None
    if noisy_test:
        y_test_noisy = y_test + sigma * rng.standard_normal(N_TEST_POINTS)

    return Dataset(
        function_id=f.id,
        sigma=sigma,
        seed=seed,
        n_train=n_train,
        x_train=x_train,
        y_train=y_train,
        y_train_clean=y_clean,
        x_test=x_test,
        y_test=y_test,
        y_test_noisy=y_test_noisy,
    )


def export_dataset(ds: Dataset, path) -> None:
    """Training samples as CSV: header x,y_clean,y_noisy, 17 significant digits."""
    with open(path, "w", newline="\n") as fh:
        fh.write("x,y_clean,y_noisy\n")
        for x, yc, yn in zip(ds.x_train, ds.y_train_clean, ds.y_train):
            fh.write(f"{x:.17g},{yc:.17g},{yn:.17g}\n")
