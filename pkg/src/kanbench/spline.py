"""Uniform B-spline basis evaluation and the learnable KAN edge function.

An edge carries a spline branch (coefficients over a fixed uniform grid) plus
a scaled SiLU base branch: edge(x) = w_b * silu(x) + w_s * sum_i c_i B_i(x).
The grid never moves during training.  Evaluation outside the grid domain
uses the natural polynomial extension of the boundary pieces, so gradients
stay smooth when hidden-layer pre-activations leave the grid.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .autodiff import Var, affine, op_binary, op_unary, vsum

__all__ = [
    "SplineSpec",
    "KnotVector",
    "EdgeFunction",
    "EdgeParams",
    "make_knots",
    "basis",
    "silu_values",
    "edge_value",
    "edge_eval",
    "edge_eval_with_params",
    "fit_coef_least_squares",
]


@dataclass(frozen=True)
class SplineSpec:
    """Grid interval count, spline degree and grid domain of one edge."""

    grid: int = 3
    degree: int = 3
    domain: tuple[float, float] = (-1.0, 1.0)

    def __post_init__(self):
        if self.grid < 1:
            raise ValueError("grid interval count must be >= 1")
        if self.degree < 0:
            raise ValueError("spline degree must be >= 0")
        a, b = self.domain
        if not a < b:
            raise ValueError(f"invalid domain [{a}, {b}]")

    @property
    def n_basis(self) -> int:
        return self.grid + self.degree


@dataclass(frozen=True)
class KnotVector:
    """Uniform extended knot sequence: G + 2k + 1 knots, k steps past each end."""

    knots: np.ndarray
    step: float


def make_knots(spec: SplineSpec) -> KnotVector:
    a, b = spec.domain
    G, k = spec.grid, spec.degree
    h = (b - a) / G
    knots = a + h * np.arange(-k, G + k + 1, dtype=np.float64)
    # pin the domain ends against accumulated rounding
    knots[k] = a
    knots[G + k] = b
    return KnotVector(knots=knots, step=h)


def _interval_index(spec, x):
    """Index j with knots[j] <= x < knots[j+1], clamped to the interior.

    Clamping the *index* (never x itself) makes out-of-domain evaluation use
    the boundary piece's polynomial extension.
    """
    a, _ = spec.domain
    G, k = spec.grid, spec.degree
    h = (spec.domain[1] - a) / G
    j = np.floor((x - a) / h).astype(np.int64) + k
    return np.clip(j, k, G + k - 1)


def basis(spec: SplineSpec, knots: KnotVector, x) -> np.ndarray:
    """All G+k basis values B_{i,k}(x), via the Cox-de Boor recursion.

    ``x`` may be a scalar or 1-d array; result shape is (G+k,) or (G+k, n).
    """
    G, k = spec.grid, spec.degree
    t = knots.knots
    h = knots.step
    xa = np.atleast_1d(np.asarray(x, dtype=np.float64))
    j = _interval_index(spec, xa)

    n0 = G + 2 * k
    B = np.zeros((n0, xa.shape[0]))
    B[j, np.arange(xa.shape[0])] = 1.0
    for r in range(1, k + 1):
        inv = 1.0 / (r * h)
        nxt = np.empty((n0 - r, xa.shape[0]))
        for i in range(n0 - r):
            w1 = (xa - t[i]) * inv
            w2 = (t[i + r + 1] - xa) * inv
            nxt[i] = w1 * B[i] + w2 * B[i + 1]
        B = nxt
    out = B[: spec.n_basis]
    return out[:, 0] if np.isscalar(x) or np.ndim(x) == 0 else out


def silu_values(x):
    """Numerically stable x * sigmoid(x) for floats or arrays."""
    sig = 0.5 * (1.0 + np.tanh(0.5 * np.asarray(x, dtype=np.float64)))
    out = x * sig
    return float(out) if np.ndim(x) == 0 else out


@dataclass
class EdgeFunction:
    """One learnable edge: spline coefficients plus the two branch scales.

    ``coef`` and ``scales`` are views into the owning network's flat
    parameter vector.  ``affine_slot`` holds the four frozen accounting-only
    reals that make the counted size G+k+6 per edge; no optimizer ever
    touches them.
    """

    spec: SplineSpec
    knots: KnotVector
    coef: np.ndarray
    scales: np.ndarray  # [w_b, w_s]
    affine_slot: np.ndarray = field(default_factory=lambda: np.zeros(4))

    @property
    def w_b(self) -> float:
        return float(self.scales[0])

    @w_b.setter
    def w_b(self, v):
        self.scales[0] = v

    @property
    def w_s(self) -> float:
        return float(self.scales[1])

    @w_s.setter
    def w_s(self, v):
        self.scales[1] = v

    @property
    def n_trainable(self) -> int:
        return self.spec.n_basis + 2

    @property
    def n_counted(self) -> int:
        return self.spec.n_basis + 6


@dataclass
class EdgeParams:
    """Tape leaves for one edge's trainable parameters."""

    coef: list
    w_b: Var
    w_s: Var


def bind_edge(edge: EdgeFunction, tape) -> EdgeParams:
    """Create tape leaves from the edge's current parameter values."""
    return EdgeParams(
        coef=[tape.variable(c) for c in edge.coef],
        w_b=tape.variable(edge.scales[0]),
        w_s=tape.variable(edge.scales[1]),
    )


def _basis_on_tape(spec: SplineSpec, knots: KnotVector, x: Var) -> list[Var]:
    """Cox-de Boor recursion recorded as tape ops (differentiable in x)."""
    G, k = spec.grid, spec.degree
    t = knots.knots
    h = knots.step
    tape = x.tape

    xa = np.atleast_1d(np.asarray(x.value, dtype=np.float64))
    j = _interval_index(spec, xa)
    n0 = G + 2 * k
    # degree-0 seeds are piecewise-constant indicators: constant nodes
    cols = np.arange(xa.shape[0])
    seeds = []
    for i in range(n0):
        ind = np.zeros(xa.shape[0])
        ind[cols[j == i]] = 1.0
        if np.ndim(x.value) == 0:
            seeds.append(tape.constant(float(ind[0])))
        else:
            seeds.append(tape.constant(ind))

    B = seeds
    for r in range(1, k + 1):
        inv = 1.0 / (r * h)
        nxt = []
        for i in range(n0 - r):
            w1 = affine(x, inv, -t[i] * inv)
            w2 = affine(x, -inv, t[i + r + 1] * inv)
            nxt.append(op_binary(w1, B[i], "mul") + op_binary(w2, B[i + 1], "mul"))
        B = nxt
    return B[: spec.n_basis]


def edge_eval_with_params(edge: EdgeFunction, x: Var, params: EdgeParams | None = None):
    """Differentiable edge evaluation; returns (output, parameter leaves)."""
    if params is None:
        params = bind_edge(edge, x.tape)
    bs = _basis_on_tape(edge.spec, edge.knots, x)
    spline_branch = vsum([op_binary(c, b, "mul") for c, b in zip(params.coef, bs)])
    out = op_binary(params.w_b, op_unary(x, "silu"), "mul") + op_binary(
        params.w_s, spline_branch, "mul"
    )
    return out, params


def edge_eval(edge: EdgeFunction, x: Var) -> Var:
    """Differentiable edge evaluation; gradients flow to coef, w_b, w_s and x."""
    out, _ = edge_eval_with_params(edge, x)
    return out


def edge_value(edge: EdgeFunction, x) -> np.ndarray:
    """Plain numeric edge evaluation (no tape)."""
    bs = basis(edge.spec, edge.knots, x)
    return edge.scales[0] * silu_values(x) + edge.scales[1] * (edge.coef @ bs)


def fit_coef_least_squares(spec: SplineSpec, knots: KnotVector, xs, ys) -> np.ndarray:
    """Spline coefficients minimizing sum_j (sum_i c_i B_i(x_j) - y_j)^2."""
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if xs.shape[0] < spec.n_basis:
        raise ValueError(f"need at least {spec.n_basis} samples, got {xs.shape[0]}")
    design = basis(spec, knots, xs).T  # (n_samples, n_basis)
    coef, _, rank, _ = np.linalg.lstsq(design, ys, rcond=None)
    if rank < spec.n_basis:
        raise ValueError(
            f"design matrix rank {rank} < {spec.n_basis}: samples do not span the "
            "spline space (degenerate sampling)"
        )
    return coef
