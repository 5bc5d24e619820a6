"""KAN and MLP construction, forward evaluation and parameter accounting.

Both network kinds expose one flat float64 parameter vector; layer weights
and edge coefficients are numpy views into it, so a ParamView write is
immediately visible to every evaluation path.  Forward evaluation comes in
two flavours that must agree: a fast numeric path over arrays, and a tape
path over autodiff Vars used for training.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .autodiff import Var, op_binary, op_unary, vsum
from .spline import (
    EdgeFunction,
    SplineSpec,
    _basis_on_tape,
    edge_value,
    make_knots,
    silu_values,
)

__all__ = [
    "MlpNetwork",
    "KanNetwork",
    "ParamView",
    "NonFiniteError",
    "build_mlp",
    "build_kan",
    "forward",
    "forward_with_params",
    "count_params",
    "save_checkpoint",
    "load_checkpoint",
]

ACTIVATIONS = ("silu", "relu", "tanh")


class NonFiniteError(ArithmeticError):
    """A forward pass produced a non-finite intermediate."""


def _check_widths(widths):
    widths = tuple(int(w) for w in widths)
    if len(widths) < 2 or any(w < 1 for w in widths):
        raise ValueError(f"invalid layer widths {widths}")
    return widths


class ParamView:
    """Ordered flat view of every trainable real in a network."""

    def __init__(self, flat: np.ndarray):
        self._flat = flat

    def __len__(self):
        return self._flat.shape[0]

    @property
    def flat(self) -> np.ndarray:
        """The underlying vector itself (in-place updates allowed)."""
        return self._flat

    def get(self) -> np.ndarray:
        return self._flat.copy()

    def set(self, vec) -> None:
        self._flat[:] = vec


@dataclass
class MlpNetwork:
    widths: tuple
    activation: str
    seed: int
    flat: np.ndarray
    layers: list  # [(W view (out,in), b view (out,)), ...]
    kind: str = "mlp"

    def param_view(self) -> ParamView:
        return ParamView(self.flat)


@dataclass
class KanNetwork:
    widths: tuple
    spec: SplineSpec
    seed: int
    flat: np.ndarray
    layers: list  # [layer][i_in][j_out] -> EdgeFunction
    kind: str = "kan"

    def param_view(self) -> ParamView:
        return ParamView(self.flat)


def build_mlp(widths, activation: str = "silu", seed: int = 0) -> MlpNetwork:
    """MLP with Kaiming-uniform weights (scale 1/sqrt(fan_in)) and zero biases."""
    widths = _check_widths(widths)
    if activation not in ACTIVATIONS:
        raise ValueError(f"unknown activation {activation!r}")
    n = sum(widths[l - 1] * widths[l] + widths[l] for l in range(1, len(widths)))
    flat = np.zeros(n)
    rng = np.random.default_rng(seed)

    layers = []
    ofs = 0
    for l in range(1, len(widths)):
        n_in, n_out = widths[l - 1], widths[l]
        W = flat[ofs : ofs + n_in * n_out].reshape(n_out, n_in)
        ofs += n_in * n_out
        b = flat[ofs : ofs + n_out]
        ofs += n_out
        bound = 1.0 / np.sqrt(n_in)
        W[:] = rng.uniform(-bound, bound, size=(n_out, n_in))
        layers.append((W, b))
    return MlpNetwork(widths=widths, activation=activation, seed=seed, flat=flat, layers=layers)


def build_kan(widths, spec: SplineSpec | None = None, seed: int = 0) -> KanNetwork:
    """KAN whose edges are spline + scaled SiLU; nodes sum incoming edges.

    Spline coefficients start from a seeded normal with sigma=0.1, both
    branch scales start at 1.  The frozen 4-real accounting slot per edge is
    allocated outside the trainable vector.
    """
    widths = _check_widths(widths)
    spec = spec or SplineSpec()
    knots = make_knots(spec)
    per_edge = spec.n_basis + 2
    n_edges = sum(widths[l - 1] * widths[l] for l in range(1, len(widths)))
    flat = np.zeros(n_edges * per_edge)
    rng = np.random.default_rng(seed)

    layers = []
    ofs = 0
    for l in range(1, len(widths)):
        n_in, n_out = widths[l - 1], widths[l]
        grid_edges = []
        for _i in range(n_in):
            row = []
            for _j in range(n_out):
                coef = flat[ofs : ofs + spec.n_basis]
                ofs += spec.n_basis
                scales = flat[ofs : ofs + 2]
                ofs += 2
                coef[:] = rng.normal(0.0, 0.1, size=spec.n_basis)
                scales[:] = (1.0, 1.0)
                row.append(EdgeFunction(spec=spec, knots=knots, coef=coef, scales=scales))
            grid_edges.append(row)
        layers.append(grid_edges)
    return KanNetwork(widths=widths, spec=spec, seed=seed, flat=flat, layers=layers)


# -- numeric forward -------------------------------------------------------


def _act_values(kind, z):
    if kind == "silu":
        return silu_values(z)
    if kind == "relu":
        return np.maximum(z, 0.0)
    return np.tanh(z)


def _forward_values_mlp(net, x):
    h = x
    for l, (W, b) in enumerate(net.layers):
        z = W @ h + b[:, None]
        if not np.all(np.isfinite(z)):
            raise NonFiniteError(f"non-finite output of mlp layer {l}")
        h = _act_values(net.activation, z) if l < len(net.layers) - 1 else z
    return h


def _forward_values_kan(net, x):
    h = x
    for l, grid_edges in enumerate(net.layers):
        n_out = len(grid_edges[0])
        z = np.zeros((n_out, h.shape[1]))
        for i, row in enumerate(grid_edges):
            for j, edge in enumerate(row):
                z[j] += edge_value(edge, h[i])
        if not np.all(np.isfinite(z)):
            raise NonFiniteError(f"non-finite output of kan layer {l}")
        h = z
    return h


def forward_values(net, x):
    """Numeric forward pass: scalar -> float, (n,) array -> (n,) array.

    Multivariate nets take a (width_in, n) array and return (width_out, n).
    """
    x = np.asarray(x, dtype=np.float64)
    scalar_in = x.ndim == 0
    if x.ndim <= 1:
        if net.widths[0] != 1:
            raise ValueError(f"network expects {net.widths[0]} inputs")
        h = np.atleast_1d(x)[None, :]
    else:
        h = x
    out = _forward_values_mlp(net, h) if net.kind == "mlp" else _forward_values_kan(net, h)
    if net.widths[-1] == 1 and x.ndim <= 1:
        return float(out[0, 0]) if scalar_in else out[0]
    return out


# -- tape forward -----------------------------------------------------------


def _bind_mlp(net, tape):
    """Parameter leaves in flat order: per layer W row-major, then b."""
    params = []
    layer_vars = []
    for W, b in net.layers:
        w_vars = [[tape.variable(W[j, i]) for i in range(W.shape[1])] for j in range(W.shape[0])]
        b_vars = [tape.variable(bv) for bv in b]
        for j in range(W.shape[0]):
            params.extend(w_vars[j])
        params.extend(b_vars)
        layer_vars.append((w_vars, b_vars))
    return params, layer_vars


def _forward_tape_mlp(net, xs, layer_vars):
    h = xs
    for l, (w_vars, b_vars) in enumerate(layer_vars):
        z = []
        for j in range(len(w_vars)):
            terms = [op_binary(w_vars[j][i], h[i], "mul") for i in range(len(h))]
            terms.append(b_vars[j])
            z.append(vsum(terms))
        _check_layer_finite(z, f"mlp layer {l}")
        if l < len(layer_vars) - 1:
            if net.activation == "silu":
                h = [op_unary(v, "silu") for v in z]
            elif net.activation == "relu":
                h = [op_unary(v, "relu") for v in z]
            else:
                h = [op_unary(v, "tanh") for v in z]
        else:
            h = z
    return h


def _bind_kan(net, tape):
    from .spline import bind_edge

    params = []
    layer_params = []
    for grid_edges in net.layers:
        rows = []
        for row in grid_edges:
            prow = []
            for edge in row:
                ep = bind_edge(edge, tape)
                params.extend(ep.coef)
                params.append(ep.w_b)
                params.append(ep.w_s)
                prow.append(ep)
            rows.append(prow)
        layer_params.append(rows)
    return params, layer_params


def _forward_tape_kan(net, xs, layer_params):
    h = xs
    for l, (grid_edges, grid_params) in enumerate(zip(net.layers, layer_params)):
        n_out = len(grid_edges[0])
        sums = [[] for _ in range(n_out)]
        for i, (row, prow) in enumerate(zip(grid_edges, grid_params)):
            # basis and base activation depend only on the input node: share
            # them across this input's outgoing edges
            bs = _basis_on_tape(net.spec, row[0].knots, h[i])
            base = op_unary(h[i], "silu")
            for j, (edge, ep) in enumerate(zip(row, prow)):
                spline_branch = vsum(
                    [op_binary(c, b, "mul") for c, b in zip(ep.coef, bs)]
                )
                out = op_binary(ep.w_b, base, "mul") + op_binary(ep.w_s, spline_branch, "mul")
                sums[j].append(out)
        z = [vsum(terms) for terms in sums]
        _check_layer_finite(z, f"kan layer {l}")
        h = z
    return h


def _check_layer_finite(nodes, where):
    for v in nodes:
        val = v.value
        ok = np.all(np.isfinite(val)) if isinstance(val, np.ndarray) else np.isfinite(val)
        if not ok:
            raise NonFiniteError(f"non-finite output of {where}")


def forward_with_params(net, x):
    """Tape forward pass returning (output Var, parameter leaves in flat order).

    ``x`` is a Var (scalar- or batch-valued) for width-1 inputs, or a list of
    Vars for multivariate nets.
    """
    xs = [x] if isinstance(x, Var) else list(x)
    if len(xs) != net.widths[0]:
        raise ValueError(f"network expects {net.widths[0]} inputs, got {len(xs)}")
    tape = xs[0].tape
    if net.kind == "mlp":
        params, layer_vars = _bind_mlp(net, tape)
        out = _forward_tape_mlp(net, xs, layer_vars)
    else:
        params, layer_params = _bind_kan(net, tape)
        out = _forward_tape_kan(net, xs, layer_params)
    return (out[0] if net.widths[-1] == 1 else out), params


def forward(net, x):
    """Differentiable when given Var input(s); plain numeric otherwise."""
    if isinstance(x, Var) or (isinstance(x, (list, tuple)) and x and isinstance(x[0], Var)):
        out, _ = forward_with_params(net, x)
        return out
    return forward_values(net, x)


# -- accounting -------------------------------------------------------------


def count_params(net, convention: str = "trainable") -> int:
    """Parameter count; ``table2`` includes the frozen affine slot per edge."""
    if convention not in ("trainable", "table2"):
        raise ValueError(f"unknown convention {convention!r}")
    widths = net.widths
    if net.kind == "mlp":
        return sum(widths[l - 1] * widths[l] + widths[l] for l in range(1, len(widths)))
    per_edge = net.spec.n_basis + (6 if convention == "table2" else 2)
    return sum(widths[l - 1] * widths[l] * per_edge for l in range(1, len(widths)))


# -- checkpoints ------------------------------------------------------------


def save_checkpoint(net, path):
    """JSON header line + little-endian float64 flat parameter vector."""
    header = {"kind": net.kind, "widths": list(net.widths), "seed": net.seed}
    if net.kind == "mlp":
        header["activation"] = net.activation
    else:
        header["grid"] = net.spec.grid
        header["k"] = net.spec.degree
        header["domain"] = list(net.spec.domain)
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode() + b"\n")
        fh.write(net.flat.astype("<f8").tobytes())


def load_checkpoint(path):
    with open(path, "rb") as fh:
        header = json.loads(fh.readline().decode())
        raw = fh.read()
    if header["kind"] == "mlp":
        net = build_mlp(header["widths"], activation=header["activation"], seed=header["seed"])
    else:
        spec = SplineSpec(grid=header["grid"], degree=header["k"], domain=tuple(header["domain"]))
        net = build_kan(header["widths"], spec=spec, seed=header["seed"])
    vec = np.frombuffer(raw, dtype="<f8")
    if vec.shape[0] != net.flat.shape[0]:
        raise ValueError(f"checkpoint has {vec.shape[0]} params, network needs {net.flat.shape[0]}")
    net.flat[:] = vec
    return net
