"""Reverse-mode automatic differentiation over a scalar expression tape.

The graph is scalar-shaped: every node is one real quantity in the network.
Node *values* may either be python floats or 1-d numpy arrays holding the
evaluations of that scalar over a batch of samples; the same tape code serves
both, and a batched value is exactly equivalent to replaying the scalar graph
once per sample with shared leaves.  There is no tensor shape system, no
matmul node and no higher-order differentiation.

A tape is built fresh for every forward/backward pass and is single-threaded.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = [
    "Tape",
    "Var",
    "TapeError",
    "op_binary",
    "op_unary",
    "affine",
    "vsum",
    "reduce_mean",
    "backward",
]

BINARY_KINDS = ("add", "sub", "mul", "div")
UNARY_KINDS = ("neg", "exp", "silu", "relu", "tanh", "square", "abs")

# np.exp overflows float64 just above this
_EXP_MAX = 709.0


class TapeError(ArithmeticError):
    """An operation would have put a non-finite value on the tape."""


def _is_array(v):
    return isinstance(v, np.ndarray)


class Tape:
    """Append-only record of graph nodes in topological order.

    Each node stores its value and the local partials with respect to its
    parents as ``(parent_index, partial)`` pairs (parent indices always
    precede the node's own index).
    """

    __slots__ = ("values", "parents")

    def __init__(self):
        self.values = []
        self.parents = []

    def __len__(self):
        return len(self.values)

    def _node(self, value, parents=()):
        idx = len(self.values)
        self.values.append(value)
        self.parents.append(parents)
        return Var(self, idx, value)

    def variable(self, value):
        """Create a leaf.  ``value`` is a float or a 1-d float64 batch."""
        if _is_array(value):
            value = np.asarray(value, dtype=np.float64)
        else:
            value = float(value)
        return self._node(value)

    # Leaves and constants are identical on the tape; the split is purely
    # for readability at call sites.
    constant = variable


class Var:
    """Handle to one tape node."""

    __slots__ = ("tape", "index", "value")

    def __init__(self, tape, index, value):
        self.tape = tape
        self.index = index
        self.value = value

    def __repr__(self):
        return f"Var(idx={self.index}, value={self.value!r})"

    # arithmetic sugar; floats fold into fused affine nodes instead of
    # allocating constant leaves
    def __add__(self, other):
        if isinstance(other, Var):
            return op_binary(self, other, "add")
        return affine(self, 1.0, float(other))

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Var):
            return op_binary(self, other, "sub")
        return affine(self, 1.0, -float(other))

    def __rsub__(self, other):
        return affine(self, -1.0, float(other))

    def __mul__(self, other):
        if isinstance(other, Var):
            return op_binary(self, other, "mul")
        return affine(self, float(other), 0.0)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Var):
            return op_binary(self, other, "div")
        return affine(self, 1.0 / float(other), 0.0)

    def __neg__(self):
        return op_unary(self, "neg")


def op_binary(a: Var, b: Var, kind: str) -> Var:
    """Record ``a <kind> b``; local partials go on the tape."""
    if a.tape is not b.tape:
        raise ValueError("operands live on different tapes")
    tape = a.tape
    va, vb = a.value, b.value
    if kind == "add":
        return tape._node(va + vb, ((a.index, 1.0), (b.index, 1.0)))
    if kind == "sub":
        return tape._node(va - vb, ((a.index, 1.0), (b.index, -1.0)))
    if kind == "mul":
        return tape._node(va * vb, ((a.index, vb), (b.index, va)))
    if kind == "div":
        if np.any(vb == 0.0) if _is_array(vb) else vb == 0.0:
            raise TapeError("division by zero on the tape")
        inv = 1.0 / vb
        v = va * inv
        return tape._node(v, ((a.index, inv), (b.index, -v * inv)))
    raise ValueError(f"unknown binary op {kind!r}")


def op_unary(a: Var, kind: str) -> Var:
    tape = a.tape
    v = a.value
    if kind == "neg":
        return tape._node(-v, ((a.index, -1.0),))
    if kind == "exp":
        if np.any(v > _EXP_MAX) if _is_array(v) else v > _EXP_MAX:
            raise TapeError("exp overflow on the tape")
        e = np.exp(v) if _is_array(v) else math.exp(v)
        return tape._node(e, ((a.index, e),))
    if kind == "silu":
        # x * sigmoid(x); tanh form is stable for large |x|
        sig = 0.5 * (1.0 + np.tanh(0.5 * v))
        out = v * sig
        return tape._node(out, ((a.index, sig * (1.0 + v * (1.0 - sig))),))
    if kind == "relu":
        if _is_array(v):
            return tape._node(np.maximum(v, 0.0), ((a.index, (v > 0.0).astype(np.float64)),))
        return tape._node(max(v, 0.0), ((a.index, 1.0 if v > 0.0 else 0.0),))
    if kind == "tanh":
        t = np.tanh(v)
        return tape._node(t, ((a.index, 1.0 - t * t),))
    if kind == "square":
        return tape._node(v * v, ((a.index, 2.0 * v),))
    if kind == "abs":
        # subgradient 0 at the kink keeps training deterministic
        return tape._node(np.abs(v), ((a.index, np.sign(v)),))
    raise ValueError(f"unknown unary op {kind!r}")


def affine(a: Var, scale: float, shift: float) -> Var:
    """Fused ``scale * a + shift`` with float coefficients (one node)."""
    return a.tape._node(scale * a.value + shift, ((a.index, scale),))


def vsum(vars_: list[Var]) -> Var:
    """Sum of several nodes as a single n-ary node."""
    if not vars_:
        raise ValueError("vsum of nothing")
    if len(vars_) == 1:
        return vars_[0]
    tape = vars_[0].tape
    total = vars_[0].value
    for v in vars_[1:]:
        total = total + v.value
    return tape._node(total, tuple((v.index, 1.0) for v in vars_))


def reduce_mean(a: Var) -> Var:
    """Mean over the batch axis of an array-valued node (scalar result)."""
    v = a.value
    if _is_array(v):
        n = v.shape[0]
        return a.tape._node(float(v.mean()), ((a.index, 1.0 / n),))
    return a.tape._node(v, ((a.index, 1.0),))


def backward(root: Var) -> list:
    """Adjoints of ``root`` with respect to every node at or below it.

    Returns a list mapping node index -> gradient (float, or batch array for
    array-valued interior nodes).  ``root`` must be scalar-valued, e.g. a
    loss.  Non-finite gradients are returned as-is for the caller to judge.
    """
    if _is_array(root.value):
        raise ValueError("backward root must be scalar-valued")
    tape = root.tape
    n = root.index + 1
    values = tape.values
    parents = tape.parents
    adj = [0.0] * n
    adj[root.index] = 1.0
    for i in range(root.index, -1, -1):
        a = adj[i]
        if type(a) is float and a == 0.0:
            continue
        for j, partial in parents[i]:
            contrib = partial * a
            # an array adjoint folding into a scalar node sums over the batch
            if _is_array(contrib) and not _is_array(values[j]):
                contrib = float(contrib.sum())
            adj[j] = adj[j] + contrib
    return adj
