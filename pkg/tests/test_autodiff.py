"""Gradient checks for the scalar tape against central finite differences."""

import numpy as np
import pytest

from kanbench.autodiff import (
    Tape,
    TapeError,
    affine,
    backward,
    op_binary,
    op_unary,
    reduce_mean,
    vsum,
)

H = 1e-5


def central_diff(f, x, i, h=H):
    """(f(x + h e_i) - f(x - h e_i)) / 2h -- the independent oracle."""
    up = list(x)
    dn = list(x)
    up[i] += h
    dn[i] -= h
    return (f(up) - f(dn)) / (2.0 * h)


def grad_of(build, leaf_values):
    """Tape gradient of ``build`` w.r.t. every leaf."""
    tape = Tape()
    leaves = [tape.variable(v) for v in leaf_values]
    root = build(leaves)
    adj = backward(root)
    return root.value, [adj[leaf.index] for leaf in leaves]


class TestBinaryOps:
    def test_mul_partials(self):
        tape = Tape()
        a, b = tape.variable(2.0), tape.variable(3.0)
        out = op_binary(a, b, "mul")
        assert out.value == 6.0
        adj = backward(out)
        assert adj[a.index] == 3.0
        assert adj[b.index] == 2.0

    def test_sub_self_is_zero(self):
        tape = Tape()
        x = tape.variable(1.7)
        out = op_binary(x, x, "sub")
        assert out.value == 0.0
        assert backward(out)[x.index] == 0.0

    def test_div_quotient_rule(self):
        tape = Tape()
        a, b = tape.variable(1.0), tape.variable(4.0)
        out = op_binary(a, b, "div")
        assert out.value == 0.25
        adj = backward(out)
        assert adj[b.index] == pytest.approx(-1.0 / 16.0, rel=1e-15)

    def test_div_by_zero_raises(self):
        tape = Tape()
        a, b = tape.variable(1.0), tape.variable(0.0)
        with pytest.raises(TapeError):
            op_binary(a, b, "div")

    def test_div_by_zero_in_batch_raises(self):
        tape = Tape()
        a = tape.variable(np.ones(3))
        b = tape.variable(np.array([1.0, 0.0, 2.0]))
        with pytest.raises(TapeError):
            op_binary(a, b, "div")


class TestUnaryOps:
    def test_silu_at_zero(self):
        tape = Tape()
        x = tape.variable(0.0)
        out = op_unary(x, "silu")
        assert out.value == 0.0
        assert backward(out)[x.index] == 0.5

    def test_relu_negative(self):
        tape = Tape()
        x = tape.variable(-1.0)
        out = op_unary(x, "relu")
        assert out.value == 0.0
        assert backward(out)[x.index] == 0.0

    def test_square(self):
        tape = Tape()
        x = tape.variable(3.0)
        out = op_unary(x, "square")
        assert out.value == 9.0
        assert backward(out)[x.index] == 6.0

    def test_abs_subgradient_zero_at_kink(self):
        tape = Tape()
        x = tape.variable(0.0)
        out = op_unary(x, "abs")
        assert backward(out)[x.index] == 0.0

    def test_exp_overflow_raises(self):
        tape = Tape()
        x = tape.variable(800.0)
        with pytest.raises(TapeError):
            op_unary(x, "exp")


class TestBackward:
    def test_hand_chain_rule(self):
        # root = x*y + y at x=2, y=3
        tape = Tape()
        x, y = tape.variable(2.0), tape.variable(3.0)
        root = x * y + y
        adj = backward(root)
        assert root.value == 9.0
        assert adj[x.index] == 3.0
        assert adj[y.index] == 3.0

    def test_silu_of_2x_matches_central_difference(self):
        def f(vals):
            tape = Tape()
            x = tape.variable(vals[0])
            return op_unary(affine(x, 2.0, 0.0), "silu").value

        _, (g,) = grad_of(lambda ls: op_unary(affine(ls[0], 2.0, 0.0), "silu"), [1.0])
        fd = central_diff(f, [1.0], 0)
        assert g == pytest.approx(fd, rel=1e-6)

    def test_independent_leaf_has_zero_gradient(self):
        tape = Tape()
        z = tape.variable(5.0)
        x = tape.variable(2.0)
        root = op_unary(x, "square")
        adj = backward(root)
        assert adj[z.index] == 0.0

    def test_fanout_accumulates_both_paths(self):
        # y = x*x + x: dy/dx = 2x + 1 exactly
        tape = Tape()
        x = tape.variable(1.5)
        root = op_binary(op_binary(x, x, "mul"), x, "add")
        assert backward(root)[x.index] == 2 * 1.5 + 1

    def test_batched_mse_gradient(self):
        # loss = mean((w*x - y)^2); dloss/dw = mean(2 (w x - y) x)
        xs = np.array([0.5, -1.0, 2.0])
        ys = np.array([1.0, 0.0, -1.0])
        w0 = 0.7
        tape = Tape()
        w = tape.variable(w0)
        x = tape.constant(xs)
        y = tape.constant(ys)
        loss = reduce_mean(op_unary(op_binary(op_binary(w, x, "mul"), y, "sub"), "square"))
        adj = backward(loss)
        expected = float(np.mean(2.0 * (w0 * xs - ys) * xs))
        assert adj[w.index] == pytest.approx(expected, rel=1e-14)
        assert loss.value == pytest.approx(float(np.mean((w0 * xs - ys) ** 2)), rel=1e-14)

    def test_vsum_gradients_are_ones(self):
        tape = Tape()
        leaves = [tape.variable(float(i)) for i in range(5)]
        adj = backward(vsum(leaves))
        for leaf in leaves:
            assert adj[leaf.index] == 1.0


# -- randomized gradient checks ------------------------------------------

SAFE_UNARY = ("exp", "silu", "relu", "tanh", "square")


def random_expression(rng, n_leaves=4, n_ops=12):
    """A random closed expression over the op set, safe for finite differences.

    Rejects subexpressions that would put a kink or a steep pole within
    reach of the +-h probes (relu near 0, division by small values, large
    exp arguments).
    """
    ops = []
    for _ in range(n_ops):
        kind = rng.choice(("add", "sub", "mul", "div", "unary"))
        if kind == "unary":
            ops.append(("unary", rng.choice(SAFE_UNARY)))
        else:
            ops.append((kind, None))
    operand_seed = int(rng.integers(0, 1 << 30))

    def build(leaves):
        pool = list(leaves)
        r = np.random.default_rng(operand_seed)  # operand choice, frozen per expression
        for kind, name in ops:
            a = pool[int(r.integers(0, len(pool)))]
            b = pool[int(r.integers(0, len(pool)))]
            if kind == "unary":
                val = a.value
                if name == "exp" and abs(val) > 2.5:
                    name = "tanh"
                if name == "relu" and abs(val) < 1e-2:
                    name = "square"
                pool.append(op_unary(a, name))
            elif kind == "div":
                if abs(b.value) < 0.3:
                    pool.append(op_binary(a, b, "mul"))
                else:
                    pool.append(op_binary(a, b, "div"))
            else:
                if kind == "mul" and abs(a.value * b.value) > 50.0:
                    kind = "sub"
                pool.append(op_binary(a, b, kind))
        return vsum(pool[len(leaves):]) if len(pool) > len(leaves) else pool[0]

    return build


def test_randomized_gradients_match_central_differences():
    rng = np.random.default_rng(2024)
    checked = 0
    for _ in range(100):
        n_leaves = int(rng.integers(2, 5))
        leaf_values = rng.uniform(-2.0, 2.0, size=n_leaves).tolist()
        build = random_expression(rng, n_leaves=n_leaves, n_ops=int(rng.integers(6, 16)))

        def f(vals):
            tape = Tape()
            return build([tape.variable(v) for v in vals]).value

        _, grads = grad_of(build, leaf_values)
        for i in range(n_leaves):
            fd = central_diff(f, leaf_values, i)
            if abs(fd) < 1e-4:
                assert abs(grads[i] - fd) < 1e-6
            else:
                assert abs(grads[i] - fd) / abs(fd) < 1e-4
        checked += 1
    assert checked == 100


def test_tape_replay_determinism():
    rng = np.random.default_rng(7)
    build = random_expression(rng, n_leaves=3, n_ops=10)
    leaf_values = [0.3, -1.2, 1.9]

    counts, grads = [], []
    for _ in range(2):
        tape = Tape()
        leaves = [tape.variable(v) for v in leaf_values]
        root = build(leaves)
        adj = backward(root)
        counts.append(len(tape))
        grads.append([adj[leaf.index] for leaf in leaves])
    assert counts[0] == counts[1]
    assert grads[0] == grads[1]


def test_parent_indices_topologically_ordered():
    rng = np.random.default_rng(11)
    build = random_expression(rng, n_leaves=3, n_ops=14)
    tape = Tape()
    build([tape.variable(v) for v in (0.5, -0.5, 1.0)])
    for idx, parents in enumerate(tape.parents):
        for j, _ in parents:
            assert j < idx


def test_gradient_of_root_wrt_itself_is_one():
    tape = Tape()
    x = tape.variable(0.4)
    root = op_unary(x, "tanh")
    assert backward(root)[root.index] == 1.0
