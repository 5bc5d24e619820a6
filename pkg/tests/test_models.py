"""Network construction, parameter accounting and forward-path agreement."""

import numpy as np
import pytest

from kanbench.autodiff import Tape, backward
from kanbench.models import (
    build_kan,
    build_mlp,
    count_params,
    forward,
    forward_values,
    forward_with_params,
    load_checkpoint,
    save_checkpoint,
)
from kanbench.spline import SplineSpec, silu_values

# Table of paired architectures: (mlp widths, mlp count, kan widths, kan counted)
PAIR_GOLDENS = [
    ([1, 7, 1], 22, [1, 1, 1], 24),
    ([1, 39, 1], 118, [1, 5, 1], 120),
    ([1, 79, 1], 238, [1, 10, 1], 240),
]


class TestParameterCounts:
    @pytest.mark.parametrize("widths,expected", [(p[0], p[1]) for p in PAIR_GOLDENS])
    def test_mlp_goldens(self, widths, expected):
        net = build_mlp(widths)
        assert count_params(net, "trainable") == expected
        assert count_params(net, "table2") == expected
        assert len(net.flat) == expected

    @pytest.mark.parametrize("widths,expected", [(p[2], p[3]) for p in PAIR_GOLDENS])
    def test_kan_goldens(self, widths, expected):
        net = build_kan(widths, SplineSpec(grid=3, degree=3))
        assert count_params(net, "table2") == expected

    def test_kan_trainable_counts(self):
        assert count_params(build_kan([1, 1, 1]), "trainable") == 16  # 2 edges x 8
        assert count_params(build_kan([1, 5, 1]), "trainable") == 80  # 10 edges x 8
        assert len(build_kan([1, 5, 1]).flat) == 80

    def test_pairs_match_within_two(self):
        for mlp_w, _, kan_w, _ in PAIR_GOLDENS:
            mlp = build_mlp(mlp_w)
            kan = build_kan(kan_w)
            assert abs(count_params(kan, "table2") - count_params(mlp, "trainable")) <= 2

    def test_bad_widths_rejected(self):
        with pytest.raises(ValueError):
            build_mlp([1])
        with pytest.raises(ValueError):
            build_kan([1, 0, 1])


class TestParamView:
    @pytest.mark.parametrize("make", [lambda: build_mlp([1, 7, 1]), lambda: build_kan([1, 5, 1])])
    def test_round_trip_is_bit_identical(self, make):
        net = make()
        view = net.param_view()
        rng = np.random.default_rng(99)
        vec = rng.normal(size=len(view))
        view.set(vec)
        got = view.get()
        assert np.array_equal(got, vec)
        assert got.tobytes() == vec.tobytes()

    def test_view_writes_reach_the_layers(self):
        net = build_mlp([1, 2, 1])
        net.param_view().set(np.arange(len(net.flat), dtype=np.float64))
        W0, b0 = net.layers[0]
        assert W0[0, 0] == 0.0 and W0[1, 0] == 1.0
        assert b0[0] == 2.0 and b0[1] == 3.0


class TestForward:
    def test_zero_mlp_outputs_zero(self):
        net = build_mlp([1, 7, 1])
        net.flat[:] = 0.0
        xs = np.linspace(-1, 1, 11)
        assert np.array_equal(forward(net, xs), np.zeros(11))

    def test_kan_with_zero_coef_is_silu_of_silu(self):
        net = build_kan([1, 1, 1])
        for layer in net.layers:
            for row in layer:
                for edge in row:
                    edge.coef[:] = 0.0
                    edge.scales[:] = (1.0, 1.0)
        xs = np.linspace(-2, 2, 21)
        assert np.allclose(forward(net, xs), silu_values(silu_values(xs)), atol=1e-15)

    def test_forward_is_deterministic(self):
        net = build_kan([1, 5, 1], seed=5)
        xs = np.linspace(-1, 1, 50)
        a = forward(net, xs)
        b = forward(net, xs)
        assert np.array_equal(a, b)

    @pytest.mark.parametrize(
        "make",
        [lambda: build_mlp([1, 5, 1], seed=2), lambda: build_kan([1, 3, 1], seed=2)],
    )
    def test_tape_path_agrees_with_numeric_path(self, make):
        net = make()
        xs = np.linspace(-1.4, 1.4, 17)
        tape = Tape()
        out = forward(net, tape.variable(xs))
        assert np.allclose(out.value, forward_values(net, xs), rtol=1e-12, atol=1e-14)

    @pytest.mark.parametrize(
        "make",
        [lambda: build_mlp([1, 4, 1], seed=7), lambda: build_kan([1, 2, 1], seed=7)],
    )
    def test_param_gradients_match_finite_differences(self, make):
        net = make()
        x0 = 0.3
        tape = Tape()
        out, params = forward_with_params(net, tape.variable(x0))
        adj = backward(out)
        grads = np.array([adj[p.index] for p in params])

        h = 1e-6
        for i in range(len(net.flat)):
            keep = net.flat[i]
            net.flat[i] = keep + h
            up = forward_values(net, x0)
            net.flat[i] = keep - h
            dn = forward_values(net, x0)
            net.flat[i] = keep
            fd = (up - dn) / (2 * h)
            if abs(fd) < 1e-4:
                assert abs(grads[i] - fd) < 1e-6
            else:
                assert abs(grads[i] - fd) / abs(fd) < 1e-4

    def test_input_gradient_flows_through_kan(self):
        net = build_kan([1, 2, 1], seed=3)
        tape = Tape()
        x = tape.variable(0.25)
        out = forward(net, x)
        g = backward(out)[x.index]
        h = 1e-6
        fd = (forward_values(net, 0.25 + h) - forward_values(net, 0.25 - h)) / (2 * h)
        assert g == pytest.approx(fd, rel=1e-4)

    def test_wrong_input_arity_rejected(self):
        net = build_mlp([2, 3, 1])
        with pytest.raises(ValueError):
            forward(net, np.linspace(0, 1, 5))


class TestCheckpoint:
    @pytest.mark.parametrize(
        "make",
        [
            lambda: build_mlp([1, 7, 1], activation="tanh", seed=11),
            lambda: build_kan([1, 5, 1], SplineSpec(grid=4, degree=2), seed=11),
        ],
    )
    def test_round_trip(self, tmp_path, make):
        net = make()
        rng = np.random.default_rng(0)
        net.flat[:] = rng.normal(size=len(net.flat))
        path = tmp_path / "net.ckpt"
        save_checkpoint(net, path)
        loaded = load_checkpoint(path)
        assert loaded.kind == net.kind
        assert loaded.widths == net.widths
        assert np.array_equal(loaded.flat, net.flat)
        xs = np.linspace(-1, 1, 7)
        assert np.array_equal(forward(loaded, xs), forward(net, xs))

    def test_header_is_json_line(self, tmp_path):
        import json

        net = build_mlp([1, 7, 1])
        path = tmp_path / "net.ckpt"
        save_checkpoint(net, path)
        with open(path, "rb") as fh:
            header = json.loads(fh.readline())
            payload = fh.read()
        assert header["widths"] == [1, 7, 1]
        assert len(payload) == 8 * len(net.flat)
