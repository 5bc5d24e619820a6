"""Fast invariant suite behind `kanbench verify`.

Each check prints one PASS/FAIL line; the suite is a smoke-level subset of
the full pytest suite, runnable without test dependencies.
"""

from __future__ import annotations

import tempfile

import numpy as np

__all__ = ["run_verify"]


def _check_param_counts():
    from ..models import build_kan, build_mlp, count_params

    expected = [
        (count_params(build_mlp([1, 7, 1]), "trainable"), 22),
        (count_params(build_mlp([1, 39, 1]), "trainable"), 118),
        (count_params(build_mlp([1, 79, 1]), "trainable"), 238),
        (count_params(build_kan([1, 1, 1]), "table2"), 24),
        (count_params(build_kan([1, 5, 1]), "table2"), 120),
        (count_params(build_kan([1, 10, 1]), "table2"), 240),
    ]
    assert all(got == want for got, want in expected), expected


def _check_partition_of_unity():
    from ..spline import SplineSpec, basis, make_knots

    spec = SplineSpec()
    kv = make_knots(spec)
    xs = np.linspace(-1, 1, 1000)
    assert np.max(np.abs(basis(spec, kv, xs).sum(axis=0) - 1.0)) < 1e-12


def _check_network_gradients():
    from ..autodiff import Tape, backward
    from ..models import build_kan, forward_values, forward_with_params

    net = build_kan([1, 2, 1], seed=0)
    tape = Tape()
    out, params = forward_with_params(net, tape.variable(0.3))
    adj = backward(out)
    h = 1e-6
    for i in range(len(net.flat)):
        keep = net.flat[i]
        net.flat[i] = keep + h
        up = forward_values(net, 0.3)
        net.flat[i] = keep - h
        dn = forward_values(net, 0.3)
        net.flat[i] = keep
        fd = (up - dn) / (2 * h)
        g = adj[params[i].index]
        assert abs(g - fd) <= max(1e-6, 1e-4 * abs(fd)), (i, g, fd)


def _check_lbfgs_quadratic():
    from ..models import ParamView
    from ..optim import LbfgsState, lbfgs_step

    A = np.diag(np.linspace(1.0, 100.0, 10))
    flat = np.ones(10)
    state = LbfgsState(view=ParamView(flat))
    for _ in range(50):
        lbfgs_step(state, lambda w: (0.5 * float(w @ A @ w), A @ w))
        if np.linalg.norm(A @ flat) < 1e-8:
            break
    assert np.linalg.norm(A @ flat) < 1e-8


def _check_adam_quadratic():
    from ..models import ParamView
    from ..optim import AdamState, adam_step

    flat = np.array([1.0])
    view = ParamView(flat)
    state = AdamState(lr=0.01)
    for _ in range(2000):
        adam_step(state, view, np.array([2.0 * flat[0]]))
    assert abs(flat[0]) < 1e-3


def _check_dataset_determinism():
    from ..corpus import make_dataset

    a = make_dataset("f3", 200, sigma=0.5, seed=11)
    b = make_dataset("f3", 200, sigma=0.5, seed=11)
    assert np.array_equal(a.x_train, b.x_train) and np.array_equal(a.y_train, b.y_train)
    clean = make_dataset("f3", 200, sigma=0.0, seed=11)
    assert np.array_equal(clean.y_train, clean.y_train_clean)


def _check_plan_determinism():
    import os

    from .csvio import write_plan_outputs
    from .plans import ExperimentPlan
    from .runner import run_plan

    plan = ExperimentPlan(
        plan="sample_sweep",
        functions=["f1"],
        pairs=[1],
        optimizers=["adam"],
        epochs=[5],
        samples=[50],
        seeds=[0],
    )
    blobs = []
    for _ in range(2):
        with tempfile.TemporaryDirectory() as tmp:
            write_plan_outputs(run_plan(plan), tmp)
            with open(os.path.join(tmp, "runs.csv"), "rb") as fh:
                blobs.append(fh.read())
    assert blobs[0] == blobs[1]


CHECKS = [
    ("parameter-count goldens", _check_param_counts),
    ("spline partition of unity", _check_partition_of_unity),
    ("autodiff network gradients vs finite differences", _check_network_gradients),
    ("l-bfgs on conditioned quadratic", _check_lbfgs_quadratic),
    ("adam on 1-d quadratic", _check_adam_quadratic),
    ("dataset determinism", _check_dataset_determinism),
    ("plan rerun byte-determinism", _check_plan_determinism),
]


def run_verify() -> int:
    failures = 0
    for name, fn in CHECKS:
        try:
            fn()
        except Exception as exc:
            failures += 1
            print(f"FAIL {name}: {exc}")
        else:
            print(f"PASS {name}")
    return 1 if failures else 0
