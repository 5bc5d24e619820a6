"""Full-batch Adam and L-BFGS over a flat parameter view, plus the train loop.

One "epoch" is one full-batch parameter update for either optimizer: a
single Adam step, or a single L-BFGS outer iteration (two-loop direction,
strong-Wolfe line search, history update).  Line-search evaluations are
counted separately so timing comparisons stay honest.
"""

from __future__ import annotations

import hashlib
import json
import time
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .autodiff import Tape, TapeError, backward, op_binary, op_unary, reduce_mean
from .models import NonFiniteError, ParamView, forward_values, forward_with_params

__all__ = [
    "AdamState",
    "LbfgsState",
    "OptimizerConfig",
    "RunRecord",
    "adam_step",
    "lbfgs_step",
    "two_loop_direction",
    "train",
    "fingerprint_of",
]


@dataclass
class AdamState:
    lr: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step_count: int = 0
    m: np.ndarray | None = None
    v: np.ndarray | None = None


def adam_step(state: AdamState, params: ParamView, grads) -> None:
    """Standard bias-corrected Adam update, applied in place."""
    g = np.asarray(grads, dtype=np.float64)
    if not np.all(np.isfinite(g)):
        idx = int(np.where(~np.isfinite(g))[0][0])
        raise FloatingPointError(f"non-finite gradient at parameter index {idx}")
    if state.m is None:
        state.m = np.zeros(len(params))
        state.v = np.zeros(len(params))
    state.step_count += 1
    t = state.step_count
    state.m = state.beta1 * state.m + (1 - state.beta1) * g
    state.v = state.beta2 * state.v + (1 - state.beta2) * g * g
    m_hat = state.m / (1 - state.beta1**t)
    v_hat = state.v / (1 - state.beta2**t)
    params.flat[:] -= state.lr * m_hat / (np.sqrt(v_hat) + state.eps)


@dataclass
class LbfgsState:
    view: ParamView
    memory: int = 10
    c1: float = 1e-4
    c2: float = 0.9
    max_ls_evals: int = 25
    curvature_eps: float = 1e-10
    history: deque = field(default_factory=lambda: deque(maxlen=10))
    f: float | None = None
    g: np.ndarray | None = None
    iters: int = 0
    n_evals: int = 0  # every loss_fn call, line search included
    fallback_steps: int = 0
    last_wolfe_ok: bool = True
    last_step_info: dict | None = None

    def __post_init__(self):
        self.history = deque(maxlen=self.memory)


def two_loop_direction(history, g: np.ndarray) -> np.ndarray:
    """-H g via the two-loop recursion; empty history gives -g (H0 = I)."""
    q = g.copy()
    alphas = []
    for s, y, rho in reversed(history):
        a = rho * (s @ q)
        q -= a * y
        alphas.append(a)
    if history:
        s, y, _ = history[-1]
        gamma = (s @ y) / (y @ y)
    else:
        gamma = 1.0
    r = gamma * q
    for (s, y, rho), a in zip(history, reversed(alphas)):
        b = rho * (y @ r)
        r += (a - b) * s
    return -r


def _cubic_min(a, fa, da, b, fb, db):
    """Minimizer of the cubic through (a, fa, da), (b, fb, db); None if degenerate."""
    d1 = da + db - 3 * (fa - fb) / (a - b)
    disc = d1 * d1 - da * db
    if disc < 0:
        return None
    d2 = np.sqrt(disc) * np.sign(b - a)
    denom = db - da + 2 * d2
    if denom == 0:
        return None
    x = b - (b - a) * (db + d2 - d1) / denom
    return x if np.isfinite(x) else None


def _strong_wolfe_search(phi, f0, d0, alpha0, c1, c2, budget):
    """Bracket + zoom line search (strong Wolfe conditions).

    ``phi(alpha)`` returns (f, dphi, g).  Returns (alpha, f, g, ok) with
    ok=False when the evaluation budget ran out before both conditions held.
    """
    evals = 0

    def take(alpha):
        nonlocal evals
        evals += 1
        return phi(alpha)

    def zoom(lo, f_lo, d_lo, hi, f_hi, d_hi):
        nonlocal evals
        while evals < budget:
            mid = _cubic_min(lo, f_lo, d_lo, hi, f_hi, d_hi)
            width = abs(hi - lo)
            if (
                mid is None
                or not (min(lo, hi) + 0.1 * width <= mid <= max(lo, hi) - 0.1 * width)
            ):
                mid = 0.5 * (lo + hi)
            f, dphi, g = take(mid)
            if f > f0 + c1 * mid * d0 or f >= f_lo:
                hi, f_hi, d_hi = mid, f, dphi
            else:
                if abs(dphi) <= -c2 * d0:
                    return mid, f, g
                if dphi * (hi - lo) >= 0:
                    hi, f_hi, d_hi = lo, f_lo, d_lo
                lo, f_lo, d_lo = mid, f, dphi
            if width < 1e-16:
                break
        return None

    alpha_prev, f_prev, d_prev = 0.0, f0, d0
    alpha = alpha0
    result = None
    while evals < budget:
        f, dphi, g = take(alpha)
        if f > f0 + c1 * alpha * d0 or (alpha_prev > 0 and f >= f_prev):
            result = zoom(alpha_prev, f_prev, d_prev, alpha, f, dphi)
            break
        if abs(dphi) <= -c2 * d0:
            return alpha, f, g, True, evals
        if dphi >= 0:
            result = zoom(alpha, f, dphi, alpha_prev, f_prev, d_prev)
            break
        alpha_prev, f_prev, d_prev = alpha, f, dphi
        alpha = min(2.0 * alpha, 1e10)
    if result is None:
        return None, None, None, False, evals
    a, f, g = result
    return a, f, g, True, evals


def lbfgs_step(state: LbfgsState, loss_fn):
    """One outer L-BFGS iteration; returns (new loss, accepted step length).

    ``loss_fn(params) -> (loss, grads)`` must be deterministic within the
    step.  A failed strong-Wolfe search falls back to backtracking steepest
    descent and is counted in ``state.fallback_steps``.
    """
    x = state.view.get()
    if state.f is None:
        state.f, state.g = loss_fn(x)
        state.n_evals += 1
    f0, g0 = state.f, state.g

    if np.max(np.abs(g0)) < 1e-15:
        state.iters += 1
        state.last_wolfe_ok = True
        return f0, 0.0

    d = two_loop_direction(state.history, g0)
    d0 = float(d @ g0)
    if not np.isfinite(d0) or d0 >= 0:
        # curvature breakdown: restart from steepest descent
        state.history.clear()
        d = -g0
        d0 = float(d @ g0)

    def phi(alpha):
        f, g = loss_fn(x + alpha * d)
        state.n_evals += 1
        return f, float(g @ d), g

    alpha0 = min(1.0, 1.0 / np.abs(g0).sum()) if state.iters == 0 else 1.0
    alpha, f_new, g_new, ok, _ = _strong_wolfe_search(
        phi, f0, d0, alpha0, state.c1, state.c2, state.max_ls_evals
    )

    if not ok:
        # no strong-Wolfe point in budget: backtrack along -g instead
        state.fallback_steps += 1
        state.last_wolfe_ok = False
        d = -g0
        alpha = min(1.0, 1.0 / np.abs(g0).sum())
        accepted = None
        for _ in range(30):
            f_try, g_try = loss_fn(x + alpha * d)
            state.n_evals += 1
            if f_try <= f0 + state.c1 * alpha * float(d @ g0):
                accepted = (alpha, f_try, g_try)
                break
            alpha *= 0.5
        if accepted is None:
            state.iters += 1
            state.last_step_info = None
            return f0, 0.0  # stalled at numerical floor
        alpha, f_new, g_new = accepted
        state.last_step_info = None
    else:
        state.last_wolfe_ok = True
        state.last_step_info = {
            "f0": f0,
            "d0": d0,
            "alpha": alpha,
            "f_new": f_new,
            "dg_new": float(g_new @ d),
        }

    s = alpha * d
    y = g_new - g0
    if float(s @ y) > state.curvature_eps:
        state.history.append((s, y, 1.0 / float(s @ y)))
    state.view.set(x + s)
    state.f, state.g = f_new, g_new
    state.iters += 1
    return f_new, float(alpha)


@dataclass(frozen=True)
class OptimizerConfig:
    kind: str = "lbfgs"  # "adam" | "lbfgs"
    lr: float = 0.01  # Adam only
    memory: int = 10
    c1: float = 1e-4
    c2: float = 0.9
    max_ls_evals: int = 25

    def __post_init__(self):
        if self.kind not in ("adam", "lbfgs"):
            raise ValueError(f"unknown optimizer {self.kind!r}")


@dataclass
class RunRecord:
    """Everything one training run produced.

    ``train_loss[e]`` is the full-batch MSE the optimizer worked with in
    epoch e (for L-BFGS the post-step loss, hence non-increasing; for Adam
    the pre-step loss).  ``test_rmse[e]`` is the clean-target test RMSE after
    epoch e's update.  When L-BFGS stalls (two consecutive zero steps) the
    remaining epochs are filled with the converged values and
    ``stalled_epoch`` is set.
    """

    fingerprint: str
    config: dict
    train_loss: list
    test_rmse: list
    final_rmse: float
    wall_clock_s: float
    epochs_run: int
    n_loss_evals: int
    fallback_steps: int
    failed: bool = False
    fail_reason: str | None = None
    stalled_epoch: int | None = None
    stopped_epoch: int | None = None


def fingerprint_of(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


class _Diverged(ArithmeticError):
    pass


def _make_loss_fn(net, view, x_train, y_train):
    x_const = np.asarray(x_train, dtype=np.float64)
    y_const = np.asarray(y_train, dtype=np.float64)
    n_params = len(view)

    def loss_fn(vec):
        view.set(vec)
        tape = Tape()
        x = tape.constant(x_const)
        y = tape.constant(y_const)
        pred, params = forward_with_params(net, x)
        loss = reduce_mean(op_unary(op_binary(pred, y, "sub"), "square"))
        if not np.isfinite(loss.value):
            raise _Diverged(f"training loss became {loss.value}")
        adj = backward(loss)
        grads = np.empty(n_params)
        for i, p in enumerate(params):
            grads[i] = adj[p.index]
        return float(loss.value), grads

    return loss_fn


def _test_rmse(net, ds, eval_noisy):
    target = ds.y_test_noisy if (eval_noisy and ds.y_test_noisy is not None) else ds.y_test
    pred = forward_values(net, ds.x_test)
    return float(np.sqrt(np.mean((pred - target) ** 2)))


def train(
    net,
    dataset,
    opt: OptimizerConfig,
    epochs: int,
    stop_rmse: float | None = None,
    time_budget_s: float | None = None,
    eval_noisy: bool = False,
    config: dict | None = None,
) -> RunRecord:
    """Full-batch training; returns the complete run record.

    ``stop_rmse`` ends the run early once the test RMSE drops below it
    (slope study).  ``time_budget_s`` keeps training past ``epochs`` until
    the wall clock reaches the budget (matched-time protocol; at least one
    epoch always runs).
    """
    if epochs < 1:
        raise ValueError("epochs must be >= 1")
    if config is None:
        config = {
            "kind": net.kind,
            "widths": list(net.widths),
            "net_seed": net.seed,
            "optimizer": opt.kind,
            "lr": opt.lr,
            "epochs": epochs,
            "function": getattr(dataset, "function_id", "?"),
            "n_train": getattr(dataset, "n_train", len(dataset.x_train)),
            "sigma": getattr(dataset, "sigma", 0.0),
            "data_seed": getattr(dataset, "seed", 0),
            "version": __version__,
        }
    fp = fingerprint_of(config)

    view = net.param_view()
    loss_fn = _make_loss_fn(net, view, dataset.x_train, dataset.y_train)

    adam = AdamState(lr=opt.lr) if opt.kind == "adam" else None
    lbfgs = (
        LbfgsState(view=view, memory=opt.memory, c1=opt.c1, c2=opt.c2, max_ls_evals=opt.max_ls_evals)
        if opt.kind == "lbfgs"
        else None
    )

    train_loss: list[float] = []
    test_rmse: list[float] = []
    failed = False
    fail_reason = None
    stalled_epoch = None
    stopped_epoch = None
    n_adam_evals = 0
    zero_steps = 0

    t0 = time.perf_counter()
    epoch = 0
    try:
        while True:
            epoch += 1
            if opt.kind == "adam":
                loss, grads = loss_fn(view.get())
                n_adam_evals += 1
                adam_step(adam, view, grads)
                train_loss.append(loss)
            else:
                loss, step_len = lbfgs_step(lbfgs, loss_fn)
                train_loss.append(loss)
                zero_steps = zero_steps + 1 if step_len == 0.0 else 0
            test_rmse.append(_test_rmse(net, dataset, eval_noisy))

            if stop_rmse is not None and test_rmse[-1] < stop_rmse:
                stopped_epoch = epoch
                break
            if opt.kind == "lbfgs" and zero_steps >= 2:
                stalled_epoch = epoch
                break
            if time_budget_s is not None:
                if time.perf_counter() - t0 >= time_budget_s or epoch >= 10_000_000:
                    break
            elif epoch >= epochs:
                break
    except (_Diverged, TapeError, NonFiniteError, FloatingPointError) as exc:
        failed = True
        fail_reason = f"{type(exc).__name__}: {exc}"
    wall = time.perf_counter() - t0

    epochs_run = epoch
    if stalled_epoch is not None and not failed and time_budget_s is None:
        # converged: remaining epochs would be identical no-ops
        while len(test_rmse) < epochs:
            train_loss.append(train_loss[-1])
            test_rmse.append(test_rmse[-1])

    return RunRecord(
        fingerprint=fp,
        config=config,
        train_loss=train_loss,
        test_rmse=test_rmse,
        final_rmse=test_rmse[-1] if test_rmse else float("nan"),
        wall_clock_s=wall,
        epochs_run=epochs_run,
        n_loss_evals=(lbfgs.n_evals if lbfgs else n_adam_evals),
        fallback_steps=(lbfgs.fallback_steps if lbfgs else 0),
        failed=failed,
        fail_reason=fail_reason,
        stalled_epoch=stalled_epoch,
        stopped_epoch=stopped_epoch,
    )
