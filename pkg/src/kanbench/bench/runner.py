"""Plan execution: cell expansion, the work pool, and result aggregation.

Cells are embarrassingly parallel; each one builds its own dataset, network
and optimizer.  Results are merged in sorted-fingerprint order so output
files do not depend on worker scheduling.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

from .. import __version__
from ..corpus import get_function, make_dataset
from ..models import build_kan, build_mlp, forward_values
from ..optim import OptimizerConfig, RunRecord, fingerprint_of, train
from ..spline import SplineSpec
from .plans import TABLE2_PAIRS, ExperimentPlan

__all__ = [
    "build_cells",
    "run_cell",
    "run_plan",
    "PlanResult",
    "ComparisonSummary",
    "epochs_to_threshold",
    "epochs_to_factor_of_final",
    "summarize",
    "slope_study",
    "matched_time_run",
]


def build_cells(plan: ExperimentPlan) -> list[dict]:
    """Expand a plan into one config dict per training run."""
    cells = []
    for fid in plan.functions:
        f = get_function(fid)
        for row in plan.pairs:
            pair = TABLE2_PAIRS[row]
            for net_kind in ("kan", "mlp"):
                widths = pair.kan_widths if net_kind == "kan" else pair.mlp_widths
                for opt in plan.optimizers:
                    for epochs in plan.epochs:
                        for n in plan.samples:
                            for sigma in plan.sigma:
                                for seed in plan.seeds:
                                    cfg = {
                                        "plan": plan.plan,
                                        "function": f.id,
                                        "row": row,
                                        "net": net_kind,
                                        "widths": list(widths),
                                        "grid": pair.grid,
                                        "k": pair.k,
                                        # spline grid spans the data domain
                                        "grid_domain": list(f.domain),
                                        "activation": plan.activation,
                                        "optimizer": opt,
                                        "lr": plan.lr,
                                        "epochs": epochs,
                                        "n_train": n,
                                        "sigma": sigma,
                                        "seed": seed,
                                        "version": __version__,
                                    }
                                    if plan.plan == "slope_study":
                                        cfg["stop_rmse"] = plan.threshold
                                    cells.append(cfg)
    cells.sort(key=fingerprint_of)
    return cells


def run_cell(cfg: dict, with_predictions: bool = False):
    """Train one cell; returns (RunRecord, predictions-or-None).

    Predictions are the trained network's outputs at the training inputs,
    for overlay figures.
    """
    ds = make_dataset(cfg["function"], cfg["n_train"], sigma=cfg["sigma"], seed=cfg["seed"])
    if cfg["net"] == "kan":
        spec = SplineSpec(grid=cfg["grid"], degree=cfg["k"], domain=tuple(cfg["grid_domain"]))
        net = build_kan(cfg["widths"], spec=spec, seed=cfg["seed"])
    else:
        net = build_mlp(cfg["widths"], activation=cfg["activation"], seed=cfg["seed"])
    opt = OptimizerConfig(kind=cfg["optimizer"], lr=cfg["lr"])
    rec = train(
        net,
        ds,
        opt,
        epochs=cfg["epochs"],
        stop_rmse=cfg.get("stop_rmse"),
        config=cfg,
    )
    preds = None
    if with_predictions and not rec.failed:
        preds = {
            "x": ds.x_train,
            "y_clean": ds.y_train_clean,
            "y_noisy": ds.y_train,
            "y_pred": forward_values(net, ds.x_train),
        }
    return rec, preds


def _run_cell_star(args):
    cfg, with_predictions = args
    try:
        return run_cell(cfg, with_predictions)
    except Exception as exc:  # cell failure must not kill the plan
        return _failure_record(cfg, exc), None


def _failure_record(cfg, exc):
    return RunRecord(
        fingerprint=fingerprint_of(cfg),
        config=cfg,
        train_loss=[],
        test_rmse=[],
        final_rmse=float("nan"),
        wall_clock_s=0.0,
        epochs_run=0,
        n_loss_evals=0,
        fallback_steps=0,
        failed=True,
        fail_reason=f"{type(exc).__name__}: {exc}",
    )


def epochs_to_threshold(trace, threshold: float):
    """1-based index of the first trace entry strictly below threshold."""
    if threshold <= 0:
        raise ValueError("threshold must be > 0")
    for i, r in enumerate(trace, 1):
        if r < threshold:
            return i
    return None


def epochs_to_factor_of_final(trace, factor: float = 2.0):
    """1-based index of the first entry within factor x the final value."""
    if not trace:
        return None
    target = factor * trace[-1]
    for i, r in enumerate(trace, 1):
        if r <= target:
            return i
    return None


@dataclass
class ComparisonSummary:
    """Per-(function, row, optimizer, epochs, samples, sigma, seed) pairing of
    the KAN run against its matched MLP run.  Recomputable from records."""

    entries: list


def summarize(records: list[RunRecord], threshold: float = 1.0) -> ComparisonSummary:
    by_key = {}
    for rec in records:
        c = rec.config
        key = (c["function"], c["row"], c["optimizer"], c["epochs"], c["n_train"], c["sigma"], c["seed"])
        by_key.setdefault(key, {})[c["net"]] = rec
    entries = []
    for key in sorted(by_key, key=str):
        pair = by_key[key]
        if "kan" not in pair or "mlp" not in pair:
            continue
        kan, mlp = pair["kan"], pair["mlp"]
        if kan.failed or mlp.failed:
            entries.append({"key": key, "failed": True})
            continue
        ratio = kan.final_rmse / mlp.final_rmse if mlp.final_rmse > 0 else float("inf")
        e_kan = epochs_to_factor_of_final(kan.test_rmse)
        e_mlp = epochs_to_factor_of_final(mlp.test_rmse)
        t_kan = epochs_to_threshold(kan.test_rmse, threshold)
        t_mlp = epochs_to_threshold(mlp.test_rmse, threshold)
        if t_kan is None and t_mlp is None:
            thr_winner = "tie"
        elif t_kan is None:
            thr_winner = "mlp"
        elif t_mlp is None:
            thr_winner = "kan"
        else:
            thr_winner = "kan" if t_kan < t_mlp else ("mlp" if t_mlp < t_kan else "tie")
        entries.append(
            {
                "key": key,
                "failed": False,
                "winner_final": "kan" if kan.final_rmse < mlp.final_rmse else "mlp",
                "rmse_ratio": ratio,
                "kan_rmse": kan.final_rmse,
                "mlp_rmse": mlp.final_rmse,
                "winner_epochs_to_threshold": thr_winner,
                "kan_epochs_to_own_2x": e_kan,
                "mlp_epochs_to_own_2x": e_mlp,
                "kan_wall_clock_s": kan.wall_clock_s,
                "mlp_wall_clock_s": mlp.wall_clock_s,
            }
        )
    return ComparisonSummary(entries=entries)


@dataclass
class PlanResult:
    plan: ExperimentPlan
    records: list
    summary: ComparisonSummary
    predictions: dict  # fingerprint -> prediction arrays (may be empty)


def run_plan(
    plan: ExperimentPlan,
    jobs: int = 1,
    with_predictions: bool = False,
    progress=None,
) -> PlanResult:
    """Execute every cell of a plan; failures are recorded, not raised."""
    if plan.plan == "matched_time":
        return _run_matched_time_plan(plan, with_predictions)
    cells = build_cells(plan)
    results = []
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for out in pool.map(_run_cell_star, [(c, with_predictions) for c in cells]):
                results.append(out)
                if progress:
                    progress(out[0])
    else:
        for cfg in cells:
            out = _run_cell_star((cfg, with_predictions))
            results.append(out)
            if progress:
                progress(out[0])
    records = sorted((r for r, _ in results), key=lambda r: r.fingerprint)
    predictions = {r.fingerprint: p for r, p in results if p is not None}
    return PlanResult(
        plan=plan,
        records=records,
        summary=summarize(records, threshold=plan.threshold),
        predictions=predictions,
    )


def slope_study(plan: ExperimentPlan) -> list[dict]:
    """(k, net, seed) -> minimal epochs to reach RMSE < threshold.

    Runs never reaching it within the epoch budget are censored at the
    budget.  Slopes come from the plan's kx:<k> function ids.
    """
    result = run_plan(plan)
    table = []
    for rec in result.records:
        c = rec.config
        k = float(c["function"].split(":", 1)[1])
        reached = rec.stopped_epoch is not None
        table.append(
            {
                "k": k,
                "net": c["net"],
                "seed": c["seed"],
                "epochs": rec.stopped_epoch if reached else c["epochs"],
                "censored": not reached,
                "fingerprint": rec.fingerprint,
            }
        )
    table.sort(key=lambda row: (row["net"], row["seed"], row["k"]))
    return table


def matched_time_run(row: int, function: str, kan_epochs: int, seed: int = 0,
                     n_train: int = 1000, sigma: float = 0.0, lr: float = 0.01,
                     activation: str = "relu", optimizer: str = "adam"):
    """Appendix protocol: train the KAN, then give the MLP its wall clock."""
    pair = TABLE2_PAIRS[row]
    f = get_function(function)
    base = {
        "plan": "matched_time",
        "function": f.id,
        "row": row,
        "grid": pair.grid,
        "k": pair.k,
        "grid_domain": list(f.domain),
        "activation": activation,
        "optimizer": optimizer,
        "lr": lr,
        "n_train": n_train,
        "sigma": sigma,
        "seed": seed,
        "version": __version__,
    }
    kan_cfg = dict(base, net="kan", widths=list(pair.kan_widths), epochs=kan_epochs)
    kan_rec, _ = run_cell(kan_cfg)

    ds = make_dataset(f.id, n_train, sigma=sigma, seed=seed)
    mlp = build_mlp(pair.mlp_widths, activation=activation, seed=seed)
    mlp_cfg = dict(
        base,
        net="mlp",
        widths=list(pair.mlp_widths),
        epochs=kan_epochs,
        time_budget_s=kan_rec.wall_clock_s,
    )
    mlp_rec = train(
        mlp,
        ds,
        OptimizerConfig(kind=optimizer, lr=lr),
        epochs=kan_epochs,
        time_budget_s=kan_rec.wall_clock_s,
        config=mlp_cfg,
    )
    return kan_rec, mlp_rec


def _run_matched_time_plan(plan: ExperimentPlan, with_predictions: bool) -> PlanResult:
    records = []
    for fid in plan.functions:
        for row in plan.pairs:
            for seed in plan.seeds:
                kan_rec, mlp_rec = matched_time_run(
                    row,
                    fid,
                    kan_epochs=plan.epochs[0],
                    seed=seed,
                    n_train=plan.samples[0],
                    sigma=plan.sigma[0],
                    lr=plan.lr,
                    activation=plan.activation,
                    optimizer=plan.optimizers[0],
                )
                records.extend([kan_rec, mlp_rec])
    records.sort(key=lambda r: r.fingerprint)
    return PlanResult(
        plan=plan,
        records=records,
        summary=summarize(records, threshold=plan.threshold),
        predictions={},
    )
