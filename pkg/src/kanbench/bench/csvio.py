"""Deterministic CSV/JSON emission for plan results.

runs.csv carries only (fingerprint, epoch, rmse) so reruns with identical
seeds are byte-identical; wall-clock and eval counts live in summary.csv.
Floats are written in shortest round-trip form.
"""

from __future__ import annotations

import json
__all__ = [
    "write_runs_csv",
    "write_summary_csv",
    "write_config_json",
    "write_predictions_csv",
    "write_plan_outputs",
]

SUMMARY_COLUMNS = [
    "fingerprint",
    "plan",
    "function",
    "row",
    "net",
    "widths",
    "activation",
    "optimizer",
    "lr",
    "epochs",
    "n_train",
    "sigma",
    "seed",
    "final_rmse",
    "wall_clock_s",
    "epochs_run",
    "n_loss_evals",
    "fallback_steps",
    "failed",
    "stalled_epoch",
    "stopped_epoch",
]


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_runs_csv(records, path):
    with open(path, "w", newline="\n") as fh:
        fh.write("fingerprint,epoch,rmse\n")
        for rec in records:
            for epoch, rmse in enumerate(rec.test_rmse, 1):
                fh.write(f"{rec.fingerprint},{epoch},{_fmt(rmse)}\n")


def write_summary_csv(records, path):
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(SUMMARY_COLUMNS) + "\n")
        for rec in records:
            c = rec.config
            row = {
                "fingerprint": rec.fingerprint,
                "plan": c.get("plan", ""),
                "function": c.get("function", ""),
                "row": c.get("row", ""),
                "net": c.get("net", ""),
                "widths": "-".join(str(w) for w in c.get("widths", [])),
                "activation": c.get("activation", ""),
                "optimizer": c.get("optimizer", ""),
                "lr": c.get("lr", ""),
                "epochs": c.get("epochs", ""),
                "n_train": c.get("n_train", ""),
                "sigma": c.get("sigma", ""),
                "seed": c.get("seed", ""),
                "final_rmse": rec.final_rmse,
                "wall_clock_s": rec.wall_clock_s,
                "epochs_run": rec.epochs_run,
                "n_loss_evals": rec.n_loss_evals,
                "fallback_steps": rec.fallback_steps,
                "failed": rec.failed,
                "stalled_epoch": rec.stalled_epoch,
                "stopped_epoch": rec.stopped_epoch,
            }
            fh.write(",".join(_fmt(row[col]) for col in SUMMARY_COLUMNS) + "\n")


def write_config_json(plan, path):
    payload = {
        "plan": plan.plan,
        "functions": plan.functions,
        "pairs": plan.pairs,
        "optimizers": plan.optimizers,
        "epochs": plan.epochs,
        "samples": plan.samples,
        "sigma": plan.sigma,
        "seeds": plan.seeds,
        "lr": plan.lr,
        "activation": plan.activation,
        "threshold": plan.threshold,
    }
    with open(path, "w", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_predictions_csv(predictions, path):
    """predictions: fingerprint -> dict of x/y_clean/y_noisy/y_pred arrays."""
    with open(path, "w", newline="\n") as fh:
        fh.write("fingerprint,x,y_clean,y_noisy,y_pred\n")
        for fp in sorted(predictions):
            p = predictions[fp]
            for x, yc, yn, yp in zip(p["x"], p["y_clean"], p["y_noisy"], p["y_pred"]):
                fh.write(f"{fp},{_fmt(float(x))},{_fmt(float(yc))},{_fmt(float(yn))},{_fmt(float(yp))}\n")


def write_plan_outputs(result, out_dir):
    """runs.csv + summary.csv + config.json (+ predictions.csv) into out_dir."""
    import os

    os.makedirs(out_dir, exist_ok=True)
    write_runs_csv(result.records, os.path.join(out_dir, "runs.csv"))
    write_summary_csv(result.records, os.path.join(out_dir, "summary.csv"))
    write_config_json(result.plan, os.path.join(out_dir, "config.json"))
    if result.predictions:
        write_predictions_csv(result.predictions, os.path.join(out_dir, "predictions.csv"))
