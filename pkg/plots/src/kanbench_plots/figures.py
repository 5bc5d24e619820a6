"""The five figure families rendered from benchmark CSVs.

Rendering is a pure function of the CSV bytes and the spec: fixed DPI and
fonts, no timestamps, and PNG metadata stripped, so re-rendering the same
inputs yields identical bytes.  Every figure carries the contributing config
fingerprints in its footer.
"""

from __future__ import annotations

from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .io import SchemaError, load_csv, require_columns

__all__ = ["FigureSpec", "render", "FAMILIES", "OVERLAY_POINTS"]

OVERLAY_POINTS = 500  # scatter subsampling cap for overlay families

FAMILIES = ("loss_epochs", "loss_samples", "fit_overlay", "slope_curve", "noise_overlay")

_SERIES_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b", "#e377c2")


@dataclass
class FigureSpec:
    family: str
    runs_csv: str
    out_path: str
    summary_csv: str | None = None  # optional fingerprint -> label source
    dpi: int = 120
    title: str = ""

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown figure family {self.family!r}")


def _floats(col):
    return np.array([float(v) for v in col])


def _labels_from_summary(path):
    cols = load_csv(path)
    require_columns(cols, ["fingerprint", "function", "net", "widths"], path)
    labels = {}
    for i, fp in enumerate(cols["fingerprint"]):
        net = cols["net"][i].upper()
        labels[fp] = f"{net} [{cols['widths'][i].replace('-', ',')}] {cols['function'][i]}"
        if "seed" in cols:
            labels[fp] += f" s{cols['seed'][i]}"
    return labels


def _subsample(n):
    """Indices of at most OVERLAY_POINTS rows, equispaced by index."""
    if n <= OVERLAY_POINTS:
        return np.arange(n)
    return np.linspace(0, n - 1, OVERLAY_POINTS).round().astype(int)


def _footer(fig, fingerprints):
    fps = sorted(set(fingerprints))
    shown = ", ".join(fp[:12] for fp in fps[:6])
    if len(fps) > 6:
        shown += f", +{len(fps) - 6} more"
    fig.text(0.01, 0.005, f"config {shown}", fontsize=5, color="#555555")


def _plot_loss_epochs(ax, cols, labels):
    series = {}
    by_fp = {}
    for fp, ep, rmse in zip(cols["fingerprint"], cols["epoch"], cols["rmse"]):
        by_fp.setdefault(fp, []).append((int(ep), float(rmse)))
    for i, fp in enumerate(sorted(by_fp)):
        pts = sorted(by_fp[fp])
        xs = [p[0] for p in pts]
        ys = [p[1] for p in pts]
        ax.plot(xs, ys, lw=1.0, color=_SERIES_COLORS[i % len(_SERIES_COLORS)],
                label=labels.get(fp, fp[:10]))
        series[fp] = len(pts)
    ax.set_xlabel("epoch")
    ax.set_ylabel("test RMSE")
    ax.set_yscale("log")
    ax.legend(fontsize=6)
    return series


def _plot_loss_samples(ax, cols, labels):
    del labels
    series = {}
    groups = {}
    for i, fp in enumerate(cols["fingerprint"]):
        key = (cols["net"][i], cols["function"][i])
        groups.setdefault(key, []).append((int(cols["n_train"][i]), float(cols["final_rmse"][i]), fp))
    for i, key in enumerate(sorted(groups)):
        rows = groups[key]
        by_n = {}
        for n, rmse, _fp in rows:
            by_n.setdefault(n, []).append(rmse)
        xs = sorted(by_n)
        ys = [float(np.mean(by_n[n])) for n in xs]
        ax.plot(xs, ys, "o-", color=_SERIES_COLORS[i % len(_SERIES_COLORS)],
                label=f"{key[0].upper()} {key[1]}")
        series[key] = len(rows)
    ax.set_xlabel("training samples")
    ax.set_ylabel("final test RMSE")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.legend(fontsize=6)
    return series


def _plot_overlay(ax, cols, labels, with_noise):
    series = {}
    by_fp = {}
    for i, fp in enumerate(cols["fingerprint"]):
        by_fp.setdefault(fp, []).append(i)
    for si, fp in enumerate(sorted(by_fp)):
        rows = np.array(by_fp[fp])
        x = _floats([cols["x"][i] for i in rows])
        order = np.argsort(x, kind="stable")
        rows = rows[order]
        x = x[order]
        keep = _subsample(len(rows))
        rows_k = rows[keep]
        xk = x[keep]
        clean = _floats([cols["y_clean"][i] for i in rows_k])
        pred = _floats([cols["y_pred"][i] for i in rows_k])
        color = _SERIES_COLORS[si % len(_SERIES_COLORS)]
        if si == 0:
            ax.plot(xk, clean, lw=1.0, color="black", label="true function")
        if with_noise:
            noisy = _floats([cols["y_noisy"][i] for i in rows_k])
            if si == 0:
                ax.scatter(xk, noisy, s=4, color="#999999", alpha=0.6, label="noisy data")
        ax.plot(xk, pred, lw=1.0, color=color, label=f"pred {labels.get(fp, fp[:10])}")
        series[fp] = len(keep)
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.legend(fontsize=6)
    return series


def _plot_slope_curve(ax, cols, labels):
    del labels
    series = {}
    groups = {}
    for i, fn in enumerate(cols["function"]):
        if not fn.startswith("kx:"):
            raise SchemaError(f"slope_curve expects kx:<k> functions, got {fn!r}")
        k = float(fn.split(":", 1)[1])
        net = cols["net"][i]
        epochs = cols["stopped_epoch"][i]
        censored = epochs == ""
        groups.setdefault(net, []).append((k, float(cols["epochs"][i]) if censored else float(epochs)))
    for i, net in enumerate(sorted(groups)):
        by_k = {}
        for k, e in groups[net]:
            by_k.setdefault(k, []).append(e)
        xs = sorted(by_k)
        ys = [float(np.mean(by_k[k])) for k in xs]
        ax.plot(xs, ys, "o-", color=_SERIES_COLORS[i % len(_SERIES_COLORS)], label=net.upper())
        series[net] = len(groups[net])
    ax.set_xlabel("slope k")
    ax.set_ylabel("epochs to RMSE < 1")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.legend(fontsize=6)
    return series


def render(spec: FigureSpec) -> dict:
    """Render one figure; returns {series_key: points_plotted} for callers.

    Raises SchemaError (before touching the output path) when the input CSV
    does not provide the columns the family needs.
    """
    cols = load_csv(spec.runs_csv)
    needs = {
        "loss_epochs": ["fingerprint", "epoch", "rmse"],
        "loss_samples": ["fingerprint", "net", "function", "n_train", "final_rmse"],
        "fit_overlay": ["fingerprint", "x", "y_clean", "y_pred"],
        "noise_overlay": ["fingerprint", "x", "y_clean", "y_noisy", "y_pred"],
        "slope_curve": ["fingerprint", "net", "function", "epochs", "stopped_epoch"],
    }[spec.family]
    require_columns(cols, needs, spec.runs_csv)

    labels = {}
    if spec.summary_csv:
        labels = _labels_from_summary(spec.summary_csv)

    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    try:
        if spec.family == "loss_epochs":
            series = _plot_loss_epochs(ax, cols, labels)
        elif spec.family == "loss_samples":
            series = _plot_loss_samples(ax, cols, labels)
        elif spec.family == "fit_overlay":
            series = _plot_overlay(ax, cols, labels, with_noise="y_noisy" in cols)
        elif spec.family == "noise_overlay":
            series = _plot_overlay(ax, cols, labels, with_noise=True)
        else:
            series = _plot_slope_curve(ax, cols, labels)
        if spec.title:
            ax.set_title(spec.title, fontsize=9)
        _footer(fig, cols["fingerprint"])
        fig.tight_layout()
        fig.savefig(spec.out_path, dpi=spec.dpi, metadata={"Software": None})
    finally:
        plt.close(fig)
    return series
