"""Figures written next to the CLI's delimited reports.

Figures are built on a bare ``matplotlib.figure.Figure`` (Agg canvas), so
nothing here touches pyplot's global state, and file metadata that would
vary between runs (software/date stamps) is stripped.
"""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib
from matplotlib.figure import Figure

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.titlesize": 10,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "lines.linewidth": 1.4,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "svg.hashsalt": "sparsead",
}


def figure_size(scale=1.0, width_in=5.0):
    golden = (math.sqrt(5.0) - 1.0) / 2.0
    return (width_in * scale, width_in * scale * golden)


def _metadata(path):
    ext = Path(path).suffix.lower()
    if ext == ".png":
        return {"Software": None}
    if ext == ".pdf":
        return {"Creator": None, "Producer": None, "CreationDate": None}
    if ext == ".svg":
        return {"Date": None, "Creator": None}
    return None


def save(fig, path):
    fig.savefig(path, metadata=_metadata(path), dpi=150, bbox_inches="tight")


def plot_roc(curves, path, title=None):
    """Plot ROC curves.

    ``curves`` maps a legend label to an :class:`~sparsead.evaluate.EvalReport`.
    The equal error point of each curve is marked.
    """
    with matplotlib.rc_context(STYLE):
        fig = Figure(figsize=figure_size(1.0))
        ax = fig.add_subplot()
        ax.plot([0, 1], [0, 1], ls=":", color="0.6", lw=1)
        for label, rep in curves.items():
            fpr = [f for _, f, _ in rep.roc]
            tpr = [t for _, _, t in rep.roc]
            line, = ax.plot(fpr, tpr, label=f"{label} (AUC {rep.auc:.3f})")
            ax.plot(*rep.eq_point, "o", ms=3.5, color=line.get_color())
        ax.set_xlim(0, 1)
        ax.set_ylim(0, 1.01)
        ax.set_xlabel("false positive rate")
        ax.set_ylabel("true positive rate")
        if title:
            ax.set_title(title)
        ax.legend(loc="lower right", frameon=False)
        save(fig, path)


def plot_code_bench(rows, path):
    """Three panels: encode time, mean reconstruction error, density.

    ``rows`` are dicts with the bench-codes CSV keys; failed rows are
    skipped.
    """
    rows = [r for r in rows if r.get("status") == "ok"]
    names = [r["solver"] for r in rows]
    panels = [("time_s", "encode time (s)", False),
              ("mean_error", "mean squared error", True),
              ("sparsity_pct", "non-zeros (%)", False)]
    with matplotlib.rc_context(STYLE):
        fig = Figure(figsize=(9.0, 2.8))
        axes = fig.subplots(1, 3)
        for ax, (key, label, logy) in zip(axes, panels):
            vals = [float(r[key]) for r in rows]
            ax.bar(names, vals, color="0.35")
            if logy and any(v > 0 for v in vals):
                ax.set_yscale("symlog", linthresh=1e-12)
            ax.set_title(label)
            ax.tick_params(axis="x", rotation=30)
        fig.tight_layout()
        save(fig, path)
