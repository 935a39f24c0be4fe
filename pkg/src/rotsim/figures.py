"""Figure rendering for evaluation reports (file output only)."""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .evalbench import EvalReport


def render_scatter(preds, golds, title: str, path: str) -> str:
    """Prediction-vs-gold scatter with the Pearson correlation annotated."""
    preds = np.asarray(preds, dtype=np.float64)
    golds = np.asarray(golds, dtype=np.float64)
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.scatter(golds, preds, s=8, alpha=0.5, edgecolors="none")
    ax.set_xlabel("gold score")
    ax.set_ylabel("predicted similarity")
    ax.set_title(title)
    if preds.size >= 2 and np.ptp(preds) > 0 and np.ptp(golds) > 0:
        r = float(np.corrcoef(preds, golds)[0, 1])
        ax.annotate(
            f"r = {r:.4f}",
            xy=(0.05, 0.92),
            xycoords="axes fraction",
            fontsize=10,
        )
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_subtask_bars(report: EvalReport, path: str) -> str:
    """Per-subtask Pearson/Spearman (x100) bars, with BCa error bars when
    the report carries intervals."""
    labels = [s.label for s in report.subtasks]
    x = np.arange(len(labels))
    width = 0.38
    fig, ax = plt.subplots(figsize=(max(5, 1.2 * len(labels) + 3), 4))
    for off, attr, ci_attr, name in (
        (-width / 2, "pearson_x100", "pearson_ci_x100", "Pearson"),
        (width / 2, "spearman_x100", "spearman_ci_x100", "Spearman"),
    ):
        vals = [float(getattr(s, attr)) for s in report.subtasks]
        cis = [getattr(s, ci_attr) for s in report.subtasks]
        if all(ci is not None for ci in cis):
            err = [
                [abs(v - ci[0]) for v, ci in zip(vals, cis)],
                [abs(ci[1] - v) for v, ci in zip(vals, cis)],
            ]
            ax.bar(x + off, vals, width, label=name, yerr=err, capsize=3)
        else:
            ax.bar(x + off, vals, width, label=name)
    ax.set_xticks(x)
    ax.set_xticklabels([os.path.basename(l) for l in labels], rotation=20, ha="right")
    ax.set_ylabel("correlation x 100")
    ax.set_title(f"method = {report.method}")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_level_profile(level_means, path: str) -> str:
    """Mean per-level score across pairs for the recursive method."""
    vals = np.asarray(level_means, dtype=np.float64)
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.bar(np.arange(vals.size), vals, color="#4878a8")
    ax.set_xlabel("partition level")
    ax.set_ylabel("mean per-level score")
    ax.set_xticks(np.arange(vals.size))
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
