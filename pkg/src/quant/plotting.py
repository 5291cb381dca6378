"""Figures written next to the CSV reports."""

from __future__ import annotations

from collections import defaultdict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.titlesize": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "savefig.dpi": 150,
    "savefig.bbox": "tight",
}


def pairwise_accuracy(comparison, path, name_a="A", name_b="B"):
    """Scatter of per-dataset mean accuracy, method A on the y axis against B on the x axis."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(3.6, 3.6))
        lo = float(min(comparison.mean_a.min(), comparison.mean_b.min()))
        lo = max(0.0, np.floor(lo * 10) / 10)
        ax.plot([lo, 1], [lo, 1], color="0.6", lw=0.8, zorder=1)
        ax.scatter(comparison.mean_b, comparison.mean_a, s=12, color="C0", alpha=0.8, zorder=2)
        ax.set_xlim(lo, 1)
        ax.set_ylim(lo, 1)
        ax.set_aspect("equal")
        ax.set_xlabel(name_b)
        ax.set_ylabel(name_a)
        ax.text(
            0.04,
            0.96,
            f"{name_a} is better here\nW/D/L {comparison.wins}/{comparison.draws}/{comparison.losses}\n"
            f"p = {comparison.p_value:.3g}",
            transform=ax.transAxes,
            va="top",
        )
        fig.savefig(path)
        plt.close(fig)


def sweep_summary(records, axis, path):
    """Mean accuracy (left) and mean time per fold (right) against the swept value.

    ``records`` are dicts with ``value``, ``accuracy`` and ``seconds`` keys; the
    x axis keeps the order in which values first appear.
    """
    acc, secs = defaultdict(list), defaultdict(list)
    order = []
    for rec in records:
        if rec["value"] not in acc:
            order.append(rec["value"])
        acc[rec["value"]].append(rec["accuracy"])
        if rec.get("seconds") is not None:
            secs[rec["value"]].append(rec["seconds"])
    x = np.arange(len(order))
    with plt.rc_context(STYLE):
        fig, (left, right) = plt.subplots(1, 2, figsize=(7, 2.8))
        left.plot(x, [np.mean(acc[v]) for v in order], marker="o")
        left.set_ylabel("mean accuracy")
        if secs:
            right.plot(x, [np.mean(secs[v]) if secs[v] else np.nan for v in order], marker="o", color="C1")
        right.set_ylabel("seconds per fold")
        for ax in (left, right):
            ax.set_xticks(x)
            ax.set_xticklabels(order, rotation=30 if max(len(str(v)) for v in order) > 6 else 0)
            ax.set_xlabel(axis)
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)
