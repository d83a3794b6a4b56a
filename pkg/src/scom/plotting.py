"""Figure rendering for the report paths: accuracy against selected-set
size, and accuracy against the number of oracle interventions."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .intervention import SweepReport


def accuracy_vs_k_figure(report_rows: list[dict], path) -> None:
    """One line per method (external files keep their source label)."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    series: dict[str, list[dict]] = {}
    for row in report_rows:
        label = row["method"] if not row.get("source") else f"external ({row['source']})"
        series.setdefault(label, []).append(row)
    for label, rows in series.items():
        rows = sorted(rows, key=lambda r: r["k"])
        ax.errorbar(
            [r["k"] for r in rows],
            [r["accuracy"] for r in rows],
            yerr=[r["stderr"] for r in rows],
            marker="o", capsize=3, label=label)
    ax.set_xlabel("selected concept groups (k)")
    ax.set_ylabel("accuracy")
    ax.set_ylim(0.0, 1.05)
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def sweep_figure(report: SweepReport, path) -> None:
    """One line per set size k: accuracy as interventions accumulate."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    by_k: dict[int, list] = {}
    for row in report.rows:
        by_k.setdefault(row.k, []).append(row)
    for k in sorted(by_k):
        rows = sorted(by_k[k], key=lambda r: r.interventions)
        ax.errorbar(
            [r.interventions for r in rows],
            [r.accuracy for r in rows],
            yerr=[r.stderr for r in rows],
            marker="o", capsize=3, label=f"k={k}")
    ax.set_xlabel("oracle interventions")
    ax.set_ylabel("accuracy")
    ax.set_ylim(0.0, 1.05)
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
