"""Evaluation report rendering: text table, JSON record, and figures.

``save_report`` writes four files next to each other: ``<stem>.json``
(machine-readable record), ``<stem>.txt`` (the per-class table),
``<stem>_confusion.png`` (confusion heatmap), and ``<stem>_metrics.png``
(per-class bar chart).
"""

from __future__ import annotations

import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .scifact import CLASS_ORDER, REFERENCE_WEIGHTED_SCORES, MetricsReport  # noqa: E402


def render_text_table(report: MetricsReport) -> str:
    """Per-class precision/recall/F1 table with a weighted-average row."""
    header = f"{'':<14}{'Precision':>11}{'Recall':>9}{'F1-score':>10}{'Count':>8}"
    lines = [header, "-" * len(header)]
    for label in CLASS_ORDER:
        lines.append(
            f"{label.value:<14}"
            f"{report.precision[label]:>11.2f}"
            f"{report.recall[label]:>9.2f}"
            f"{report.f1[label]:>10.2f}"
            f"{report.class_counts[label]:>8d}"
        )
    lines.append(
        f"{'Weighted Avg':<14}"
        f"{report.weighted_precision:>11.2f}"
        f"{report.weighted_recall:>9.2f}"
        f"{report.weighted_f1:>10.2f}"
        f"{report.total:>8d}"
    )
    lines.append(f"Accuracy: {report.accuracy:.4f}")
    return "\n".join(lines)


def report_to_record(report: MetricsReport) -> dict:
    return {
        "classes": [label.value for label in CLASS_ORDER],
        "confusion": report.confusion,
        "per_class": {
            label.value: {
                "precision": report.precision[label],
                "recall": report.recall[label],
                "f1": report.f1[label],
                "count": report.class_counts[label],
            }
            for label in CLASS_ORDER
        },
        "weighted_avg": {
            "precision": report.weighted_precision,
            "recall": report.weighted_recall,
            "f1": report.weighted_f1,
        },
        "accuracy": report.accuracy,
        "total": report.total,
        "reference_models": {
            name: {"precision": p, "recall": r, "f1": f}
            for name, (p, r, f) in REFERENCE_WEIGHTED_SCORES.items()
        },
    }


def plot_confusion(report: MetricsReport, path: str | Path) -> None:
    names = [label.value for label in CLASS_ORDER]
    fig, ax = plt.subplots(figsize=(5.5, 4.5))
    image = ax.imshow(report.confusion, cmap="Blues")
    ax.set_xticks(range(3), names, rotation=30, ha="right")
    ax.set_yticks(range(3), names)
    ax.set_xlabel("Predicted")
    ax.set_ylabel("Gold")
    peak = max(max(row) for row in report.confusion)
    for i in range(3):
        for j in range(3):
            value = report.confusion[i][j]
            color = "white" if peak and value > peak / 2 else "black"
            ax.text(j, i, str(value), ha="center", va="center", color=color)
    fig.colorbar(image, ax=ax, shrink=0.8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_metrics(report: MetricsReport, path: str | Path) -> None:
    names = [label.value for label in CLASS_ORDER]
    metrics = {
        "Precision": [report.precision[c] for c in CLASS_ORDER],
        "Recall": [report.recall[c] for c in CLASS_ORDER],
        "F1": [report.f1[c] for c in CLASS_ORDER],
    }
    fig, ax = plt.subplots(figsize=(6.5, 4.0))
    width = 0.25
    for offset, (name, values) in enumerate(metrics.items()):
        positions = [i + (offset - 1) * width for i in range(3)]
        bars = ax.bar(positions, values, width=width, label=name)
        ax.bar_label(bars, fmt="%.2f", fontsize=8)
    ax.axhline(
        report.weighted_f1, linestyle="--", linewidth=1, color="gray",
        label=f"Weighted F1 = {report.weighted_f1:.2f}",
    )
    ax.set_xticks(range(3), names)
    ax.set_ylim(0, 1.15)
    ax.set_ylabel("Score")
    ax.legend(loc="upper right", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_report(report: MetricsReport, out_path: str | Path) -> dict[str, Path]:
    """Write all report artifacts; returns the paths keyed by kind."""
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    stem = out_path.with_suffix("") if out_path.suffix else out_path
    paths = {
        "json": stem.with_suffix(".json"),
        "text": stem.with_suffix(".txt"),
        "confusion_figure": Path(f"{stem}_confusion.png"),
        "metrics_figure": Path(f"{stem}_metrics.png"),
    }
    paths["json"].write_text(
        json.dumps(report_to_record(report), indent=2) + "\n", encoding="utf-8"
    )
    paths["text"].write_text(render_text_table(report) + "\n", encoding="utf-8")
    plot_confusion(report, paths["confusion_figure"])
    plot_metrics(report, paths["metrics_figure"])
    return paths
