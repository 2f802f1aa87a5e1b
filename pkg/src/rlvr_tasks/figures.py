"""Figure rendering for evaluation reports.

Writes PNG files next to the delimited report output: a grouped pass-rate
bar chart per model and family, a query-type accuracy heatmap for spatial
problems, and a stacked reward-category breakdown per model.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .harness import EvalReport
from .rewards import TELEMETRY_CATEGORIES

_CATEGORY_COLORS = {
    "correct_well_formatted": "#2a9d8f",
    "correct_other_format": "#8ab17d",
    "incorrect_well_formatted": "#e9c46a",
    "extraction_failure": "#e76f51",
    "cutoff": "#6d6875",
}


def _pass_rate_figure(report: EvalReport, path: Path) -> None:
    models = sorted(report.per_model_family)
    families = sorted({f for groups in report.per_model_family.values() for f in groups})
    if not models or not families:
        return
    width = 0.8 / len(families)
    x = np.arange(len(models))
    fig, ax = plt.subplots(figsize=(max(6, 1.6 * len(models)), 4))
    for i, family in enumerate(families):
        rates = [
            report.per_model_family[m].get(family, {}).get("pass_rate", 0.0) for m in models
        ]
        ax.bar(x + i * width, rates, width, label=family)
    ax.set_xticks(x + width * (len(families) - 1) / 2)
    ax.set_xticklabels(models, rotation=30, ha="right")
    ax.set_ylabel("pass rate")
    ax.set_ylim(0, 1)
    ax.set_title("Pass rate per model and family")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def _query_kind_figure(report: EvalReport, path: Path) -> None:
    models = sorted(report.per_query_kind)
    if not models:
        return
    kinds = sorted({k for groups in report.per_query_kind.values() for k in groups})
    grid = np.zeros((len(models), len(kinds)))
    for i, model in enumerate(models):
        for j, kind in enumerate(kinds):
            grid[i, j] = report.per_query_kind[model].get(kind, {}).get("pass_rate", 0.0)
    fig, ax = plt.subplots(figsize=(max(6, 1.2 * len(kinds)), max(3, 0.6 * len(models) + 1.5)))
    im = ax.imshow(grid, vmin=0, vmax=1, cmap="viridis", aspect="auto")
    ax.set_xticks(range(len(kinds)))
    ax.set_xticklabels(kinds, rotation=30, ha="right")
    ax.set_yticks(range(len(models)))
    ax.set_yticklabels(models)
    for i in range(len(models)):
        for j in range(len(kinds)):
            ax.text(j, i, f"{grid[i, j]:.2f}", ha="center", va="center", color="white", fontsize=8)
    ax.set_title("Accuracy by query type")
    fig.colorbar(im, ax=ax, label="pass rate")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def _category_figure(report: EvalReport, path: Path) -> None:
    models = sorted(report.category_histogram)
    if not models:
        return
    fig, ax = plt.subplots(figsize=(max(6, 1.6 * len(models)), 4))
    bottoms = np.zeros(len(models))
    x = np.arange(len(models))
    for category in TELEMETRY_CATEGORIES:
        counts = np.array(
            [report.category_histogram[m].get(category, 0) for m in models], dtype=float
        )
        ax.bar(x, counts, 0.6, bottom=bottoms, label=category, color=_CATEGORY_COLORS.get(category))
        bottoms += counts
    ax.set_xticks(x)
    ax.set_xticklabels(models, rotation=30, ha="right")
    ax.set_ylabel("completions")
    ax.set_title("Reward category breakdown")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_figures(report: EvalReport, out_dir: str) -> list[str]:
    """Render all applicable figures; returns the written file paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    targets = (
        ("pass_rates.png", _pass_rate_figure),
        ("query_types.png", _query_kind_figure),
        ("reward_categories.png", _category_figure),
    )
    for name, fn in targets:
        path = out / name
        fn(report, path)
        if path.exists():
            written.append(str(path))
    return written
