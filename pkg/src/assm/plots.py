"""Report figures rendered alongside the delimited outputs.

Every CLI report path writes a PNG next to its CSV.  The Agg backend is
forced so rendering works headless; metadata is pinned for reproducible
bytes.
"""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_SAVE_KW = {"dpi": 110, "metadata": {"Software": "assm"}}


def _finish(fig, path):
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def plot_metrics(metrics, path) -> None:
    """Compactness/generality/specificity curves against retained modes."""
    fig, axes = plt.subplots(1, 3, figsize=(10.5, 3.2))
    r = metrics.n_modes
    axes[0].plot(r, 100.0 * metrics.compactness, "o-", ms=3)
    axes[0].set_ylabel("compactness (%)")
    axes[1].plot(r, metrics.generality_mm, "o-", ms=3, color="tab:orange")
    axes[1].set_ylabel("generality (mm)")
    axes[2].plot(r, metrics.specificity_mm, "o-", ms=3, color="tab:green")
    axes[2].set_ylabel("specificity (mm)")
    for ax in axes:
        ax.set_xlabel("principal components")
        ax.grid(alpha=0.3)
    _finish(fig, path)


def plot_histograms(pop, normality, path, bins: int = 30) -> None:
    """Per-label histograms with the fitted normal density overlaid."""
    labels = pop.labels
    cols = min(3, len(labels))
    rows = math.ceil(len(labels) / cols)
    fig, axes = plt.subplots(rows, cols, figsize=(3.4 * cols, 2.6 * rows), squeeze=False)
    for j, label in enumerate(labels):
        ax = axes[j // cols][j % cols]
        x = pop.betas_raw[:, j]
        ax.hist(x, bins=bins, density=True, color="tab:blue", alpha=0.6)
        mu, sd = float(x.mean()), float(x.std(ddof=1))
        grid = np.linspace(x.min(), x.max(), 200)
        ax.plot(grid, np.exp(-0.5 * ((grid - mu) / sd) ** 2) / (sd * math.sqrt(2 * math.pi)),
                color="tab:red")
        unit = pop.stats.units.get(label, "")
        ax.set_title(f"{label} ({unit})  p={normality.pvalues[j]:.3f}", fontsize=9)
    for j in range(len(labels), rows * cols):
        axes[j // cols][j % cols].axis("off")
    _finish(fig, path)


def plot_correlation(matrix: np.ndarray, row_names, col_names, path, title: str) -> None:
    fig, ax = plt.subplots(figsize=(0.6 * len(col_names) + 2.2, 0.5 * len(row_names) + 1.8))
    im = ax.imshow(matrix, vmin=-1.0, vmax=1.0, cmap="RdBu_r")
    ax.set_xticks(range(len(col_names)), col_names, rotation=45, ha="right", fontsize=7)
    ax.set_yticks(range(len(row_names)), row_names, fontsize=7)
    if matrix.size <= 400:
        for i in range(matrix.shape[0]):
            for j in range(matrix.shape[1]):
                ax.text(j, i, f"{matrix[i, j]:.2f}", ha="center", va="center", fontsize=6)
    ax.set_title(title, fontsize=10)
    fig.colorbar(im, ax=ax, shrink=0.8)
    _finish(fig, path)


def plot_variability(report, path, sub_reports=None) -> None:
    """Per-parameter variance fractions; optional grouped sub-model bars."""
    labels = list(report.sorted_labels())
    fig, ax = plt.subplots(figsize=(1.1 * len(labels) + 2.5, 3.2))
    x = np.arange(len(labels))
    series = [("full", {c: report.normalized[report.labels.index(c)] for c in labels})]
    if sub_reports:
        for name, rep in sub_reports:
            series.append((name, {c: rep.normalized[rep.labels.index(c)]
                                  for c in rep.labels}))
    width = 0.8 / len(series)
    for k, (name, values) in enumerate(series):
        xs = [x[i] + k * width for i, c in enumerate(labels) if c in values]
        ys = [values[c] for c in labels if c in values]
        ax.bar(xs, ys, width=width, label=name)
    ax.set_xticks(x + 0.4 - width / 2, labels)
    ax.set_ylabel("shape variance fraction")
    ax.legend(fontsize=7)
    ax.grid(alpha=0.3, axis="y")
    _finish(fig, path)


def plot_sweep(result, path) -> None:
    """Standardized readouts of every parameter against the swept one."""
    fig, ax = plt.subplots(figsize=(5.2, 3.6))
    for j, label in enumerate(result.labels):
        style = "-o" if label == result.label else "-"
        ax.plot(result.t_values, result.readout_std[:, j], style, ms=3,
                label=f"{label} (slope {result.slopes[j]:+.2f})")
    ax.set_xlabel(f"{result.label} (standardized)")
    ax.set_ylabel("parameter readout (standardized)")
    ax.grid(alpha=0.3)
    ax.legend(fontsize=7)
    _finish(fig, path)


def plot_loo(report, path) -> None:
    """Mean absolute error per label for each prediction route."""
    summary = report.summary()
    labels = list(report.labels)
    routes = list(summary)
    fig, ax = plt.subplots(figsize=(1.2 * len(labels) + 2.5, 3.4))
    x = np.arange(len(labels))
    width = 0.8 / len(routes)
    for k, route in enumerate(routes):
        means = [summary[route][c]["mean"] for c in labels]
        stds = [summary[route][c]["std"] for c in labels]
        ax.bar(x + k * width, means, yerr=stds, width=width, capsize=2, label=route)
    ax.set_xticks(x + 0.4 - width / 2,
                  [f"{c} ({report.units.get(c, '')})" for c in labels], fontsize=8)
    ax.set_ylabel("mean absolute error")
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3, axis="y")
    _finish(fig, path)


def plot_population_curve(curve, path) -> None:
    sizes = [s for s, _ in curve]
    errs = [e for _, e in curve]
    fig, ax = plt.subplots(figsize=(4.6, 3.2))
    ax.plot(sizes, errs, "o-")
    ax.set_xlabel("synthetic population size")
    ax.set_ylabel("mapping vs correlation error")
    ax.grid(alpha=0.3)
    _finish(fig, path)
