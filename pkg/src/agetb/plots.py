"""Static figures written next to the CSV/JSON outputs.

Uses the Agg backend and strips the software tag from PNG metadata so two
runs with the same inputs write identical files.
"""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "figure.figsize": (6.4, 4.0),
    "figure.dpi": 100,
    "font.size": 9,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "axes.linewidth": 0.6,
    "legend.frameon": False,
    "svg.hashsalt": "agetb",
}
GROUP_NAMES = ("0-15", "15-60", "60+")


def _save(fig, path) -> None:
    fig.tight_layout()
    fig.savefig(path, metadata={"Software": None})
    plt.close(fig)


def annual_cases(years, cases, path, title="") -> None:
    """Stacked per-group annual cases."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.stackplot(years, np.asarray(cases).T, labels=GROUP_NAMES, alpha=0.8)
        ax.set_xlabel("year")
        ax.set_ylabel("new cases")
        ax.set_title(title)
        ax.legend(loc="upper right")
        _save(fig, path)


def fit_vs_observed(result, path) -> None:
    with plt.rc_context(STYLE):
        fig, axes = plt.subplots(1, 4, figsize=(11, 3.2), sharex=True)
        years = np.array(result.years)
        series = [(f"ages {g}", result.observed[:, k], result.predicted[:, k]) for k, g in enumerate(GROUP_NAMES)]
        series.append((f"total (R² = {result.r2:.3f})", result.observed.sum(axis=1), result.predicted.sum(axis=1)))
        for ax, (title, obs, pred) in zip(axes, series):
            ax.plot(years, obs, "o", ms=3, color="k", label="reported")
            ax.plot(years, pred, "-", color="C3", label="model")
            ax.set_title(title)
            ax.set_xlabel("year")
        axes[0].set_ylabel("annual cases")
        axes[0].legend()
        _save(fig, path)


def prcc_bars(result, path) -> None:
    ranked = result.ranked()[::-1]
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(5, 5.5))
        values = [v for _, v in ranked]
        ax.barh([n for n, _ in ranked], values, color=["C3" if v > 0 else "C0" for v in values])
        ax.axvline(0, color="k", lw=0.5)
        ax.set_xlim(-1, 1)
        ax.set_xlabel("PRCC with R_v")
        _save(fig, path)


def projections(projs, path, threshold=None, first_year=None) -> None:
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        for proj in projs:
            years = np.array(proj.years)
            keep = years >= (first_year or years[0])
            ax.plot(years[keep], proj.totals[keep], label=proj.name)
        if threshold is not None:
            ax.axhline(threshold, color="k", ls="--", lw=0.8, label=f"target {threshold:,.0f}")
        ax.set_xlabel("year")
        ax.set_ylabel("annual cases")
        ax.legend()
        _save(fig, path)


def epsilon_heatmap(grid, values, axes, path) -> None:
    """R_v over two preferential-contact shares, with the R_v = 1 contour."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(5, 4))
        mesh = ax.pcolormesh(grid, grid, np.asarray(values).T, shading="nearest", cmap="viridis")
        if np.nanmin(values) < 1 < np.nanmax(values):
            ax.contour(grid, grid, np.asarray(values).T, levels=[1.0], colors="w", linewidths=1)
        fig.colorbar(mesh, ax=ax, label="R_v")
        ax.set_xlabel(f"eps{axes[0]}")
        ax.set_ylabel(f"eps{axes[1]}")
        _save(fig, path)


def cluster_strip(result, rates, path) -> None:
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(7, 3))
        x = np.arange(len(rates))
        ax.bar(x, rates, color=[f"C{c - 1}" for c in result.assignment])
        ax.set_xticks(x, result.labels, rotation=60, ha="right")
        ax.set_ylabel("mean incidence per 100k")
        for c, centre in enumerate(result.centroids, start=1):
            ax.axhline(centre, color=f"C{c - 1}", ls=":", lw=0.8)
        _save(fig, path)
