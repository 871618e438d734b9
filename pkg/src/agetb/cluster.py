"""Grouping of age bins by mean incidence rate (1-D k-means)."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyCluster, ModelError

OPEN_BIN = "85+"


@dataclass(frozen=True)
class IncidenceTable:
    labels: tuple[str, ...]
    rates: tuple[float, ...]
    mean_cases: tuple[float, ...] | None = None

    def __post_init__(self):
        if len(self.labels) != len(self.rates):
            raise ModelError("labels and rates differ in length")
        if any(not r > 0 for r in self.rates):
            raise ModelError("incidence rates must be positive")

    def without(self, label: str) -> "IncidenceTable":
        keep = [i for i, lab in enumerate(self.labels) if lab != label]
        cases = None if self.mean_cases is None else tuple(self.mean_cases[i] for i in keep)
        return IncidenceTable(tuple(self.labels[i] for i in keep), tuple(self.rates[i] for i in keep), cases)


@dataclass(frozen=True)
class ClusterResult:
    labels: tuple[str, ...]
    assignment: tuple[int, ...]  # 1-based, ordered by centroid
    centroids: tuple[float, ...]
    inertia: float


def _kmeans_pp(x, k, rng):
    centers = [x[rng.integers(len(x))]]
    for _ in range(1, k):
        d2 = np.min((x[:, None] - np.array(centers)[None, :]) ** 2, axis=1)
        if d2.sum() == 0:
            centers.append(x[rng.integers(len(x))])
        else:
            centers.append(x[rng.choice(len(x), p=d2 / d2.sum())])
    return np.array(centers, dtype=float)


def _lloyd(x, centers, max_iter=300):
    labels = None
    for _ in range(max_iter):
        new = np.argmin(np.abs(x[:, None] - centers[None, :]), axis=1)
        if labels is not None and np.array_equal(new, labels):
            break
        labels = new
        for c in range(len(centers)):
            members = x[labels == c]
            if len(members) == 0:
                return None, None
            centers[c] = members.mean()
    inertia = float(np.sum((x - centers[labels]) ** 2))
    return labels, inertia


def kmeans_1d(values, k: int, seed: int | None = 0, restarts: int = 50):
    """Best of ``restarts`` Lloyd runs from k-means++ seeds.

    Returns ``(labels, centroids, inertia)`` with clusters numbered 0..k-1 in
    increasing centroid order.
    """
    x = np.asarray(values, dtype=float)
    if k < 1 or len(x) < k:
        raise ModelError(f"need 1 <= k <= {len(x)}, got k={k}")
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(restarts):
        labels, inertia = _lloyd(x, _kmeans_pp(x, k, rng))
        if labels is None:
            continue
        if best is None or inertia < best[1] - 1e-12:
            best = (labels, inertia)
    if best is None:
        raise EmptyCluster(f"every restart produced an empty cluster (k={k})")
    labels, inertia = best
    centroids = np.array([x[labels == c].mean() for c in range(k)])
    order = np.argsort(centroids, kind="stable")
    relabel = np.empty(k, dtype=int)
    relabel[order] = np.arange(k)
    return relabel[labels], centroids[order], inertia


def cluster_age_bins(table: IncidenceTable, k: int = 3, seed: int | None = 0,
                     restarts: int = 50) -> ClusterResult:
    labels, centroids, inertia = kmeans_1d(table.rates, k, seed=seed, restarts=restarts)
    return ClusterResult(
        labels=table.labels,
        assignment=tuple(int(c) + 1 for c in labels),
        centroids=tuple(float(c) for c in centroids),
        inertia=float(inertia),
    )
