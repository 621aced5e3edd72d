"""Lloyd's k-means with seeded restarts, sparse-cluster flagging, and
Davies-Bouldin validity scoring.

A transaction is suspicious to this detector when it lands in a cluster at
or below the minimum-member threshold: habitual behavior forms sizeable
clusters, so sparse ones mark departures from the customer's pattern.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as kernels
from .txmodel import FeatureVector, stack_vectors
from .verdicts import AlgorithmVerdict


@dataclass(frozen=True)
class KMeansConfig:
    k: int = 12
    max_runs: int = 10
    max_optimization_steps: int = 100
    measure: str = "euclidean"
    seed: int = 0
    min_member_threshold: int = 2

    def __post_init__(self):
        if self.k < 1 or self.max_runs < 1 or self.max_optimization_steps < 1:
            raise ValueError("k, max_runs and max_optimization_steps must be >= 1")
        if self.min_member_threshold < 1:
            raise ValueError("min_member_threshold must be >= 1")


@dataclass
class KMeansModel:
    """Best-of-max_runs clustering: centroids are component-wise means, sse
    is the squared-Euclidean objective of the winning run."""

    centroids: np.ndarray
    ids: np.ndarray
    assign: np.ndarray
    cluster_sizes: np.ndarray
    sse: float
    run_sse: list[float]
    run_histories: list[np.ndarray]
    _by_id: dict[int, int] = field(init=False, repr=False)

    def __post_init__(self):
        self._by_id = {int(i): int(c) for i, c in zip(self.ids, self.assign)}

    @property
    def k(self) -> int:
        return self.centroids.shape[0]

    def cluster_of(self, tx_id: int) -> int:
        try:
            return self._by_id[int(tx_id)]
        except KeyError:
            raise KeyError(f"transaction {tx_id} was not among the fitted points") from None

    def assignments(self) -> dict[int, int]:
        return dict(self._by_id)


def kmeans_fit(vectors: list[FeatureVector], config: KMeansConfig) -> KMeansModel:
    """Run Lloyd's iteration from max_runs seeded starts, keep the lowest-SSE run.

    Each run draws its initial centroids without replacement from the
    distinct input points (k clamps to the distinct-point count) using a
    sub-seed derived from (seed, run index); iteration stops when the
    assignment stabilizes or after max_optimization_steps.
    """
    if not vectors:
        raise ValueError("kmeans_fit requires at least one vector")
    X, ids = stack_vectors(vectors)
    X = kernels.as_matrix(X)
    metric = kernels.metric_code(config.measure)
    unique = np.unique(X, axis=0)
    k_eff = min(config.k, unique.shape[0])
    children = np.random.SeedSequence(config.seed).spawn(config.max_runs)
    best = None
    run_sse: list[float] = []
    run_histories: list[np.ndarray] = []
    for child in children:
        rng = np.random.default_rng(child)
        init_idx = rng.choice(unique.shape[0], size=k_eff, replace=False)
        init = kernels.as_matrix(unique[init_idx])
        cents, assign, hist, iters = kernels.lloyd_run(
            X, init, config.max_optimization_steps, metric
        )
        final = float(hist[iters - 1])
        run_sse.append(final)
        run_histories.append(hist[:iters].copy())
        if best is None or final < best[0]:
            best = (final, cents, assign)
    sse, cents, assign = best
    sizes = np.bincount(assign, minlength=k_eff)
    return KMeansModel(
        centroids=cents,
        ids=ids,
        assign=assign,
        cluster_sizes=sizes,
        sse=sse,
        run_sse=run_sse,
        run_histories=run_histories,
    )


def davies_bouldin(model: KMeansModel, vectors: list[FeatureVector]) -> float:
    """Davies-Bouldin index of the fitted clustering; lower is better.

    Scatter is the mean Euclidean distance of a cluster's members to its
    centroid. Coincident centroids make the index degenerate and return
    +inf. Requires at least two clusters.
    """
    if model.k < 2:
        raise ValueError("Davies-Bouldin needs at least 2 clusters")
    X, _ = stack_vectors(vectors)
    k = model.k
    sigma = np.empty(k)
    for j in range(k):
        members = X[model.assign == j]
        sigma[j] = float(np.sqrt(((members - model.centroids[j]) ** 2).sum(axis=1)).mean())
    total = 0.0
    for i in range(k):
        worst = 0.0
        for j in range(k):
            if j == i:
                continue
            sep = float(np.sqrt(((model.centroids[i] - model.centroids[j]) ** 2).sum()))
            if sep == 0.0:
                return math.inf
            worst = max(worst, (sigma[i] + sigma[j]) / sep)
        total += worst
    return total / k


def kmeans_flag(model: KMeansModel, new_tx_id: int, config: KMeansConfig) -> AlgorithmVerdict:
    """Suspicious iff the transaction's cluster has <= min_member_threshold members."""
    cluster = model.cluster_of(new_tx_id)
    size = int(model.cluster_sizes[cluster])
    return AlgorithmVerdict(
        algorithm="kmeans",
        flag=size <= config.min_member_threshold,
        evidence={"cluster": cluster, "cluster_size": size, "threshold": config.min_member_threshold},
    )
