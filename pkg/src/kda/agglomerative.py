"""Average-link agglomerative clustering with a fixed-count dendrogram cut.

The tree is built bottom-up: every point starts as its own cluster and the
pair with the smallest mean cross-pair distance merges at each step. A
transaction is suspicious to this detector when it is still a single-node
cluster after cutting the tree to cut_clusters flat clusters.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels as kernels
from .txmodel import FeatureVector, stack_vectors
from .verdicts import AlgorithmVerdict

# slack for float error in the monotone-heights assertion
_HEIGHT_TOL = 1e-9


@dataclass(frozen=True)
class AggloConfig:
    linkage: str = "average"
    measure: str = "euclidean"
    cut_clusters: int = 12

    def __post_init__(self):
        if self.linkage != "average":
            raise ValueError(f"unsupported linkage {self.linkage!r}; only 'average' is implemented")
        if self.cut_clusters < 1:
            raise ValueError("cut_clusters must be >= 1")


@dataclass(frozen=True)
class Dendrogram:
    """Merge tree: leaves are rows 0..n-1 carrying leaf_ids, the merge at
    step t creates node n+t. Heights are non-decreasing."""

    merges: tuple[tuple[int, int, float], ...]
    leaf_ids: tuple[int, ...]

    @property
    def n_leaves(self) -> int:
        return len(self.leaf_ids)


def agglo_fit(vectors: list[FeatureVector], config: AggloConfig) -> Dendrogram:
    """Build the full average-linkage merge tree.

    Linkage ties resolve to the pair whose (min leaf, min leaf) index pair
    is lexicographically smallest, so the tree is deterministic under input
    permutation up to renumbering.
    """
    if not vectors:
        raise ValueError("agglo_fit requires at least one vector")
    X, ids = stack_vectors(vectors)
    X = kernels.as_matrix(X)
    D = kernels.pairwise_dist(X, kernels.metric_code(config.measure))
    ma, mb, heights = kernels.average_link(D)
    if heights.size > 1:
        scale = max(1.0, float(np.abs(heights).max()))
        if not np.all(np.diff(heights) >= -_HEIGHT_TOL * scale):
            raise AssertionError("average-link merge heights must be non-decreasing")
    merges = tuple(
        (int(a), int(b), float(h)) for a, b, h in zip(ma, mb, heights)
    )
    return Dendrogram(merges=merges, leaf_ids=tuple(int(i) for i in ids))


def cut(dendrogram: Dendrogram, k: int) -> dict[int, int]:
    """Flat clustering with exactly k clusters: undo the last k-1 merges.

    Returns transaction id -> cluster index, indices numbered by ascending
    first (oldest) member position.
    """
    n = dendrogram.n_leaves
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    leaves_of: dict[int, list[int]] = {i: [i] for i in range(n)}
    for t in range(n - k):
        a, b, _ = dendrogram.merges[t]
        leaves_of[n + t] = leaves_of.pop(a) + leaves_of.pop(b)
    components = sorted(leaves_of.values(), key=min)
    labels: dict[int, int] = {}
    for idx, comp in enumerate(components):
        for leaf in comp:
            labels[dendrogram.leaf_ids[leaf]] = idx
    return labels


def agglo_flag(labels: dict[int, int], new_tx_id: int, config: AggloConfig) -> AlgorithmVerdict:
    """Suspicious iff the transaction sits alone in its flat cluster."""
    key = int(new_tx_id)
    if key not in labels:
        raise KeyError(f"transaction {new_tx_id} was not among the clustered points")
    cluster = labels[key]
    size = sum(1 for c in labels.values() if c == cluster)
    return AlgorithmVerdict(
        algorithm="agglomerative",
        flag=size == 1,
        evidence={"cluster": cluster, "cluster_size": size, "cut_clusters": config.cut_clusters},
    )
