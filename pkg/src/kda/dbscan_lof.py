"""Density detector: DBSCAN labeling plus a local-outlier-factor check.

With min_pts at its default of 1 every point is its own core point and
DBSCAN alone can never mark noise, so the outlier factor carries the
signal: a transaction is suspicious when it is labeled noise or when its
LOF exceeds the configured threshold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as kernels
from .txmodel import FeatureVector, distance, stack_vectors
from .verdicts import AlgorithmVerdict

# JSON has no inf; evidence caps scores at this sentinel
_SCORE_CAP = 1e300


@dataclass(frozen=True)
class DbscanLofConfig:
    eps: float = 1_000_000.0
    min_pts: int = 1
    lof_k: int = 5
    lof_threshold: float = 1.5
    measure: str = "euclidean"

    def __post_init__(self):
        if self.eps <= 0:
            raise ValueError("eps must be positive")
        if self.min_pts < 1 or self.lof_k < 1:
            raise ValueError("min_pts and lof_k must be >= 1")
        if self.lof_threshold <= 0:
            raise ValueError("lof_threshold must be positive")


@dataclass
class DbscanLofModel:
    """Labels use -1 for noise; lof holds one score per point (1.0 for a
    singleton window, where no neighborhood exists)."""

    ids: np.ndarray
    labels: np.ndarray
    lof: np.ndarray
    n_clusters: int
    _row_by_id: dict[int, int] = field(init=False, repr=False)

    def __post_init__(self):
        self._row_by_id = {int(i): r for r, i in enumerate(self.ids)}

    def row_of(self, tx_id: int) -> int:
        try:
            return self._row_by_id[int(tx_id)]
        except KeyError:
            raise KeyError(f"transaction {tx_id} was not among the fitted points") from None


def dbscan_lof_fit(vectors: list[FeatureVector], config: DbscanLofConfig) -> DbscanLofModel:
    """Label the window with DBSCAN and score every point with LOF.

    Both passes share one distance matrix. The neighborhood size for LOF
    clamps to n-1 when the window is smaller than lof_k+1.
    """
    if not vectors:
        raise ValueError("dbscan_lof_fit requires at least one vector")
    X, ids = stack_vectors(vectors)
    X = kernels.as_matrix(X)
    metric = kernels.metric_code(config.measure)
    n = X.shape[0]
    if n == 1:
        return DbscanLofModel(ids=ids, labels=np.zeros(1, dtype=np.int64),
                              lof=np.ones(1), n_clusters=1)
    D = kernels.pairwise_dist(X, metric)
    labels = kernels.dbscan_labels(D, config.eps, config.min_pts)
    k_eff = min(config.lof_k, n - 1)
    lof = kernels.lof_from_dmat(D, k_eff)
    n_clusters = int(labels.max()) + 1 if (labels >= 0).any() else 0
    return DbscanLofModel(ids=ids, labels=labels, lof=lof, n_clusters=n_clusters)


def k_distance(vectors: list[FeatureVector], p: FeatureVector, k: int) -> float:
    """Distance from p to its k-th nearest other point; ties may widen the
    neighborhood but not this value. Requires at least k other points."""
    others = [v for v in vectors if v is not p]
    if len(others) < k:
        raise ValueError(f"k_distance needs at least {k} other points, have {len(others)}")
    dists = sorted(distance(p, o) for o in others)
    return dists[k - 1]


def lof_scores(vectors: list[FeatureVector], config: DbscanLofConfig) -> dict[int, float]:
    """Local outlier factor per transaction id; needs lof_k + 1 points."""
    if len(vectors) < config.lof_k + 1:
        raise ValueError(f"lof_scores needs at least {config.lof_k + 1} points")
    X, ids = stack_vectors(vectors)
    D = kernels.pairwise_dist(kernels.as_matrix(X), kernels.metric_code(config.measure))
    lof = kernels.lof_from_dmat(D, config.lof_k)
    return {int(i): float(s) for i, s in zip(ids, lof)}


def dbscan_lof_flag(model: DbscanLofModel, new_tx_id: int, config: DbscanLofConfig) -> AlgorithmVerdict:
    """Suspicious iff the transaction is noise or its LOF is at or above the
    threshold."""
    row = model.row_of(new_tx_id)
    label = int(model.labels[row])
    score = float(model.lof[row])
    noise = label == -1
    flag = noise or score >= config.lof_threshold
    reported = min(score, _SCORE_CAP) if math.isfinite(score) else _SCORE_CAP
    return AlgorithmVerdict(
        algorithm="dbscan",
        flag=flag,
        evidence={
            "label": label,
            "noise": noise,
            "lof": reported,
            "lof_threshold": config.lof_threshold,
        },
    )
