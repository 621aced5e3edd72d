"""Per-customer clustering-ensemble fraud detection.

Three detectors (k-means sparse clusters, DBSCAN+LOF density, average-link
singleton-at-cut) each flag a transaction against the customer's recent
window; a 2-of-3 vote decides. Batch and streaming evaluation, an embedded
store, a synthetic benchmark harness, an HTTP service, and a CLI sit on
top.
"""

from .agglomerative import AggloConfig, Dendrogram, agglo_fit, agglo_flag, cut
from .dbscan_lof import (
    DbscanLofConfig,
    DbscanLofModel,
    dbscan_lof_fit,
    dbscan_lof_flag,
    k_distance,
    lof_scores,
)
from .ensemble import (
    KdaConfig,
    kda_evaluate,
    kda_evaluate_offline,
    select_window,
    vote,
)
from .kmeans import KMeansConfig, KMeansModel, davies_bouldin, kmeans_fit, kmeans_flag
from .simgen import (
    CustomerProfile,
    EvaluationReport,
    FraudSpec,
    compute_detection_metrics,
    generate_history,
    inject_fraud,
    random_profile,
)
from .txmodel import (
    FeatureVector,
    RawTransaction,
    Transaction,
    encode_window,
    filter_eligible,
    preprocess,
)
from .verdicts import AlgorithmVerdict, KdaVerdict

__version__ = "0.1.0"

__all__ = [
    "AggloConfig",
    "AlgorithmVerdict",
    "CustomerProfile",
    "DbscanLofConfig",
    "DbscanLofModel",
    "Dendrogram",
    "EvaluationReport",
    "FeatureVector",
    "FraudSpec",
    "KMeansConfig",
    "KMeansModel",
    "KdaConfig",
    "KdaVerdict",
    "RawTransaction",
    "Transaction",
    "agglo_fit",
    "agglo_flag",
    "compute_detection_metrics",
    "cut",
    "davies_bouldin",
    "dbscan_lof_fit",
    "dbscan_lof_flag",
    "encode_window",
    "filter_eligible",
    "generate_history",
    "inject_fraud",
    "k_distance",
    "kda_evaluate",
    "kda_evaluate_offline",
    "kmeans_fit",
    "kmeans_flag",
    "lof_scores",
    "preprocess",
    "random_profile",
    "select_window",
    "vote",
]
