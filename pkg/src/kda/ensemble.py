"""Three-detector ensemble with 2-of-3 majority voting.

One evaluation encodes the customer's window twice (6-dim for k-means and
the density detector, 3-dim for the linkage detector), runs the three fits,
reads off each detector's flag for the newest transaction, and votes: the
transaction is suspicious when at least two detectors agree.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from datetime import date, timedelta

import numpy as np

from .agglomerative import AggloConfig, agglo_fit, agglo_flag, cut
from .dbscan_lof import DbscanLofConfig, dbscan_lof_fit, dbscan_lof_flag
from .kmeans import KMeansConfig, kmeans_fit, kmeans_flag
from .txmodel import SIX_DIM, THREE_DIM, Transaction, encode_window
from .verdicts import AlgorithmVerdict, KdaVerdict

POLICIES = ("alert_only", "auto_stop")


@dataclass(frozen=True)
class KdaConfig:
    window_size: int = 100
    window_period_days: int = 90
    min_history: int = 10
    policy: str = "alert_only"
    seed: int = 0
    scaling: str = "none"
    kmeans: KMeansConfig = field(default_factory=KMeansConfig)
    dbscan: DbscanLofConfig = field(default_factory=DbscanLofConfig)
    agglomerative: AggloConfig = field(default_factory=AggloConfig)

    def __post_init__(self):
        if self.window_size < 1 or self.window_period_days < 1 or self.min_history < 1:
            raise ValueError("window_size, window_period_days and min_history must be >= 1")
        if self.min_history > self.window_size:
            raise ValueError("min_history must not exceed window_size")
        if self.policy not in POLICIES:
            raise ValueError(f"policy must be one of {POLICIES}")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")
        if self.scaling not in ("none", "zscore"):
            raise ValueError("scaling must be 'none' or 'zscore'")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "KdaConfig":
        d = dict(data)
        try:
            kmeans = KMeansConfig(**d.pop("kmeans", {}))
            dbscan = DbscanLofConfig(**d.pop("dbscan", {}))
            agglomerative = AggloConfig(**d.pop("agglomerative", {}))
            return cls(kmeans=kmeans, dbscan=dbscan, agglomerative=agglomerative, **d)
        except TypeError as exc:
            raise ValueError(f"bad config: {exc}") from None


def vote(nk: bool, nd: bool, na: bool) -> bool:
    """True iff at least two of the three detector flags are raised."""
    return (nk and nd) or (nk and na) or (nd and na)


def select_window(
    history: list[Transaction],
    config: KdaConfig,
    as_of: date | None = None,
    up_to_id: int | None = None,
) -> list[Transaction]:
    """Apply the window rule to an in-memory history: the most recent
    <= window_size transactions dated within window_period_days of as_of,
    oldest first.

    as_of defaults to the newest (highest-id) transaction's date. This is
    the same rule persistent storage applies when fetching a customer
    window, so in-memory evaluation matches the service path.
    """
    txs = sorted(
        (t for t in history if up_to_id is None or t.id <= up_to_id),
        key=lambda t: t.id,
    )
    if not txs:
        return []
    if as_of is None:
        as_of = txs[-1].trx_date
    earliest = as_of - timedelta(days=config.window_period_days)
    inside = [t for t in txs if earliest <= t.trx_date <= as_of]
    return inside[-config.window_size:]


def _derive_seed(master: int, tx_id: int) -> int:
    # one sub-seed per evaluated window, keyed by the newest transaction
    return int(np.random.SeedSequence([master, tx_id]).generate_state(1, dtype=np.uint64)[0])


def _action_for(nf: bool, policy: str) -> str:
    if not nf:
        return "pass"
    return "alert" if policy == "alert_only" else "stop"


def _warm_up_verdict(tx_id: int, n: int, config: KdaConfig) -> KdaVerdict:
    evidence = {"warm_up": True, "window_size": n, "min_history": config.min_history}
    verdicts = {
        name: AlgorithmVerdict(algorithm=name, flag=False, evidence=dict(evidence))
        for name in ("kmeans", "dbscan", "agglomerative")
    }
    return KdaVerdict(
        transaction_id=tx_id, nk=False, nd=False, na=False, nf=False,
        action="pass", verdicts=verdicts, window_size=n, warm_up=True,
    )


def _fit_all(window: list[Transaction], config: KdaConfig):
    """Fit the three detectors once on the window; returns what the per-
    transaction flag readers need."""
    six, _ = encode_window(window, SIX_DIM, config.scaling)
    three, _ = encode_window(window, THREE_DIM, config.scaling)
    kcfg = dataclasses.replace(
        config.kmeans, seed=_derive_seed(config.seed, window[-1].id)
    )
    km = kmeans_fit(six, kcfg)
    dm = dbscan_lof_fit(six, config.dbscan)
    dend = agglo_fit(three, config.agglomerative)
    labels = cut(dend, min(config.agglomerative.cut_clusters, len(three)))
    return km, kcfg, dm, labels


def _verdict_for(tx_id, km, kcfg, dm, labels, n, config: KdaConfig) -> KdaVerdict:
    vk = kmeans_flag(km, tx_id, kcfg)
    vd = dbscan_lof_flag(dm, tx_id, config.dbscan)
    va = agglo_flag(labels, tx_id, config.agglomerative)
    nf = vote(vk.flag, vd.flag, va.flag)
    return KdaVerdict(
        transaction_id=tx_id, nk=vk.flag, nd=vd.flag, na=va.flag, nf=nf,
        action=_action_for(nf, config.policy),
        verdicts={"kmeans": vk, "dbscan": vd, "agglomerative": va},
        window_size=n,
    )


def kda_evaluate(window: list[Transaction], config: KdaConfig) -> KdaVerdict:
    """Score the newest transaction of an oldest-first window.

    Windows below min_history pass unconditionally with a warm-up marker:
    there is not enough history to call anything unusual yet.
    """
    if not window:
        raise ValueError("kda_evaluate requires a non-empty window")
    newest = window[-1]
    n = len(window)
    if n < config.min_history:
        return _warm_up_verdict(newest.id, n, config)
    km, kcfg, dm, labels = _fit_all(window, config)
    return _verdict_for(newest.id, km, kcfg, dm, labels, n, config)


def kda_evaluate_offline(window: list[Transaction], config: KdaConfig) -> list[KdaVerdict]:
    """Score every transaction of the window against models fitted once.

    Unlike the streaming path, which refits per arrival, this fits each
    detector a single time on the full window and reads off one flag per
    member transaction. The warm-up rule applies to the window as a whole.
    """
    if not window:
        raise ValueError("kda_evaluate_offline requires a non-empty window")
    n = len(window)
    if n < config.min_history:
        return [_warm_up_verdict(tx.id, n, config) for tx in window]
    km, kcfg, dm, labels = _fit_all(window, config)
    return [_verdict_for(tx.id, km, kcfg, dm, labels, n, config) for tx in window]
