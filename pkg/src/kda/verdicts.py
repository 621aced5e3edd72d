"""Verdict records shared by the three detectors and the voting ensemble."""

from __future__ import annotations

from dataclasses import dataclass, field

ALGORITHMS = ("kmeans", "dbscan", "agglomerative")
ACTIONS = ("pass", "alert", "stop")


@dataclass(frozen=True)
class AlgorithmVerdict:
    """One detector's per-transaction call, with its supporting evidence."""

    algorithm: str
    flag: bool
    evidence: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"algorithm": self.algorithm, "flag": self.flag, "evidence": dict(self.evidence)}

    @classmethod
    def from_dict(cls, d: dict) -> "AlgorithmVerdict":
        return cls(algorithm=d["algorithm"], flag=bool(d["flag"]), evidence=dict(d.get("evidence", {})))


@dataclass(frozen=True)
class KdaVerdict:
    """Fused 2-of-3 decision for one transaction.

    nk/nd/na are the k-means, DBSCAN+LOF, and agglomerative suspicion flags;
    nf is the majority vote. Warm-up verdicts (window shorter than the
    configured minimum history) always pass with all flags off.
    """

    transaction_id: int
    nk: bool
    nd: bool
    na: bool
    nf: bool
    action: str
    verdicts: dict[str, AlgorithmVerdict]
    window_size: int
    warm_up: bool = False

    def to_dict(self) -> dict:
        return {
            "transaction_id": self.transaction_id,
            "nK": self.nk,
            "nD": self.nd,
            "nA": self.na,
            "nF": self.nf,
            "action": self.action,
            "window_size": self.window_size,
            "warm_up": self.warm_up,
            "verdicts": {name: v.to_dict() for name, v in self.verdicts.items()},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "KdaVerdict":
        return cls(
            transaction_id=d["transaction_id"],
            nk=bool(d["nK"]),
            nd=bool(d["nD"]),
            na=bool(d["nA"]),
            nf=bool(d["nF"]),
            action=d["action"],
            verdicts={name: AlgorithmVerdict.from_dict(v) for name, v in d.get("verdicts", {}).items()},
            window_size=d["window_size"],
            warm_up=bool(d.get("warm_up", False)),
        )
