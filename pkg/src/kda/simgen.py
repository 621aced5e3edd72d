"""Synthetic customer generator, fraud injector, and evaluation metrics.

Real card data is confidential, so the benchmark stands on seeded synthetic
populations: each customer gets a behavioral profile (a few habitual
merchants and terminals, a narrow hour band, log-normal amounts, a device
mix, a spending cadence) and histories are drawn from it. Fraud injection
appends transactions that break one or all of those habits.

Metric naming is deliberately inverted relative to textbook usage: TPR =
normal detected normal, TNR = normal detected abnormal, FPR = abnormal
detected normal, FNR = abnormal detected abnormal. Standard aliases
(detection rate, false-alarm rate) are emitted alongside so nobody has to
decode that convention.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import date, timedelta

import numpy as np

from .txmodel import Transaction
from .verdicts import KdaVerdict

FRAUD_KINDS = ("amount_spike", "novel_merchant", "odd_hour", "device_switch", "combined")

# pr_code stands in for the processing code of each purchasing group
GROUP_PR_CODE = {"retail": 0, "bill_payment": 50, "top_up": 57}

_DEFAULT_START = date(2025, 1, 1)


def _check_weights(name: str, weights: dict) -> None:
    if not weights:
        raise ValueError(f"{name} must be non-empty")
    if any(w <= 0 for w in weights.values()):
        raise ValueError(f"{name} weights must be positive")
    if not math.isclose(sum(weights.values()), 1.0, rel_tol=0, abs_tol=1e-9):
        raise ValueError(f"{name} weights must sum to 1")


@dataclass(frozen=True)
class CustomerProfile:
    """Habit model one synthetic customer is drawn from."""

    pan: str
    merchants: dict[str, float]
    terminals: dict[str, float]
    hours: dict[int, float]
    amount_mu: float
    amount_sigma: float
    devices: dict[int, float]
    monthly_cadence: float
    groups: dict[str, float] = field(
        default_factory=lambda: {"retail": 0.8, "bill_payment": 0.15, "top_up": 0.05}
    )

    def __post_init__(self):
        _check_weights("merchants", self.merchants)
        _check_weights("terminals", self.terminals)
        _check_weights("hours", self.hours)
        _check_weights("devices", self.devices)
        _check_weights("groups", self.groups)
        if any(not 0 <= h <= 23 for h in self.hours):
            raise ValueError("hours must be in [0, 23]")
        if self.amount_mu <= 0 or self.amount_sigma < 0:
            raise ValueError("amount_mu must be positive and amount_sigma non-negative")
        if self.monthly_cadence <= 0:
            raise ValueError("monthly_cadence must be positive")
        if any(g not in GROUP_PR_CODE for g in self.groups):
            raise ValueError("groups must be purchasing types")


@dataclass(frozen=True)
class FraudSpec:
    """What to inject: one habit-breaking axis or all of them combined."""

    kind: str
    count: int = 1
    seed: int = 0
    magnitude: float = 3.0

    def __post_init__(self):
        if self.kind not in FRAUD_KINDS:
            raise ValueError(f"kind must be one of {FRAUD_KINDS}")
        if self.count < 1:
            raise ValueError("count must be >= 1")
        if self.magnitude <= 0:
            raise ValueError("magnitude must be positive")


def random_profile(pan: str, rng: np.random.Generator) -> CustomerProfile:
    """Draw a plausible customer: few merchants, a tight hour band, a
    cadence that keeps ~100 transactions inside a 90-day period."""

    def weighted(keys) -> dict:
        w = rng.uniform(0.5, 1.5, size=len(keys))
        w /= w.sum()
        return {k: float(v) for k, v in zip(keys, w)}

    n_m = int(rng.integers(2, 5))
    merchants = [f"M{int(v):06d}" for v in rng.choice(1_000_000, size=n_m, replace=False)]
    n_t = int(rng.integers(1, 4))
    terminals = [f"T{int(v):05d}" for v in rng.choice(100_000, size=n_t, replace=False)]
    center = int(rng.integers(8, 21))
    n_h = int(rng.integers(2, 5))
    hours = [(center + d) % 24 for d in range(n_h)]
    n_d = int(rng.integers(1, 3))
    devices = [int(v) for v in rng.choice(6, size=n_d, replace=False)]
    return CustomerProfile(
        pan=pan,
        merchants=weighted(merchants),
        terminals=weighted(terminals),
        hours=weighted(hours),
        amount_mu=float(np.exp(rng.uniform(np.log(2e4), np.log(5e5)))),
        amount_sigma=float(rng.uniform(0.3, 0.7)),
        devices=weighted(devices),
        monthly_cadence=float(rng.uniform(35.0, 50.0)),
    )


def _pick(rng: np.random.Generator, weights: dict, size: int) -> list:
    keys = list(weights)
    idx = rng.choice(len(keys), size=size, p=np.array([weights[k] for k in keys]))
    return [keys[i] for i in idx]


def generate_history(
    profile: CustomerProfile,
    n: int,
    seed,
    start_id: int = 1,
    start_date: date = _DEFAULT_START,
) -> list[Transaction]:
    """n habitual transactions with sequential ids, oldest first.

    Inter-transaction gaps are uniform within +-50% of the cadence's mean
    gap, so the span of n transactions concentrates near n x 30/cadence
    days. Deterministic per (profile, n, seed).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    mean_gap = 30.0 / profile.monthly_cadence
    gaps = rng.uniform(0.5, 1.5, size=n - 1) * mean_gap if n > 1 else np.zeros(0)
    offsets = np.concatenate([[0.0], np.cumsum(gaps)])
    merchants = _pick(rng, profile.merchants, n)
    terminals = _pick(rng, profile.terminals, n)
    hours = _pick(rng, profile.hours, n)
    devices = _pick(rng, profile.devices, n)
    groups = _pick(rng, profile.groups, n)
    amounts = profile.amount_mu * np.exp(profile.amount_sigma * rng.standard_normal(n))
    out = []
    for i in range(n):
        out.append(
            Transaction(
                id=start_id + i,
                pr_code=GROUP_PR_CODE[groups[i]],
                pan=profile.pan,
                term_id=terminals[i],
                merchant_id=merchants[i],
                pos_condition=int(devices[i]),
                affective_amount=float(round(amounts[i], 2)),
                trx_date=start_date + timedelta(days=int(offsets[i])),
                trx_time=int(hours[i]),
            )
        )
    return out


def inject_fraud(history: list[Transaction], spec: FraudSpec) -> tuple[list[Transaction], set[int]]:
    """Append spec.count anomalous transactions after the history.

    Axes not broken by the chosen kind are resampled from the history
    itself, so the injected transaction looks habitual except where it
    should not. Returns (history + injected, injected id set).
    """
    if not history:
        raise ValueError("inject_fraud requires a non-empty history")
    rng = np.random.default_rng(spec.seed)
    amounts = np.array([t.affective_amount for t in history])
    p99 = float(np.quantile(amounts, 0.99))
    known_merchants = {t.merchant_id for t in history}
    known_hours = {t.trx_time for t in history}
    known_devices = {t.pos_condition for t in history}
    odd_hours = sorted(set(range(24)) - known_hours)
    wants_odd_hour = spec.kind in ("odd_hour", "combined")
    if wants_odd_hour and not odd_hours:
        raise ValueError("history covers all 24 hours; no odd hour exists to inject")
    free_devices = sorted(set(range(100)) - known_devices)
    last = history[-1]
    next_id = max(t.id for t in history) + 1
    # ascending day offsets keep dates non-decreasing in id order, so no
    # injected transaction ever post-dates a later one's window
    day_offsets = np.sort(rng.integers(0, 2, size=spec.count))
    injected: list[Transaction] = []
    for i in range(spec.count):
        template = history[int(rng.integers(0, len(history)))]
        amount = float(template.affective_amount)
        merchant = str(history[int(rng.integers(0, len(history)))].merchant_id)
        hour = int(history[int(rng.integers(0, len(history)))].trx_time)
        device = int(history[int(rng.integers(0, len(history)))].pos_condition)
        if spec.kind in ("amount_spike", "combined"):
            amount = round(p99 * spec.magnitude * (1.0 + float(rng.uniform(0.0, 0.25))), 2)
        if spec.kind in ("novel_merchant", "combined"):
            merchant = f"M-ANOM-{int(rng.integers(0, 1_000_000)):06d}"
            while merchant in known_merchants:
                merchant = f"M-ANOM-{int(rng.integers(0, 1_000_000)):06d}"
        if wants_odd_hour:
            hour = int(odd_hours[int(rng.integers(0, len(odd_hours)))])
        if spec.kind in ("device_switch", "combined"):
            device = int(free_devices[int(rng.integers(0, len(free_devices)))])
        injected.append(
            Transaction(
                id=next_id + i,
                pr_code=template.pr_code,
                pan=last.pan,
                term_id=template.term_id,
                merchant_id=merchant,
                pos_condition=device,
                affective_amount=amount,
                trx_date=last.trx_date + timedelta(days=int(day_offsets[i])),
                trx_time=hour,
            )
        )
    return history + injected, {t.id for t in injected}


MODEL_KEYS = ("kmeans", "dbscan", "agglomerative", "kda")

_RATE_SEMANTICS = {
    "convention": "TPR/TNR read against the normal class, FPR/FNR against the abnormal class; standard_aliases_pct carries the textbook names",
    "TPR": "normal transactions detected normal / all normals",
    "TNR": "normal transactions detected abnormal / all normals (standard false-alarm rate)",
    "FPR": "abnormal transactions detected normal / all abnormals (standard miss rate)",
    "FNR": "abnormal transactions detected abnormal / all abnormals (standard detection rate)",
}


@dataclass(frozen=True)
class EvaluationReport:
    """Pooled confusion counts and rates for the three detectors and the vote."""

    totals: dict
    models: dict[str, dict]

    def to_dict(self) -> dict:
        return {
            "totals": dict(self.totals),
            "models": {k: dict(v) for k, v in self.models.items()},
            "rate_semantics": dict(_RATE_SEMANTICS),
        }

    def render_text(self) -> str:
        header = (
            f"{'model':<14} {'TPR%':>8} {'TNR%':>8} {'FPR%':>8} {'FNR%':>8} {'flagged':>8}"
        )
        lines = [
            f"normals={self.totals['normal']} abnormals={self.totals['abnormal']} "
            f"evaluated={self.totals['evaluated']}",
            header,
            "-" * len(header),
        ]
        for key in MODEL_KEYS:
            m = self.models[key]
            rates = m["rates_pct"]

            def cell(name: str) -> str:
                v = rates.get(name)
                return f"{v:>8.2f}" if v is not None else f"{'-':>8}"

            lines.append(
                f"{key:<14} {cell('TPR')} {cell('TNR')} {cell('FPR')} {cell('FNR')} "
                f"{m['flagged_total']:>8}"
            )
        return "\n".join(lines)


def compute_detection_metrics(
    fraud_ids: set[int],
    verdicts: list[KdaVerdict],
    known_ids: set[int] | None = None,
) -> EvaluationReport:
    """Pool verdicts into per-model confusion counts against ground truth.

    Every verdict's transaction falls in exactly one class: abnormal when
    its id is in fraud_ids, normal otherwise. Rates are percentages of the
    class totals, absent (None) when a class is empty.
    """
    seen: set[int] = set()
    for v in verdicts:
        if v.transaction_id in seen:
            raise ValueError(f"duplicate verdict for transaction {v.transaction_id}")
        if known_ids is not None and v.transaction_id not in known_ids:
            raise ValueError(f"verdict for unknown transaction {v.transaction_id}")
        seen.add(v.transaction_id)
    n_abnormal = sum(1 for v in verdicts if v.transaction_id in fraud_ids)
    n_normal = len(verdicts) - n_abnormal
    models: dict[str, dict] = {}
    flag_of = {
        "kmeans": lambda v: v.nk,
        "dbscan": lambda v: v.nd,
        "agglomerative": lambda v: v.na,
        "kda": lambda v: v.nf,
    }
    for key in MODEL_KEYS:
        get = flag_of[key]
        nn = na_ = an = aa = 0
        flagged: list[int] = []
        for v in verdicts:
            is_fraud = v.transaction_id in fraud_ids
            flag = bool(get(v))
            if flag:
                flagged.append(v.transaction_id)
            if is_fraud:
                aa += flag
                an += not flag
            else:
                na_ += flag
                nn += not flag

        def pct(count: int, total: int) -> float | None:
            return round(100.0 * count / total, 2) if total else None

        rates = {
            "TPR": pct(nn, n_normal),
            "TNR": pct(na_, n_normal),
            "FPR": pct(an, n_abnormal),
            "FNR": pct(aa, n_abnormal),
        }
        models[key] = {
            "counts": {
                "normal_detected_normal": nn,
                "normal_detected_abnormal": na_,
                "abnormal_detected_normal": an,
                "abnormal_detected_abnormal": aa,
            },
            "rates_pct": rates,
            "standard_aliases_pct": {
                "detection_rate": rates["FNR"],
                "miss_rate": rates["FPR"],
                "false_alarm_rate": rates["TNR"],
                "specificity": rates["TPR"],
            },
            "flagged_total": len(flagged),
            "flagged_ids": sorted(flagged),
        }
    totals = {"normal": n_normal, "abnormal": n_abnormal, "evaluated": len(verdicts)}
    return EvaluationReport(totals=totals, models=models)
