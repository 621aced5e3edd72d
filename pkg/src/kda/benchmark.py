"""Seeded benchmark harness: synthetic populations in, evaluation report out.

A descriptor fixes the population (customer count, history length, fraud
injection, mode) and a master seed; the run is then fully reproducible and
the serialized report is byte-identical across repeats. The report carries
the pooled confusion metrics for all four models, the flagged-id sets, and
a Davies-Bouldin sweep of the k-means cluster count.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as kernels
from .ensemble import KdaConfig, kda_evaluate, kda_evaluate_offline, select_window
from .kmeans import davies_bouldin, kmeans_fit
from .simgen import (
    EvaluationReport,
    FraudSpec,
    compute_detection_metrics,
    generate_history,
    inject_fraud,
    random_profile,
)
from .txmodel import SIX_DIM, FeatureVector, encode_window
from .verdicts import KdaVerdict

MODES = ("offline", "online")

DB_SWEEP_RANGE = range(2, 21)
DB_SWEEP_WINDOWS = 10


@dataclass(frozen=True)
class BenchmarkDescriptor:
    customers: int = 100
    transactions_per_customer: int = 100
    fraud: FraudSpec | None = field(default_factory=lambda: FraudSpec(kind="combined", count=16))
    mode: str = "offline"
    seed: int = 2025
    config: KdaConfig = field(default_factory=KdaConfig)

    def __post_init__(self):
        if self.customers < 1 or self.transactions_per_customer < 1:
            raise ValueError("customers and transactions_per_customer must be >= 1")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")

    def to_dict(self) -> dict:
        return {
            "customers": self.customers,
            "transactions_per_customer": self.transactions_per_customer,
            "fraud": dataclasses.asdict(self.fraud) if self.fraud else None,
            "mode": self.mode,
            "seed": self.seed,
            "config": self.config.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "BenchmarkDescriptor":
        d = dict(data)
        # an absent fraud key means the default injection; an explicit null
        # means a clean population
        fraud_given = "fraud" in d
        fraud = d.pop("fraud", None)
        config = d.pop("config", None)
        try:
            kwargs = dict(
                config=KdaConfig.from_dict(config) if config else KdaConfig(),
                **d,
            )
            if fraud_given:
                kwargs["fraud"] = FraudSpec(**fraud) if fraud else None
            return cls(**kwargs)
        except TypeError as exc:
            raise ValueError(f"bad benchmark descriptor: {exc}") from None


def _seed_int(*entropy: int) -> int:
    return int(np.random.SeedSequence(list(entropy)).generate_state(1, np.uint64)[0])


def simulate_population(desc: BenchmarkDescriptor, id_base: int = 0):
    """All customer histories with frauds injected; deterministic per seed.

    Returns (histories by customer, all fraud ids, all known ids). id_base
    shifts every id, for populating a store that already holds data.
    """
    root = np.random.SeedSequence(desc.seed)
    cust_kids = root.spawn(desc.customers)
    fraud_count = desc.fraud.count if desc.fraud else 0
    shares = np.zeros(desc.customers, dtype=np.int64)
    if desc.fraud:
        vic_rng = np.random.default_rng(
            np.random.SeedSequence([desc.seed, desc.fraud.seed, 1])
        )
        replace = fraud_count > desc.customers
        victims = vic_rng.choice(desc.customers, size=fraud_count, replace=replace)
        shares = np.bincount(victims, minlength=desc.customers)
    stride = desc.transactions_per_customer + fraud_count + 1
    histories: list[list] = []
    fraud_ids: set[int] = set()
    known_ids: set[int] = set()
    for i, kid in enumerate(cust_kids):
        prof_ss, hist_ss = kid.spawn(2)
        profile = random_profile(f"PAN{i:04d}", np.random.default_rng(prof_ss))
        history = generate_history(
            profile,
            desc.transactions_per_customer,
            hist_ss,
            start_id=id_base + i * stride + 1,
        )
        if shares[i]:
            spec = dataclasses.replace(
                desc.fraud,
                count=int(shares[i]),
                seed=_seed_int(desc.seed, desc.fraud.seed, i),
            )
            history, injected = inject_fraud(history, spec)
            fraud_ids |= injected
        known_ids |= {t.id for t in history}
        histories.append(history)
    return histories, fraud_ids, known_ids


def _evaluate_customer(history, desc: BenchmarkDescriptor) -> list[KdaVerdict]:
    if desc.mode == "offline":
        window = select_window(history, desc.config)
        return kda_evaluate_offline(window, desc.config)
    verdicts = []
    for j in range(len(history)):
        window = select_window(history[: j + 1], desc.config)
        verdicts.append(kda_evaluate(window, desc.config))
    return verdicts


def davies_bouldin_sweep(
    windows: list[list[FeatureVector]], config: KdaConfig, seed: int
) -> list[dict]:
    """Mean Davies-Bouldin per cluster count over the sample windows.

    Windows with fewer distinct points than the cluster count contribute
    nothing at that count; degenerate (non-finite) index values are also
    excluded, and the per-count entry records how many windows counted.
    """
    sweep = []
    for k in DB_SWEEP_RANGE:
        values = []
        for widx, vectors in enumerate(windows):
            kcfg = dataclasses.replace(
                config.kmeans, k=k, seed=_seed_int(seed, k, widx)
            )
            model = kmeans_fit(vectors, kcfg)
            if model.k < k:
                continue
            value = davies_bouldin(model, vectors)
            if np.isfinite(value):
                values.append(value)
        sweep.append(
            {
                "k": k,
                "davies_bouldin": round(float(np.mean(values)), 6) if values else None,
                "windows": len(values),
            }
        )
    return sweep


def run_benchmark(desc: BenchmarkDescriptor) -> dict:
    """Simulate, evaluate, and report. Reproducible per descriptor + seed."""
    histories, fraud_ids, known_ids = simulate_population(desc)
    all_verdicts: list[KdaVerdict] = []
    sweep_windows: list[list[FeatureVector]] = []
    for history in histories:
        all_verdicts.extend(_evaluate_customer(history, desc))
        if len(sweep_windows) < min(DB_SWEEP_WINDOWS, desc.customers):
            window = select_window(history, desc.config)
            vectors, _ = encode_window(window, SIX_DIM)
            sweep_windows.append(vectors)
    metrics = compute_detection_metrics(fraud_ids, all_verdicts, known_ids)
    sweep = davies_bouldin_sweep(sweep_windows, desc.config, desc.seed)
    return {
        "descriptor": desc.to_dict(),
        "backend": kernels.BACKEND,
        "metrics": metrics.to_dict(),
        "davies_bouldin_sweep": sweep,
        "injected_fraud_ids": sorted(fraud_ids),
    }


def report_json(report: dict) -> str:
    """Canonical serialization; byte-identical for identical runs."""
    return json.dumps(report, sort_keys=True, indent=2) + "\n"


def render_report(report: dict) -> str:
    """Aligned text rendering of the metrics table plus the sweep."""
    metrics = EvaluationReport(
        totals=report["metrics"]["totals"], models=report["metrics"]["models"]
    )
    lines = [
        f"mode={report['descriptor']['mode']} seed={report['descriptor']['seed']} "
        f"backend={report['backend']}",
        metrics.render_text(),
        "",
        f"{'k':>4} {'davies_bouldin':>16} {'windows':>8}",
    ]
    for entry in report["davies_bouldin_sweep"]:
        value = entry["davies_bouldin"]
        cell = f"{value:>16.6f}" if value is not None else f"{'-':>16}"
        lines.append(f"{entry['k']:>4} {cell} {entry['windows']:>8}")
    return "\n".join(lines) + "\n"
