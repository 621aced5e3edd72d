"""Embedded store: transactions, per-detector results, verdicts, alerts."""

from datetime import date, datetime, timedelta, timezone

import numpy as np
import pytest

from kda.ensemble import KdaConfig, kda_evaluate, select_window
from kda.repository import (
    AlertAlreadyDecided,
    DuplicateTransaction,
    Repository,
    ResultsRow,
    UnknownAlert,
)
from kda.simgen import generate_history, random_profile
from kda.txmodel import Transaction
from kda.verdicts import AlgorithmVerdict, KdaVerdict


def tx(i, d, pan="P1", amount=10.0):
    return Transaction(
        id=i, pr_code=0, pan=pan, term_id="T", merchant_id="M",
        pos_condition=0, affective_amount=amount, trx_date=d, trx_time=9,
    )


def verdict(tx_id, nf=True):
    flags = {"kmeans": nf, "dbscan": nf, "agglomerative": False}
    return KdaVerdict(
        transaction_id=tx_id,
        nk=flags["kmeans"], nd=flags["dbscan"], na=flags["agglomerative"],
        nf=nf, action="alert" if nf else "pass",
        verdicts={
            name: AlgorithmVerdict(algorithm=name, flag=f, evidence={"x": 1})
            for name, f in flags.items()
        },
        window_size=20,
    )


@pytest.fixture
def repo():
    with Repository(":memory:") as r:
        yield r


class TestTransactions:
    def test_append_and_get(self, repo):
        t = tx(1, date(2025, 1, 1))
        repo.append_transaction(t)
        assert repo.get_transaction(1) == t
        assert repo.has_transaction(1)
        assert not repo.has_transaction(2)
        assert repo.get_transaction(2) is None

    def test_duplicate_rejected(self, repo):
        repo.append_transaction(tx(1, date(2025, 1, 1)))
        with pytest.raises(DuplicateTransaction):
            repo.append_transaction(tx(1, date(2025, 1, 2)))

    def test_append_many_and_counts(self, repo):
        n = repo.append_many([tx(i, date(2025, 1, 1), pan=f"P{i % 2}") for i in range(1, 7)])
        assert n == 6
        assert repo.count_transactions() == 6
        assert repo.count_transactions("P0") == 3
        assert repo.max_transaction_id() == 6
        assert repo.list_pans() == ["P0", "P1"]

    def test_newest_transaction(self, repo):
        repo.append_many([tx(1, date(2025, 1, 1)), tx(2, date(2025, 1, 5))])
        assert repo.newest_transaction("P1").id == 2
        assert repo.newest_transaction("P1", up_to_id=1).id == 1
        assert repo.newest_transaction("nope") is None


class TestFetchWindow:
    def test_window_rule(self, repo):
        start = date(2025, 1, 1)
        repo.append_many([tx(i, start + timedelta(days=i - 1)) for i in range(1, 121)])
        window = repo.fetch_window("P1", KdaConfig(), as_of=start + timedelta(days=119))
        assert len(window) == 91
        assert window[0].id == 30
        assert window[-1].id == 120

    def test_matches_in_memory_rule(self, repo):
        # storage filtering and select_window are the same contract
        prof = random_profile("P1", np.random.default_rng(13))
        history = generate_history(prof, 70, seed=4)
        repo.append_many(history)
        cfg = KdaConfig(window_size=40)
        newest = repo.newest_transaction("P1")
        stored = repo.fetch_window("P1", cfg, as_of=newest.trx_date)
        assert stored == select_window(history, cfg)

    def test_up_to_id(self, repo):
        d = date(2025, 2, 1)
        repo.append_many([tx(i, d) for i in range(1, 11)])
        window = repo.fetch_window("P1", KdaConfig(), as_of=d, up_to_id=4)
        assert [t.id for t in window] == [1, 2, 3, 4]

    def test_pan_isolation(self, repo):
        d = date(2025, 2, 1)
        repo.append_many([tx(1, d, pan="A"), tx(2, d, pan="B")])
        assert [t.id for t in repo.fetch_window("A", KdaConfig(), as_of=d)] == [1]


class TestResults:
    def test_roundtrip(self, repo):
        run_at = datetime(2025, 5, 1, 12, tzinfo=timezone.utc)
        rows = [
            ResultsRow(algorithm="kmeans", transaction_id=7, run_at=run_at,
                       flag=True, evidence={"cluster": 3, "cluster_size": 1}),
            ResultsRow(algorithm="dbscan", transaction_id=7, run_at=run_at,
                       flag=False, evidence={"lof": 1.01}),
        ]
        repo.store_results(rows)
        got = repo.results_for("kmeans", 7)
        assert len(got) == 1
        assert got[0].flag is True
        assert got[0].evidence == {"cluster": 3, "cluster_size": 1}
        assert repo.results_for("dbscan", 7)[0].evidence == {"lof": 1.01}
        assert repo.results_for("agglomerative", 7) == []

    def test_rerun_replaces(self, repo):
        run_at = datetime(2025, 5, 1, 12, tzinfo=timezone.utc)
        row = ResultsRow(algorithm="kmeans", transaction_id=1, run_at=run_at,
                         flag=False, evidence={})
        repo.store_results([row])
        repo.store_results([ResultsRow(algorithm="kmeans", transaction_id=1,
                                       run_at=run_at, flag=True, evidence={})])
        got = repo.results_for("kmeans", 1)
        assert len(got) == 1
        assert got[0].flag is True

    def test_unknown_algorithm_rejected(self, repo):
        with pytest.raises(ValueError):
            repo.store_results([ResultsRow(algorithm="isolation_forest", transaction_id=1,
                                           run_at=datetime.now(timezone.utc),
                                           flag=False, evidence={})])


class TestVerdicts:
    def test_latest_wins(self, repo):
        t0 = datetime(2025, 5, 1, tzinfo=timezone.utc)
        repo.store_verdict("P1", verdict(3, nf=False), t0)
        repo.store_verdict("P1", verdict(3, nf=True), t0 + timedelta(hours=1))
        got = repo.latest_verdict(3)
        assert got.nf is True
        assert got.verdicts["kmeans"].flag is True

    def test_missing(self, repo):
        assert repo.latest_verdict(99) is None


class TestAlerts:
    def test_lifecycle(self, repo):
        rec = repo.open_alert("P1", verdict(5))
        assert rec.status == "open"
        assert rec.transaction_id == 5
        assert repo.get_alert(rec.alert_id).status == "open"
        assert [a.alert_id for a in repo.list_alerts("open")] == [rec.alert_id]

        decided = repo.decide_alert(rec.alert_id, "blocked", "inspector-7")
        assert decided.status == "blocked"
        assert decided.decided_by == "inspector-7"
        assert decided.decided_at is not None
        assert repo.list_alerts("open") == []
        assert repo.list_alerts("blocked")[0].alert_id == rec.alert_id

    def test_unflagged_verdict_rejected(self, repo):
        with pytest.raises(ValueError):
            repo.open_alert("P1", verdict(5, nf=False))

    def test_double_decision(self, repo):
        rec = repo.open_alert("P1", verdict(5))
        repo.decide_alert(rec.alert_id, "allowed", "a")
        with pytest.raises(AlertAlreadyDecided):
            repo.decide_alert(rec.alert_id, "blocked", "b")

    def test_unknown_alert(self, repo):
        with pytest.raises(UnknownAlert):
            repo.get_alert(404)
        with pytest.raises(UnknownAlert):
            repo.decide_alert(404, "allowed", "a")

    def test_bad_filters(self, repo):
        with pytest.raises(ValueError):
            repo.list_alerts("snoozed")
        rec = repo.open_alert("P1", verdict(5))
        with pytest.raises(ValueError):
            repo.decide_alert(rec.alert_id, "ignored", "a")


class TestDurability:
    def test_survives_reopen(self, tmp_path):
        path = str(tmp_path / "store.db")
        with Repository(path) as repo:
            repo.append_transaction(tx(1, date(2025, 1, 1)))
            rec = repo.open_alert("P1", verdict(1))
            repo.store_verdict("P1", verdict(1))
        with Repository(path) as repo:
            assert repo.get_transaction(1).pan == "P1"
            assert repo.get_alert(rec.alert_id).status == "open"
            assert repo.latest_verdict(1).nf is True
            # and the store still accepts writes after reopen
            repo.decide_alert(rec.alert_id, "allowed", "night-shift")
        with Repository(path) as repo:
            assert repo.get_alert(rec.alert_id).status == "allowed"

    def test_scoring_pipeline_persists(self, tmp_path):
        path = str(tmp_path / "store.db")
        prof = random_profile("P1", np.random.default_rng(2))
        history = generate_history(prof, 30, seed=9)
        cfg = KdaConfig()
        with Repository(path) as repo:
            repo.append_many(history)
            window = repo.fetch_window("P1", cfg, as_of=history[-1].trx_date)
            v = kda_evaluate(window, cfg)
            repo.store_verdict("P1", v)
        with Repository(path) as repo:
            assert repo.latest_verdict(history[-1].id) == v
