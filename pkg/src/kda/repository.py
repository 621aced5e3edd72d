"""Embedded single-file store for transactions, per-detector results,
fused verdicts, and the alert lifecycle.

Backed by sqlite: durable across restarts, zero external processes. The
three detector result tables are physically separate so each algorithm's
output can be inspected on its own. All access is serialized through one
lock; per-customer write ordering is semantic, and windows are small enough
that a single writer is never the bottleneck.
"""

from __future__ import annotations

import json
import sqlite3
import threading
from dataclasses import dataclass
from datetime import date, datetime, timedelta, timezone

from .ensemble import KdaConfig
from .txmodel import Transaction
from .verdicts import ALGORITHMS, KdaVerdict

ALERT_STATUSES = ("open", "allowed", "blocked")
DECISIONS = ("allowed", "blocked")


class DuplicateTransaction(ValueError):
    """Transaction id already stored; the store is unchanged."""


class UnknownAlert(KeyError):
    """No alert with that id."""


class AlertAlreadyDecided(ValueError):
    """The alert already reached a terminal status."""


@dataclass(frozen=True)
class ResultsRow:
    """One detector's stored output for one transaction at one run."""

    algorithm: str
    transaction_id: int
    run_at: datetime
    flag: bool
    evidence: dict

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm: {self.algorithm!r}")


@dataclass(frozen=True)
class AlertRecord:
    alert_id: int
    transaction_id: int
    pan: str
    created_at: datetime
    verdict: KdaVerdict
    status: str
    decided_by: str | None = None
    decided_at: datetime | None = None

    def to_dict(self) -> dict:
        return {
            "alert_id": self.alert_id,
            "transaction_id": self.transaction_id,
            "pan": self.pan,
            "created_at": self.created_at.isoformat(),
            "verdict": self.verdict.to_dict(),
            "status": self.status,
            "decided_by": self.decided_by,
            "decided_at": self.decided_at.isoformat() if self.decided_at else None,
        }


def _utcnow() -> datetime:
    return datetime.now(timezone.utc)


_SCHEMA = """
CREATE TABLE IF NOT EXISTS transactions (
    id            INTEGER PRIMARY KEY,
    pan           TEXT    NOT NULL,
    pr_code       INTEGER NOT NULL,
    term_id       TEXT    NOT NULL,
    merchant_id   TEXT    NOT NULL,
    pos_condition INTEGER NOT NULL,
    amount        REAL    NOT NULL,
    trx_date      TEXT    NOT NULL,
    trx_time      INTEGER NOT NULL
);
CREATE INDEX IF NOT EXISTS ix_transactions_pan_id ON transactions (pan, id);
CREATE INDEX IF NOT EXISTS ix_transactions_pan_date ON transactions (pan, trx_date);

CREATE TABLE IF NOT EXISTS results_kmeans (
    transaction_id INTEGER NOT NULL,
    run_at         TEXT    NOT NULL,
    flag           INTEGER NOT NULL,
    evidence       TEXT    NOT NULL,
    UNIQUE (transaction_id, run_at)
);
CREATE TABLE IF NOT EXISTS results_dbscan (
    transaction_id INTEGER NOT NULL,
    run_at         TEXT    NOT NULL,
    flag           INTEGER NOT NULL,
    evidence       TEXT    NOT NULL,
    UNIQUE (transaction_id, run_at)
);
CREATE TABLE IF NOT EXISTS results_agglomerative (
    transaction_id INTEGER NOT NULL,
    run_at         TEXT    NOT NULL,
    flag           INTEGER NOT NULL,
    evidence       TEXT    NOT NULL,
    UNIQUE (transaction_id, run_at)
);

CREATE TABLE IF NOT EXISTS verdicts (
    transaction_id INTEGER NOT NULL,
    pan            TEXT    NOT NULL,
    run_at         TEXT    NOT NULL,
    verdict        TEXT    NOT NULL,
    UNIQUE (transaction_id, run_at)
);
CREATE INDEX IF NOT EXISTS ix_verdicts_tx ON verdicts (transaction_id, run_at);

CREATE TABLE IF NOT EXISTS alerts (
    id             INTEGER PRIMARY KEY AUTOINCREMENT,
    transaction_id INTEGER NOT NULL,
    pan            TEXT    NOT NULL,
    created_at     TEXT    NOT NULL,
    verdict        TEXT    NOT NULL,
    status         TEXT    NOT NULL DEFAULT 'open',
    decided_by     TEXT,
    decided_at     TEXT
);
"""

# results tables are fixed identifiers, never user input
_RESULTS_TABLE = {a: f"results_{a}" for a in ALGORITHMS}


class Repository:
    """sqlite-backed store. Pass ':memory:' for an ephemeral instance."""

    def __init__(self, path: str = ":memory:"):
        self.path = path
        self._conn = sqlite3.connect(path, check_same_thread=False)
        self._conn.execute("PRAGMA journal_mode=WAL")
        self._lock = threading.RLock()
        with self._lock, self._conn:
            self._conn.executescript(_SCHEMA)

    def close(self) -> None:
        with self._lock:
            self._conn.close()

    def __enter__(self) -> "Repository":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    # -- transactions ------------------------------------------------------

    def append_transaction(self, tx: Transaction) -> None:
        with self._lock:
            try:
                with self._conn:
                    self._conn.execute(
                        "INSERT INTO transactions"
                        " (id, pan, pr_code, term_id, merchant_id, pos_condition,"
                        "  amount, trx_date, trx_time)"
                        " VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?)",
                        (
                            tx.id, tx.pan, tx.pr_code, tx.term_id, tx.merchant_id,
                            tx.pos_condition, tx.affective_amount,
                            tx.trx_date.isoformat(), tx.trx_time,
                        ),
                    )
            except sqlite3.IntegrityError:
                raise DuplicateTransaction(f"transaction {tx.id} already stored") from None

    def append_many(self, txs: list[Transaction]) -> int:
        for tx in txs:
            self.append_transaction(tx)
        return len(txs)

    @staticmethod
    def _tx_from_row(row) -> Transaction:
        return Transaction(
            id=row[0], pan=row[1], pr_code=row[2], term_id=row[3], merchant_id=row[4],
            pos_condition=row[5], affective_amount=row[6],
            trx_date=date.fromisoformat(row[7]), trx_time=row[8],
        )

    _TX_COLS = "id, pan, pr_code, term_id, merchant_id, pos_condition, amount, trx_date, trx_time"

    def get_transaction(self, tx_id: int) -> Transaction | None:
        with self._lock:
            row = self._conn.execute(
                f"SELECT {self._TX_COLS} FROM transactions WHERE id = ?", (tx_id,)
            ).fetchone()
        return self._tx_from_row(row) if row else None

    def has_transaction(self, tx_id: int) -> bool:
        return self.get_transaction(tx_id) is not None

    def max_transaction_id(self) -> int:
        with self._lock:
            (mx,) = self._conn.execute("SELECT COALESCE(MAX(id), 0) FROM transactions").fetchone()
        return int(mx)

    def count_transactions(self, pan: str | None = None) -> int:
        with self._lock:
            if pan is None:
                (n,) = self._conn.execute("SELECT COUNT(*) FROM transactions").fetchone()
            else:
                (n,) = self._conn.execute(
                    "SELECT COUNT(*) FROM transactions WHERE pan = ?", (pan,)
                ).fetchone()
        return int(n)

    def list_pans(self) -> list[str]:
        with self._lock:
            rows = self._conn.execute(
                "SELECT DISTINCT pan FROM transactions ORDER BY pan"
            ).fetchall()
        return [r[0] for r in rows]

    def newest_transaction(self, pan: str, up_to_id: int | None = None) -> Transaction | None:
        """The pan's highest-id transaction, optionally restricted to ids <= up_to_id."""
        sql = f"SELECT {self._TX_COLS} FROM transactions WHERE pan = ?"
        params: list = [pan]
        if up_to_id is not None:
            sql += " AND id <= ?"
            params.append(up_to_id)
        sql += " ORDER BY id DESC LIMIT 1"
        with self._lock:
            row = self._conn.execute(sql, params).fetchone()
        return self._tx_from_row(row) if row else None

    def fetch_window(
        self,
        pan: str,
        config: KdaConfig,
        as_of: date,
        up_to_id: int | None = None,
    ) -> list[Transaction]:
        """The pan's most recent <= window_size transactions dated within
        window_period_days of as_of (inclusive), oldest first.

        up_to_id restricts to ids <= that value, which reconstructs the exact
        window a past evaluation saw.
        """
        earliest = (as_of - timedelta(days=config.window_period_days)).isoformat()
        sql = (
            f"SELECT {self._TX_COLS} FROM transactions"
            " WHERE pan = ? AND trx_date >= ? AND trx_date <= ?"
        )
        params: list = [pan, earliest, as_of.isoformat()]
        if up_to_id is not None:
            sql += " AND id <= ?"
            params.append(up_to_id)
        sql += " ORDER BY id DESC LIMIT ?"
        params.append(config.window_size)
        with self._lock:
            rows = self._conn.execute(sql, params).fetchall()
        return [self._tx_from_row(r) for r in reversed(rows)]

    # -- detector results and verdicts -------------------------------------

    def store_results(self, rows: list[ResultsRow]) -> None:
        for r in rows:
            if r.algorithm not in _RESULTS_TABLE:
                raise ValueError(f"unknown algorithm: {r.algorithm!r}")
        with self._lock, self._conn:
            for r in rows:
                self._conn.execute(
                    f"INSERT OR REPLACE INTO {_RESULTS_TABLE[r.algorithm]}"
                    " (transaction_id, run_at, flag, evidence) VALUES (?, ?, ?, ?)",
                    (r.transaction_id, r.run_at.isoformat(), int(r.flag),
                     json.dumps(r.evidence, sort_keys=True)),
                )

    def results_for(self, algorithm: str, tx_id: int) -> list[ResultsRow]:
        if algorithm not in _RESULTS_TABLE:
            raise ValueError(f"unknown algorithm: {algorithm!r}")
        table = _RESULTS_TABLE[algorithm]
        with self._lock:
            rows = self._conn.execute(
                f"SELECT transaction_id, run_at, flag, evidence FROM {table}"
                " WHERE transaction_id = ? ORDER BY run_at",
                (tx_id,),
            ).fetchall()
        return [
            ResultsRow(
                algorithm=algorithm, transaction_id=r[0],
                run_at=datetime.fromisoformat(r[1]), flag=bool(r[2]),
                evidence=json.loads(r[3]),
            )
            for r in rows
        ]

    def store_verdict(self, pan: str, verdict: KdaVerdict, run_at: datetime | None = None) -> None:
        run_at = run_at or _utcnow()
        with self._lock, self._conn:
            self._conn.execute(
                "INSERT OR REPLACE INTO verdicts (transaction_id, pan, run_at, verdict)"
                " VALUES (?, ?, ?, ?)",
                (verdict.transaction_id, pan, run_at.isoformat(),
                 json.dumps(verdict.to_dict(), sort_keys=True)),
            )

    def latest_verdict(self, tx_id: int) -> KdaVerdict | None:
        with self._lock:
            row = self._conn.execute(
                "SELECT verdict FROM verdicts WHERE transaction_id = ?"
                " ORDER BY run_at DESC LIMIT 1",
                (tx_id,),
            ).fetchone()
        return KdaVerdict.from_dict(json.loads(row[0])) if row else None

    # -- alerts -------------------------------------------------------------

    @staticmethod
    def _alert_from_row(row) -> AlertRecord:
        return AlertRecord(
            alert_id=row[0], transaction_id=row[1], pan=row[2],
            created_at=datetime.fromisoformat(row[3]),
            verdict=KdaVerdict.from_dict(json.loads(row[4])),
            status=row[5], decided_by=row[6],
            decided_at=datetime.fromisoformat(row[7]) if row[7] else None,
        )

    _ALERT_COLS = "id, transaction_id, pan, created_at, verdict, status, decided_by, decided_at"

    def open_alert(self, pan: str, verdict: KdaVerdict, created_at: datetime | None = None) -> AlertRecord:
        """Create an open alert for a suspicious verdict; rejects nF=0."""
        if not verdict.nf:
            raise ValueError("alerts are only opened for suspicious (nF=1) verdicts")
        created_at = created_at or _utcnow()
        with self._lock, self._conn:
            cur = self._conn.execute(
                "INSERT INTO alerts (transaction_id, pan, created_at, verdict, status)"
                " VALUES (?, ?, ?, ?, 'open')",
                (verdict.transaction_id, pan, created_at.isoformat(),
                 json.dumps(verdict.to_dict(), sort_keys=True)),
            )
            alert_id = cur.lastrowid
        return self.get_alert(alert_id)

    def get_alert(self, alert_id: int) -> AlertRecord:
        with self._lock:
            row = self._conn.execute(
                f"SELECT {self._ALERT_COLS} FROM alerts WHERE id = ?", (alert_id,)
            ).fetchone()
        if row is None:
            raise UnknownAlert(alert_id)
        return self._alert_from_row(row)

    def list_alerts(self, status: str | None = None) -> list[AlertRecord]:
        if status is not None and status not in ALERT_STATUSES:
            raise ValueError(f"status must be one of {ALERT_STATUSES}")
        with self._lock:
            if status is None:
                rows = self._conn.execute(
                    f"SELECT {self._ALERT_COLS} FROM alerts ORDER BY id"
                ).fetchall()
            else:
                rows = self._conn.execute(
                    f"SELECT {self._ALERT_COLS} FROM alerts WHERE status = ? ORDER BY id",
                    (status,),
                ).fetchall()
        return [self._alert_from_row(r) for r in rows]

    def decide_alert(
        self,
        alert_id: int,
        decision: str,
        inspector: str,
        decided_at: datetime | None = None,
    ) -> AlertRecord:
        """Transition open -> allowed|blocked; terminal states are immutable.

        The transition is a compare-and-set on status, so concurrent deciders
        cannot both win.
        """
        if decision not in DECISIONS:
            raise ValueError(f"decision must be one of {DECISIONS}")
        decided_at = decided_at or _utcnow()
        with self._lock, self._conn:
            cur = self._conn.execute(
                "UPDATE alerts SET status = ?, decided_by = ?, decided_at = ?"
                " WHERE id = ? AND status = 'open'",
                (decision, inspector, decided_at.isoformat(), alert_id),
            )
            if cur.rowcount == 0:
                # either missing or already terminal; look to tell which
                existing = self._conn.execute(
                    "SELECT status FROM alerts WHERE id = ?", (alert_id,)
                ).fetchone()
                if existing is None:
                    raise UnknownAlert(alert_id)
                raise AlertAlreadyDecided(
                    f"alert {alert_id} already decided: {existing[0]}"
                )
        return self.get_alert(alert_id)
