"""Transaction records, eligibility filtering, and per-window feature encoding.

Raw card transactions come in with a full timestamp and settlement metadata;
the screening pipeline keeps only settled purchasing-type transactions,
splits the timestamp into a calendar date and an integer hour, and encodes
each window's categorical fields as numeric codes so the clustering
algorithms can consume them.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from datetime import date, datetime
from typing import Iterable, Iterator

import numpy as np

TXN_GROUPS = ("retail", "bill_payment", "top_up", "other")
ELIGIBLE_GROUPS = frozenset({"retail", "bill_payment", "top_up"})

SIX_DIM = "six_dim"
THREE_DIM = "three_dim"

# ingestion file header; BusinessDate carries the full ISO-8601 timestamp and
# is split into TrxDate/TrxTime by preprocess()
INGEST_COLUMNS = (
    "PrCode",
    "PAN",
    "TermId",
    "MerchantID",
    "PosCondition",
    "AffectiveAmount",
    "BusinessDate",
    "Settled",
    "TxnGroup",
)


@dataclass(frozen=True)
class RawTransaction:
    """A transaction as received, before eligibility filtering.

    Only the fields the model consumes are typed; anything else from the
    source record rides along in ``extra``.
    """

    pr_code: int
    pan: str
    term_id: str
    merchant_id: str
    pos_condition: int
    affective_amount: float
    business_date: datetime
    settled: bool
    txn_group: str
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.pan:
            raise ValueError("pan must be non-empty")
        if self.affective_amount < 0:
            raise ValueError("affective_amount must be non-negative")
        if self.txn_group not in TXN_GROUPS:
            raise ValueError(f"unknown txn_group: {self.txn_group!r}")


@dataclass(frozen=True)
class Transaction:
    """Post-preprocessing record: the eight modeled fields plus a unique id."""

    id: int
    pr_code: int
    pan: str
    term_id: str
    merchant_id: str
    pos_condition: int
    affective_amount: float
    trx_date: date
    trx_time: int

    def __post_init__(self):
        if not 0 <= self.trx_time <= 23:
            raise ValueError("trx_time must be in [0, 23]")

    def timestamp(self) -> datetime:
        """Reconstructed hour-resolution timestamp."""
        return datetime(self.trx_date.year, self.trx_date.month, self.trx_date.day, self.trx_time)

    def to_dict(self) -> dict:
        d = self.__dict__.copy()
        d["trx_date"] = self.trx_date.isoformat()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Transaction":
        d = dict(d)
        d["trx_date"] = date.fromisoformat(d["trx_date"])
        return cls(**d)


@dataclass
class EncodingMap:
    """First-occurrence integer codes for a window's categorical fields."""

    merchant_codes: dict[str, int]
    terminal_codes: dict[str, int]
    pan_codes: dict[str, int]
    date_origin: date


@dataclass(frozen=True)
class FeatureVector:
    """Fixed-dimension numeric view of one transaction."""

    values: tuple[float, ...]
    dim: int
    source_id: int

    def __post_init__(self):
        if len(self.values) != self.dim:
            raise ValueError("values length must equal dim")
        if not all(math.isfinite(v) for v in self.values):
            raise ValueError("feature values must be finite")


def filter_eligible(raw: RawTransaction) -> bool:
    """True iff the transaction is settled and of a purchasing type group."""
    return raw.settled and raw.txn_group in ELIGIBLE_GROUPS


def preprocess(raw: RawTransaction, next_id: int) -> Transaction:
    """Split the business timestamp into date + hour and attach an id.

    The caller must have passed the transaction through filter_eligible;
    ineligible input is rejected here as a contract violation.
    """
    if not filter_eligible(raw):
        raise ValueError("ineligible transaction: must be settled and of a purchasing type group")
    return Transaction(
        id=next_id,
        pr_code=raw.pr_code,
        pan=raw.pan,
        term_id=raw.term_id,
        merchant_id=raw.merchant_id,
        pos_condition=raw.pos_condition,
        affective_amount=raw.affective_amount,
        trx_date=raw.business_date.date(),
        trx_time=raw.business_date.hour,
    )


def _first_occurrence_codes(values: Iterable[str]) -> dict[str, int]:
    codes: dict[str, int] = {}
    for v in values:
        if v not in codes:
            codes[v] = len(codes)
    return codes


def encode_window(
    window: list[Transaction], dims: str, scaling: str = "none"
) -> tuple[list[FeatureVector], EncodingMap]:
    """Encode a customer window as numeric vectors, in window order.

    six_dim -> (amount, merchant code, pos_condition, pr_code, day offset,
    hour); three_dim -> (amount, day offset, hour). Merchant codes are
    consecutive integers in first-occurrence order; day offsets count from
    the earliest date in the window. Deterministic for a given window.

    scaling="zscore" standardizes each dimension over the window (constant
    dimensions become 0). Off by default: the density detector's distance
    cutoff is stated in raw currency units and only makes sense unscaled.
    """
    if not window:
        raise ValueError("window must be non-empty")
    if dims not in (SIX_DIM, THREE_DIM):
        raise ValueError(f"unknown encoding dims: {dims!r}")
    if scaling not in ("none", "zscore"):
        raise ValueError(f"unknown scaling mode: {scaling!r}")
    encoding = EncodingMap(
        merchant_codes=_first_occurrence_codes(t.merchant_id for t in window),
        terminal_codes=_first_occurrence_codes(t.term_id for t in window),
        pan_codes=_first_occurrence_codes(t.pan for t in window),
        date_origin=min(t.trx_date for t in window),
    )
    vectors = []
    for t in window:
        day = float((t.trx_date - encoding.date_origin).days)
        if dims == SIX_DIM:
            values = (
                float(t.affective_amount),
                float(encoding.merchant_codes[t.merchant_id]),
                float(t.pos_condition),
                float(t.pr_code),
                day,
                float(t.trx_time),
            )
        else:
            values = (float(t.affective_amount), day, float(t.trx_time))
        vectors.append(FeatureVector(values=values, dim=len(values), source_id=t.id))
    if scaling == "zscore":
        X = np.array([v.values for v in vectors], dtype=np.float64)
        mean = X.mean(axis=0)
        std = X.std(axis=0)
        std[std == 0.0] = 1.0
        X = (X - mean) / std
        vectors = [
            FeatureVector(values=tuple(float(x) for x in row), dim=row.size, source_id=v.source_id)
            for row, v in zip(X, vectors)
        ]
    return vectors, encoding


def distance(a: FeatureVector, b: FeatureVector, measure: str = "euclidean") -> float:
    """Distance between two feature vectors (euclidean or manhattan)."""
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")
    x = np.asarray(a.values, dtype=np.float64)
    y = np.asarray(b.values, dtype=np.float64)
    if measure == "euclidean":
        return float(np.sqrt(((x - y) ** 2).sum()))
    if measure == "manhattan":
        return float(np.abs(x - y).sum())
    raise ValueError(f"unknown distance measure: {measure!r}")


def stack_vectors(vectors: list[FeatureVector]) -> tuple[np.ndarray, np.ndarray]:
    """(n, d) float64 matrix plus the parallel array of source ids."""
    X = np.array([v.values for v in vectors], dtype=np.float64)
    ids = np.array([v.source_id for v in vectors], dtype=np.int64)
    return X, ids


class RowError(ValueError):
    """A single unparseable or invalid ingestion row."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no
        self.message = message


def _parse_bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("true", "1", "yes", "y"):
        return True
    if v in ("false", "0", "no", "n"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def parse_ingest_row(row: dict[str, str], line_no: int) -> RawTransaction:
    try:
        known = {k: row[k] for k in INGEST_COLUMNS}
    except KeyError as e:
        raise RowError(line_no, f"missing column {e.args[0]}") from None
    extra = {k: v for k, v in row.items() if k not in INGEST_COLUMNS and k is not None}
    try:
        return RawTransaction(
            pr_code=int(known["PrCode"]),
            pan=known["PAN"].strip(),
            term_id=known["TermId"].strip(),
            merchant_id=known["MerchantID"].strip(),
            pos_condition=int(known["PosCondition"]),
            affective_amount=float(known["AffectiveAmount"]),
            business_date=datetime.fromisoformat(known["BusinessDate"].strip()),
            settled=_parse_bool(known["Settled"]),
            txn_group=known["TxnGroup"].strip(),
            extra=extra,
        )
    except RowError:
        raise
    except (ValueError, TypeError) as e:
        raise RowError(line_no, str(e)) from None


def read_ingest_file(path, delimiter: str = ",") -> Iterator[tuple[int, "RawTransaction | RowError"]]:
    """Yield (line_no, RawTransaction) per row; bad rows yield RowError instead.

    The header must contain every expected column; extra columns are carried
    through on the record's ``extra`` map.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh, delimiter=delimiter)
        if reader.fieldnames is None:
            raise ValueError("empty ingestion file")
        missing = [c for c in INGEST_COLUMNS if c not in reader.fieldnames]
        if missing:
            raise ValueError(f"ingestion header missing columns: {', '.join(missing)}")
        for i, row in enumerate(reader, start=2):
            try:
                yield i, parse_ingest_row(row, i)
            except RowError as err:
                yield i, err


def write_ingest_file(path, raws: Iterable[RawTransaction], delimiter: str = ",") -> int:
    """Write raw transactions in the ingestion format; returns the row count."""
    n = 0
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, delimiter=delimiter)
        writer.writerow(INGEST_COLUMNS)
        for r in raws:
            writer.writerow(
                [
                    r.pr_code,
                    r.pan,
                    r.term_id,
                    r.merchant_id,
                    r.pos_condition,
                    repr(r.affective_amount),
                    r.business_date.isoformat(),
                    "true" if r.settled else "false",
                    r.txn_group,
                ]
            )
            n += 1
    return n
