"""Append-only result ledger with content-addressed records."""

import hashlib
import logging
import math
import threading
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, Iterable, Iterator, List, Optional, Tuple

import pandas as pd

from shadowlab.harness.scenario import canonical_json

logger = logging.getLogger(__name__)

CSV_COLUMNS = [
    "scenario_id",
    "t_or_r",
    "value",
    "error",
    "margin",
    "pass",
    "quantity",
    "oracle_value",
    "oracle_error",
    "scenario_hash",
    "content_id",
]


def git_blob_id(payload: bytes) -> str:
    """sha1 over 'blob <len>\\0<payload>', as git names blobs."""
    header = f"blob {len(payload)}\0".encode("ascii")
    return hashlib.sha1(header + payload).hexdigest()


def _optional_float(value) -> Optional[float]:
    if value is None:
        return None
    value = float(value)
    return None if math.isnan(value) else value


@dataclass(frozen=True)
class LedgerRecord:
    """One measured quantity of one scenario at one parameter value."""

    scenario_id: str
    scenario_hash: str
    quantity: str
    t_or_r: float
    value: float
    error: float
    margin: float
    passed: bool
    oracle_value: Optional[float] = None
    oracle_error: Optional[float] = None
    wall_time: float = field(default=0.0, compare=False)

    def payload(self) -> Dict[str, Any]:
        """Deterministic content; wall time is left out."""
        out = asdict(self)
        out.pop("wall_time")
        return out

    @property
    def content_id(self) -> str:
        return git_blob_id(canonical_json(self.payload()).encode("utf-8"))

    def to_row(self) -> Dict[str, Any]:
        data = self.payload()
        data["pass"] = data.pop("passed")
        data["content_id"] = self.content_id
        return {column: data[column] for column in CSV_COLUMNS}

    @classmethod
    def from_row(cls, row: Dict[str, Any]) -> "LedgerRecord":
        return cls(
            scenario_id=str(row["scenario_id"]),
            scenario_hash=str(row["scenario_hash"]),
            quantity=str(row["quantity"]),
            t_or_r=float(row["t_or_r"]),
            value=float(row["value"]),
            error=float(row["error"]),
            margin=float(row["margin"]),
            passed=bool(row["pass"]),
            oracle_value=_optional_float(row.get("oracle_value")),
            oracle_error=_optional_float(row.get("oracle_error")),
        )


class ResultLedger:
    """Records in append order. Appends are serialized; records are never changed or removed."""

    def __init__(self, records: Iterable[LedgerRecord] = ()):
        self._lock = threading.Lock()
        self._records: List[LedgerRecord] = list(records)

    def append(self, record: LedgerRecord) -> LedgerRecord:
        with self._lock:
            self._records.append(record)
        status = "pass" if record.passed else "VIOLATION"
        logger.debug(f"[{record.scenario_id}] {record.quantity} at {record.t_or_r:.6g}: {record.value:.10g} ({status})")
        return record

    def extend(self, records: Iterable[LedgerRecord]):
        for record in records:
            self.append(record)

    @property
    def records(self) -> Tuple[LedgerRecord, ...]:
        with self._lock:
            return tuple(self._records)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[LedgerRecord]:
        return iter(self.records)

    def violations(self) -> List[LedgerRecord]:
        return [r for r in self.records if not r.passed]

    def for_scenario(self, scenario_id: str) -> List[LedgerRecord]:
        return [r for r in self.records if r.scenario_id == scenario_id]

    def digest(self) -> str:
        """sha256 over the ordered content ids; equal digests mean bit-identical ledgers."""
        joined = "\n".join(r.content_id for r in self.records)
        return hashlib.sha256(joined.encode("ascii")).hexdigest()

    def to_frame(self) -> pd.DataFrame:
        rows = [r.to_row() for r in self.records]
        return pd.DataFrame(rows, columns=CSV_COLUMNS)

    @classmethod
    def from_frame(cls, frame: pd.DataFrame) -> "ResultLedger":
        return cls(LedgerRecord.from_row(row) for row in frame.to_dict(orient="records"))
