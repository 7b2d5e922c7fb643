"""CSV, JSON and SVG output of a result ledger."""

import json
import logging
from pathlib import Path
from typing import Dict, Iterable, Sequence, Union

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import pandas as pd  # noqa: E402

from shadowlab.errors import ReportError  # noqa: E402
from shadowlab.harness.ledger import CSV_COLUMNS, LedgerRecord, ResultLedger  # noqa: E402

logger = logging.getLogger(__name__)

FORMATS = ("csv", "json", "svg")
FLOAT_FORMAT = "%.17g"

# Fixed SVG ids and no timestamp, so reruns produce identical files
matplotlib.rcParams["svg.hashsalt"] = "shadowlab"


def _as_ledger(records: Union[ResultLedger, Iterable[LedgerRecord]]) -> ResultLedger:
    return records if isinstance(records, ResultLedger) else ResultLedger(records)


def write_csv(ledger: ResultLedger, path: Path) -> Path:
    ledger.to_frame().to_csv(path, index=False, float_format=FLOAT_FORMAT)
    return path


def read_csv(path: Union[str, Path]) -> ResultLedger:
    """Re-read a ledger CSV; values come back bit-exact."""
    text_columns = {c: str for c in ("scenario_id", "quantity", "scenario_hash", "content_id")}
    frame = pd.read_csv(path, float_precision="round_trip", dtype=text_columns)
    missing = [c for c in CSV_COLUMNS if c not in frame.columns]
    if missing:
        raise ReportError(f"{path}: missing columns {missing}")
    return ResultLedger.from_frame(frame)


def write_json(ledger: ResultLedger, path: Path) -> Path:
    with open(path, "w", encoding="utf-8") as f:
        json.dump({"records": [r.to_row() for r in ledger], "digest": ledger.digest()}, f, sort_keys=True, indent=2)
    return path


def write_svg(ledger: ResultLedger, path: Path, quantity: str = "margin") -> Path:
    """One line per scenario: margin against t (or r), with the zero line for reference."""
    frame = ledger.to_frame()
    frame = frame[frame["quantity"] == quantity] if not frame.empty else frame
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for scenario_id, group in frame.groupby("scenario_id", sort=True):
        group = group.sort_values("t_or_r")
        ax.plot(group["t_or_r"], group["margin"], marker="o", label=scenario_id)
    ax.axhline(0.0, color="black", linewidth=0.8)
    ax.set_xlabel("t or r")
    ax.set_ylabel("margin")
    if not frame.empty:
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def emit_report(
    records: Union[ResultLedger, Iterable[LedgerRecord]],
    out_dir: Union[str, Path],
    formats: Sequence[str] = FORMATS,
    stem: str = "ledger",
) -> Dict[str, Path]:
    """Write the requested formats into out_dir.

    Args:
        records: Ledger or records to write
        out_dir: Output directory, created when missing
        formats: Any of "csv", "json", "svg"
        stem: File name stem

    Returns:
        Dict[str, Path]: Written file per format

    Raises:
        ReportError: If the output location cannot be written
    """
    ledger = _as_ledger(records)
    unknown = set(formats) - set(FORMATS)
    if unknown:
        raise ReportError(f"Unknown report formats: {sorted(unknown)}")
    writers = {"csv": write_csv, "json": write_json, "svg": write_svg}
    out_dir = Path(out_dir)
    written: Dict[str, Path] = {}
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        for fmt in formats:
            written[fmt] = writers[fmt](ledger, out_dir / f"{stem}.{fmt}")
    except OSError as e:
        raise ReportError(f"Cannot write report to {out_dir}: {e}") from e
    logger.info(f"Wrote {len(ledger)} records to {out_dir} ({', '.join(formats)})")
    return written
