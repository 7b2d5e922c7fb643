"""Compare the ledgers of two result directories to check for regressions."""

import argparse
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from shadowlab.errors import ReportError
from shadowlab.harness.report import read_csv

KEY = ["scenario_id", "quantity", "t_or_r"]
NUMERIC_COLUMNS = ["value", "error", "margin"]


def load_ledger(path: Path) -> pd.DataFrame:
    """Load a ledger CSV and return it as a DataFrame.

    Args:
        path: Path to the ledger CSV

    Returns:
        DataFrame with one row per record, or an empty DataFrame if loading fails
    """
    try:
        return read_csv(path).to_frame()
    except (OSError, ReportError) as e:
        print(f"Error loading {path}: {str(e)}")
        return pd.DataFrame()


def compare_numeric_stats(df1: pd.DataFrame, df2: pd.DataFrame) -> Dict[str, Dict[str, float]]:
    """Compare describe() statistics of the numeric ledger columns.

    Args:
        df1: Baseline ledger
        df2: Candidate ledger

    Returns:
        Dict[str, Dict[str, float]]: Mean and std of both runs per column
    """
    stats = {}
    print("  📈 Numeric column changes:")
    for col in NUMERIC_COLUMNS:
        stats1 = df1[col].describe()
        stats2 = df2[col].describe()
        stats[col] = {
            "mean_before": float(stats1["mean"]),
            "mean_after": float(stats2["mean"]),
            "std_before": float(stats1["std"]),
            "std_after": float(stats2["std"]),
        }
        mean_diff = stats2["mean"] - stats1["mean"]
        print(f"    {col}:")
        print(
            f"      Mean: {stats1['mean']:.6g} → {stats2['mean']:.6g} "
            f"({'↑' if mean_diff > 0 else '↓'}{abs(mean_diff):.3g})"
        )
        print(f"      Std:  {stats1['std']:.6g} → {stats2['std']:.6g}")
    return stats


def changed_records(df1: pd.DataFrame, df2: pd.DataFrame, rtol: float = 0.0) -> pd.DataFrame:
    """Records present in both ledgers whose value or pass status differs.

    Args:
        df1: Baseline ledger
        df2: Candidate ledger
        rtol: Relative tolerance below which value changes are ignored

    Returns:
        pd.DataFrame: Key columns, both values and both statuses
    """
    joined = df1.merge(df2, on=KEY, suffixes=("_before", "_after"))
    moved = ~np.isclose(joined["value_before"], joined["value_after"], rtol=rtol, atol=0.0)
    flipped = joined["pass_before"] != joined["pass_after"]
    columns = KEY + ["value_before", "value_after", "pass_before", "pass_after"]
    return joined.loc[moved | flipped, columns].reset_index(drop=True)


def compare_ledgers(before_dir: str, after_dir: str, rtol: float = 0.0) -> pd.DataFrame:
    """Compare two result directories for regressions and changes.

    Args:
        before_dir: Directory holding the baseline ledger.csv
        after_dir: Directory holding the candidate ledger.csv
        rtol: Relative tolerance for value changes

    Returns:
        pd.DataFrame: The changed records (empty when nothing moved)
    """
    df1 = load_ledger(Path(before_dir) / "ledger.csv")
    df2 = load_ledger(Path(after_dir) / "ledger.csv")
    if df1.empty or df2.empty:
        return pd.DataFrame()

    keys1 = set(map(tuple, df1[KEY].astype(str).values))
    keys2 = set(map(tuple, df2[KEY].astype(str).values))
    missing = keys1 - keys2
    new = keys2 - keys1

    if missing:
        print("\n🚨 Records missing in the candidate run:")
        for key in sorted(missing):
            print(f"  - {' / '.join(key)}")
    if new:
        print("\n📝 New records in the candidate run:")
        for key in sorted(new):
            print(f"  - {' / '.join(key)}")

    print(f"\n🔍 Comparing {len(df1):,} → {len(df2):,} records...")
    compare_numeric_stats(df1, df2)

    changes = changed_records(df1, df2, rtol)
    if changes.empty:
        print("\n✅ No value or status changes")
    else:
        print(f"\n❌ {len(changes)} changed records:")
        print(changes.to_string(index=False))
    return changes


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = argparse.ArgumentParser(description="Compare two shadowlab result directories.")
    parser.add_argument("before")
    parser.add_argument("after")
    parser.add_argument("--rtol", type=float, default=0.0)
    args = parser.parse_args(argv)
    changes = compare_ledgers(args.before, args.after, args.rtol)
    flips: List[bool] = list(changes["pass_before"] & ~changes["pass_after"]) if not changes.empty else []
    return 1 if any(flips) else 0


if __name__ == "__main__":
    raise SystemExit(main())
