"""Input validation helpers shared by the fitting estimators and the runner."""

from __future__ import annotations

import numpy as np
import pandas as pd

__all__ = ["SCAN_COLUMNS", "check_scan_table", "column_or_error", "as_xy"]

# canonical scan-table schema; entropy_profile is optional diagnostic payload
SCAN_COLUMNS = [
    "n", "t", "phi", "L", "chi", "m", "sigma", "delta", "gamma",
    "entropy_mid", "trunc_err", "converged", "run_id",
]
KEY_COLUMNS = ["n", "t", "phi", "L", "m", "chi"]


def column_or_error(df: pd.DataFrame, name: str) -> pd.Series:
    if name not in df.columns:
        raise ValueError(f"scan table is missing required column {name!r}")
    return df[name]


def check_scan_table(df: pd.DataFrame, require=(), converged_only: bool = True) -> pd.DataFrame:
    """Validate a scan table and return the converged slice.

    Raises on missing columns, duplicate (n, t, phi, L, m, chi) keys, or an
    empty result.
    """
    if not isinstance(df, pd.DataFrame):
        raise TypeError(f"scan table must be a DataFrame, got {type(df).__name__}")
    for name in list(require) + KEY_COLUMNS:
        column_or_error(df, name)
    if df.duplicated(subset=KEY_COLUMNS).any():
        dup = df[df.duplicated(subset=KEY_COLUMNS, keep=False)]
        raise ValueError(f"scan table has duplicate keys:\n{dup[KEY_COLUMNS]}")
    out = df
    if converged_only and "converged" in df.columns:
        out = df[df["converged"].astype(bool)]
    if len(out) == 0:
        raise ValueError("scan table has no (converged) rows")
    return out.copy()


def as_xy(points, n_cols: int, what: str) -> np.ndarray:
    """Coerce a sequence of tuples / array / DataFrame into a float matrix."""
    if isinstance(points, pd.DataFrame):
        arr = points.to_numpy(dtype=float)
    else:
        arr = np.asarray(points, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != n_cols:
        raise ValueError(f"{what} must be a sequence of {n_cols}-tuples, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{what} contains non-finite values")
    return arr
