"""
result_store.py
CSV output for every command.

Responsibility: ONE job only. Fixed column schemas, written once per run to
stdout or a file.

Schemas (fixed, downstream scripts read columns by header name):
    DEMAND_COLUMNS   : demand table, one row per layer plus the input row
    PIPELINE_COLUMNS : one row per evaluated partition
    SWEEP_COLUMNS    : one row per (bandwidth, power, objective) cell
    STATS_COLUMNS    : one row per encoded tensor

Format: comma separated, LF line endings, header row, no index column.
"""

import logging
import sys
from pathlib import Path

import pandas as pd

logger = logging.getLogger(__name__)

DEMAND_COLUMNS = [
    "index",
    "name",
    "kind",
    "out_shape",
    "macs",
    "weight_bytes",
    "out_feature_bytes",
    "cum_macs",
    "cum_weight_bytes",
    "rate_bps",
]

PIPELINE_COLUMNS = [
    "network",
    "p",
    "layer",
    "encoding",
    "qf",
    "payload_bytes",
    "t_inf_s",
    "t_tx_s",
    "fps",
    "J_per_frame",
    "bottleneck",
]

SWEEP_COLUMNS = [
    "bandwidth_bps",
    "power_W",
    "objective",
    "best_layer",
    "fps",
    "J_per_frame",
]

STATS_COLUMNS = [
    "tensor",
    "shape",
    "mode",
    "qf",
    "raw_bytes",
    "encoded_bytes",
    "ratio",
    "entropy_bits",
    "nonzero_ratio",
]

# Columns that may be blank (qf for non-lossy rows); kept as nullable ints
_NULLABLE_INT = {"qf"}


def conform(df: pd.DataFrame, columns: list[str]) -> pd.DataFrame:
    """Reorder to the schema; missing columns are an error, extras are dropped."""
    missing = [c for c in columns if c not in df.columns]
    if missing and not df.empty:
        raise KeyError(f"result frame lacks columns: {', '.join(missing)}")
    out = df.reindex(columns=columns)
    for col in _NULLABLE_INT & set(columns):
        out[col] = out[col].astype("Int64")
    return out


def write_frame(df: pd.DataFrame, columns: list[str], out=None) -> None:
    """Write `df` with the given schema to `out` (path) or stdout."""
    df = conform(df, columns)
    if out is None or str(out) == "-":
        df.to_csv(sys.stdout, index=False, lineterminator="\n")
        return
    path = Path(out)
    path.parent.mkdir(parents=True, exist_ok=True)
    df.to_csv(path, index=False, lineterminator="\n")
    logger.info("Results written | %s (%d rows)", path, len(df))

