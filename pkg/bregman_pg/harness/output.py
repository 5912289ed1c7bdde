"""CSV trace files and JSON run reports."""

import csv
import json
import logging
import math
from dataclasses import asdict, is_dataclass
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np

from ..models import BregmanError, ErrorType, EventCensus
from ..trace_collector import IterRecord, RunResult, Trace

logger = logging.getLogger(__name__)

TRACE_COLUMNS = [
    "iter", "s", "k", "psi", "norm_G", "norm_D", "norm_restricted_G", "step",
    "dist_boundary", "samples", "flag_boundary", "flag_prox_boundary",
]
INT_COLUMNS = {"iter", "s", "k", "samples"}
FLAG_COLUMNS = {"flag_boundary": "hit_boundary", "flag_prox_boundary": "prox_on_boundary"}


def format_float(value: Optional[float]) -> str:
    """17 significant digits, empty for absent values."""
    if value is None:
        return ""
    return format(float(value), ".17g")


def _row(rec: IterRecord, include_iterates: bool) -> List[str]:
    row = []
    for name in TRACE_COLUMNS:
        if name in FLAG_COLUMNS:
            row.append("1" if getattr(rec, FLAG_COLUMNS[name]) else "0")
        elif name in INT_COLUMNS:
            row.append(str(int(getattr(rec, name))))
        else:
            row.append(format_float(getattr(rec, name)))
    if include_iterates:
        row.extend(format_float(v) for v in rec.x)
    return row


def emit_trace_csv(trace: Trace, path, include_iterates: bool = False) -> Path:
    """
    Write one row per record.

    Only the fixed columns by default; include_iterates appends the
    iterate coordinates x1..xd.

    Raises:
        BregmanError: IO_ERROR when the file cannot be written
    """
    path = Path(path)
    dim = trace.records[0].x.size if trace.records and include_iterates else 0
    header = TRACE_COLUMNS + [f"x{i + 1}" for i in range(dim)]
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(header)
            for rec in trace.records:
                writer.writerow(_row(rec, include_iterates))
    except OSError as exc:
        raise BregmanError(ErrorType.IO_ERROR, f"cannot write {path}: {exc}") from exc
    logger.debug("wrote %d trace rows to %s", len(trace.records), path)
    return path


def _parse_cell(name: str, cell: str):
    if cell == "":
        return None
    if name in INT_COLUMNS:
        return int(cell)
    if name in FLAG_COLUMNS:
        return cell == "1"
    return float(cell)


def read_trace_csv(path) -> List[Dict[str, Any]]:
    """Rows of a trace CSV as dicts; iterate coordinates are gathered under "x"."""
    path = Path(path)
    try:
        with path.open(newline="") as handle:
            reader = csv.DictReader(handle)
            rows = []
            for raw in reader:
                row = {name: _parse_cell(name, raw[name]) for name in TRACE_COLUMNS}
                coords = [key for key in raw if key.startswith("x") and key[1:].isdigit()]
                row["x"] = np.array([float(raw[key]) for key in sorted(coords, key=lambda c: int(c[1:]))])
                rows.append(row)
    except (OSError, KeyError, ValueError) as exc:
        raise BregmanError(ErrorType.IO_ERROR, f"cannot read trace {path}: {exc}") from exc
    return rows


def to_jsonable(value: Any) -> Any:
    """Recursively convert numpy values, enums, sets and dataclasses for json.dump."""
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, EventCensus):
        return value.as_dict()
    if is_dataclass(value) and not isinstance(value, type):
        return to_jsonable(asdict(value))
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, set)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [to_jsonable(v) for v in value.tolist()]
    if isinstance(value, np.generic):
        return to_jsonable(value.item())
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    return value


def run_report(result: RunResult) -> Dict[str, Any]:
    """JSON-friendly summary of a run: parameters, census, diagnostics and output point."""
    return to_jsonable({
        "success": result.success,
        "error": result.error,
        "message": result.message,
        "stop_reason": result.trace.stop_reason,
        "params": result.trace.params,
        "census": result.census,
        "diagnostics": result.diagnostics,
        "x_out": result.x_out,
        "records": len(result.trace),
        "samples": result.trace.total_samples(),
        "epoch_lengths": result.trace.epoch_lengths,
    })


def write_json(payload: Any, path) -> Path:
    """Write a JSON document with sorted keys."""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w") as handle:
            json.dump(to_jsonable(payload), handle, indent=2, sort_keys=True)
            handle.write("\n")
    except OSError as exc:
        raise BregmanError(ErrorType.IO_ERROR, f"cannot write {path}: {exc}") from exc
    return path


def write_table_csv(rows: List[Dict[str, Any]], path) -> Path:
    """Flat table (sweep results) with the union of row keys as header."""
    path = Path(path)
    header: List[str] = []
    for row in rows:
        header.extend(key for key in row if key not in header)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as handle:
            writer = csv.DictWriter(handle, fieldnames=header, lineterminator="\n")
            writer.writeheader()
            for row in rows:
                writer.writerow({
                    key: format_float(v) if isinstance(v, float) else ("" if v is None else v)
                    for key, v in row.items()
                })
    except OSError as exc:
        raise BregmanError(ErrorType.IO_ERROR, f"cannot write {path}: {exc}") from exc
    return path
