"""CSV / JSON emission of experiment tables."""

from __future__ import annotations

import csv
import dataclasses
import json
import math
from pathlib import Path
from typing import Sequence

from .config import SCHEMA_VERSION


def _as_dict(rec) -> dict:
    return dataclasses.asdict(rec) if dataclasses.is_dataclass(rec) else dict(rec)


def _clean(v):
    if isinstance(v, float) and math.isnan(v):
        return None
    if hasattr(v, "item"):  # numpy scalar
        return v.item()
    return v


def _cell(v):
    v = _clean(v)
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return v


def write_table(records: Sequence, path, fmt: str = "csv", columns: Sequence[str] | None = None) -> Path:
    """Write records (dataclasses or dicts) as CSV or a JSON array; column order is fixed."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    rows = [_as_dict(r) for r in records]
    if columns is None:
        columns = list(rows[0]) if rows else []
    if fmt == "csv":
        with path.open("w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(columns), lineterminator="\n")
            writer.writeheader()
            for row in rows:
                writer.writerow({c: _cell(row.get(c)) for c in columns})
    elif fmt == "json":
        payload = [{c: _clean(row.get(c)) for c in columns} for row in rows]
        path.write_text(json.dumps(payload, indent=2) + "\n")
    else:
        raise ValueError(f"unknown format {fmt!r}; use csv or json")
    return path


def emit_results(
    tables: dict[str, Sequence],
    out_dir,
    name: str,
    fmt: str = "csv",
    metadata: dict | None = None,
    columns: dict[str, Sequence[str]] | None = None,
) -> dict[str, Path]:
    """Write each table to ``<out_dir>/<name>_<table>.<fmt>`` plus a ``<name>_summary.json``."""
    out_dir = Path(out_dir)
    columns = columns or {}
    paths = {}
    for table, records in tables.items():
        paths[table] = write_table(records, out_dir / f"{name}_{table}.{fmt}", fmt, columns.get(table))
    summary = {
        "schema_version": SCHEMA_VERSION,
        "experiment": name,
        "tables": {t: p.name for t, p in paths.items()},
        "metadata": metadata or {},
        "records": {t: [{k: _clean(v) for k, v in _as_dict(r).items()} for r in recs]
                    for t, recs in tables.items() if t != "histogram"},
    }
    summary_path = out_dir / f"{name}_summary.json"
    summary_path.write_text(json.dumps(summary, indent=2, sort_keys=True, default=str) + "\n")
    paths["summary"] = summary_path
    return paths


def read_table(path) -> list[dict]:
    """Read back a table written by :func:`write_table` (CSV cells stay strings)."""
    path = Path(path)
    if path.suffix == ".json":
        return json.loads(path.read_text())
    with path.open(newline="") as fh:
        return list(csv.DictReader(fh))
