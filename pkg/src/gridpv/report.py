"""Deterministic table output in csv, json and text form."""

from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path
from typing import Mapping, Optional

import numpy as np
import pandas as pd

from gridpv import GridPVError, __version__

SIG_DIGITS = 6


class ReportError(GridPVError):
    pass


def fmt_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        if math.isnan(v):
            return ""
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return f"{float(v):.{SIG_DIGITS}g}"
    return str(v)


def _json_value(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        if math.isnan(v):
            return None
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return float(f"{float(v):.{SIG_DIGITS}g}")
    return v


def config_hash(config: Mapping) -> str:
    text = "\n".join(f"{k}={config[k]}" for k in sorted(config))
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def metadata(seed=None, config: Optional[Mapping] = None, **extra) -> dict:
    meta = {"gridpv_version": __version__, "seed": seed,
            "config_hash": config_hash(config or {})}
    meta.update(extra)
    return meta


def emit_report(table: pd.DataFrame, path, fmt: str = "csv", meta: Optional[Mapping] = None) -> Path:
    """Write ``table`` with a metadata header. Column order is preserved."""
    if table is None or len(table) == 0:
        raise ReportError("nothing to report")
    meta = dict(meta or metadata())
    path = Path(path)
    if not path.parent.exists():
        raise ReportError(f"output directory does not exist: {path.parent}")
    cols = [str(c) for c in table.columns]
    rows = table.itertuples(index=False, name=None)
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            if fmt == "csv":
                for k, v in meta.items():
                    fh.write(f"# {k}: {fmt_value(v)}\n")
                fh.write(",".join(cols) + "\n")
                for row in rows:
                    fh.write(",".join(_csv_cell(fmt_value(v)) for v in row) + "\n")
            elif fmt == "json":
                doc = {"metadata": {k: _json_value(v) for k, v in meta.items()},
                       "columns": cols,
                       "rows": [[_json_value(v) for v in row] for row in rows]}
                json.dump(doc, fh, indent=1)
                fh.write("\n")
            elif fmt == "text":
                fh.write(render_text(table, meta))
            else:
                raise ReportError(f"unknown format {fmt!r}")
    except OSError as exc:
        raise ReportError(f"cannot write {path}: {exc}") from None
    return path


def _csv_cell(text: str) -> str:
    if any(ch in text for ch in ',"\n'):
        return '"' + text.replace('"', '""') + '"'
    return text


def render_text(table: pd.DataFrame, meta: Optional[Mapping] = None) -> str:
    cells = [[str(c) for c in table.columns]]
    cells += [[fmt_value(v) for v in row] for row in table.itertuples(index=False, name=None)]
    widths = [max(len(r[j]) for r in cells) for j in range(len(cells[0]))]
    lines = [f"# {k}: {fmt_value(v)}" for k, v in (meta or {}).items()]
    for i, r in enumerate(cells):
        lines.append("  ".join(c.rjust(w) if i else c.ljust(w) for c, w in zip(r, widths)).rstrip())
        if i == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def read_report(path) -> pd.DataFrame:
    """Load a csv or json report written by :func:`emit_report`."""
    path = Path(path)
    if path.suffix == ".json":
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
        return pd.DataFrame(doc["rows"], columns=doc["columns"])
    return pd.read_csv(path, comment="#")
