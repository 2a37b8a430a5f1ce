"""CSV and run-manifest emission.

Schema (one header row, LF newlines, '.' decimal point, no thousands
separators)::

    x,y,std_err,n_trials,metric,config_digest

Analytic rows leave std_err and n_trials empty.  Floats are written with
``repr``, the shortest round-trip form, so identical inputs produce
byte-identical files on any platform.
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass
from typing import Iterable

from .analytics import AnalyticCurve
from .montecarlo import SimCurve

__all__ = ["CSV_HEADER", "SchemaError", "curve_rows", "write_csv", "read_csv", "write_manifest"]

CSV_HEADER = "x,y,std_err,n_trials,metric,config_digest"


class SchemaError(ValueError):
    """A CSV file does not match the documented schema."""


def _fmt(v: float) -> str:
    return repr(float(v))


def curve_rows(curve) -> list:
    """Rows (list of column lists) for an analytic or simulated curve."""
    rows = []
    if isinstance(curve, AnalyticCurve):
        for x, y in zip(curve.x_grid, curve.y):
            rows.append([_fmt(x), _fmt(y), "", "", curve.metric_name, curve.config_digest])
    elif isinstance(curve, SimCurve):
        for x, y, se in zip(curve.x, curve.values, curve.std_errs):
            rows.append(
                [_fmt(x), _fmt(y), _fmt(se), str(curve.n_trials), curve.metric, curve.digest]
            )
    else:
        raise TypeError(f"cannot serialize {type(curve).__name__}")
    return rows


def write_csv(path: str, curves: Iterable) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER.split(","))
        for curve in curves:
            writer.writerows(curve_rows(curve))


def read_csv(path: str) -> list:
    """Rows as dicts; raises :class:`SchemaError` on a malformed file."""
    cols = CSV_HEADER.split(",")
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file") from None
        if header != cols:
            raise SchemaError(
                f"{path}: expected header {CSV_HEADER!r}, got {','.join(header)!r}"
            )
        out = []
        for i, parts in enumerate(reader, start=2):
            if len(parts) != len(cols):
                raise SchemaError(
                    f"{path}:{i}: expected {len(cols)} columns, got {len(parts)}"
                )
            row = dict(zip(cols, parts))
            try:
                row["x"] = float(row["x"])
                row["y"] = float(row["y"])
                row["std_err"] = float(row["std_err"]) if row["std_err"] else None
                row["n_trials"] = int(row["n_trials"]) if row["n_trials"] else None
            except ValueError as e:
                raise SchemaError(f"{path}:{i}: {e}") from None
            out.append(row)
    return out


@dataclass(frozen=True)
class RunManifest:
    config_digest: str
    seed: int | None
    command: str
    outputs: tuple
    duration_s: float


def write_manifest(path: str, manifest: RunManifest) -> None:
    payload = {
        "config_digest": manifest.config_digest,
        "seed": manifest.seed,
        "command": manifest.command,
        "outputs": list(manifest.outputs),
        "duration_s": round(manifest.duration_s, 3),
        "written_at": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
