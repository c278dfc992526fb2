"""Margin reports and their CSV/JSON serialisation."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Any, Iterable, Sequence

import numpy as np


@dataclass
class MarginReport:
    """Outcome of a sampled inequality check.

    ``min_margin`` is the smallest (relative, unless stated otherwise) value
    of right side minus left side over all samples; the check passes when it
    is at least ``-tolerance``.
    """

    check: str
    samples: int
    min_margin: float
    argmin: Any = None
    tolerance: float = 0.0
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return bool(math.isfinite(self.min_margin) and self.min_margin >= -self.tolerance)

    def row(self) -> dict:
        return {
            "check": self.check,
            "samples": self.samples,
            "min_margin": _clean(self.min_margin),
            "argmin": _clean(self.argmin),
            "tolerance": self.tolerance,
            "passed": self.passed,
        }

    def to_dict(self) -> dict:
        out = self.row()
        out["details"] = _clean(self.details)
        return out


def _clean(obj):
    """Convert numpy and complex values into JSON-friendly builtins."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (complex, np.complexfloating)):
        return [_float(obj.real), _float(obj.imag)]
    if isinstance(obj, (np.floating, float)):
        return _float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if hasattr(obj, "__dataclass_fields__"):
        return _clean(asdict(obj))
    return obj


def _float(x):
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return float(repr(x)) if x != 0 else 0.0


def sort_reports(reports: Iterable[MarginReport]) -> list[MarginReport]:
    return sorted(reports, key=lambda r: r.check)


def reports_to_csv(reports: Sequence[MarginReport]) -> str:
    buf = io.StringIO()
    cols = ["check", "samples", "min_margin", "argmin", "tolerance", "passed"]
    w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
    w.writeheader()
    for r in reports:
        row = r.row()
        row["argmin"] = json.dumps(row["argmin"])
        w.writerow(row)
    return buf.getvalue()


def rows_to_csv(rows: Sequence[dict], columns: Sequence[str] | None = None) -> str:
    buf = io.StringIO()
    cols = list(columns or (rows[0].keys() if rows else []))
    w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: _clean(r.get(k)) for k in cols})
    return buf.getvalue()


def to_json(obj) -> str:
    return json.dumps(_clean(obj), indent=2, sort_keys=True)


def fmt_number(x: float, digits: int = 4) -> str:
    """Fixed-point with trailing zeros stripped: 4.0 -> '4', 1.33333 -> '1.3333'."""
    s = f"{x:.{digits}f}".rstrip("0").rstrip(".")
    return "0" if s in ("-0", "") else s
