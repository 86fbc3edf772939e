"""Artifact serialisation: JSON solution dumps and delimited tables.

Writes are atomic (temp file in the target directory, then rename) and
contain no timestamps, so identical inputs give byte-identical files.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .encoding import EncodingScheme
from .errors import CardtrackError
from .market_data import CovarianceSet, ReturnsPanel
from .metrics import TrackingReport, score_portfolio
from .solver import Solution

TABLE2_COLUMNS = ("C", "K", "e_cte", "mre", "mdre", "vol_error")
TABLE4_COLUMNS = ("lambda", "e_cte", "vol_error", "mdrse", "correlation", "score")


def fmt_sig(x: Optional[float]) -> str:
    """Five significant digits; infinities spelled out."""
    if x is None:
        return ""
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.5g}"


def fmt_cte(x: Optional[float]) -> str:
    return "" if x is None else f"{x:.5f}"


def atomic_write(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow(row)
    atomic_write(path, buf.getvalue())


def _json_safe(value):
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return value
    if isinstance(value, dict):
        return {k: _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    if isinstance(value, np.generic):
        return _json_safe(value.item())
    return value


def write_json(path, payload) -> None:
    atomic_write(path, json.dumps(_json_safe(payload), indent=2, sort_keys=True) + "\n")


def safe_score(
    weights, panel: ReturnsPanel, covset: Optional[CovarianceSet] = None, success_rate=None
) -> Optional[TrackingReport]:
    """Metrics for any decoded portfolio; ``None`` when undefined (e.g. empty)."""
    try:
        return score_portfolio(weights, panel, covset, success_rate)
    except CardtrackError:
        return None


def solution_record(
    sol: Solution,
    scheme: EncodingScheme,
    panel: ReturnsPanel,
    report: Optional[TrackingReport],
    meta: dict,
) -> dict:
    return {
        **meta,
        "K": scheme.resolution,
        "C": scheme.cardinality,
        "sample_index": sol.sample_index,
        "seed": sol.seed_used,
        "energy": sol.energy,
        "assignment": "".join(str(int(b)) for b in sol.assignment),
        "weights": {a: float(w) for a, w in zip(panel.asset_ids, sol.weights) if w > 0},
        "selected": [a for a, z in zip(panel.asset_ids, sol.selected) if z],
        "feasible": sol.feasible,
        "violations": list(sol.verdict.violations),
        "metrics": report.as_dict() if report is not None else None,
    }


def table2_row(scheme: EncodingScheme, report: TrackingReport) -> list[str]:
    return [
        str(scheme.cardinality),
        str(scheme.resolution),
        fmt_cte(report.cte),
        fmt_sig(report.mre),
        fmt_sig(report.mdre),
        fmt_sig(report.vol_error),
    ]


def weights_rows(panel: ReturnsPanel, sol: Solution) -> list[list[str]]:
    return [
        [a, repr(float(w)), str(int(z))]
        for a, w, z in zip(panel.asset_ids, sol.weights, sol.selected)
    ]
