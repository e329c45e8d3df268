"""
Post-run plausibility checks on a RunRecord: finite values, increasing time,
relative drift of the quantities the scenario expects to be conserved.
"""
from __future__ import annotations

import logging
from typing import Any, Dict

import numpy as np
import pandas as pd

from .scenarios import RunRecord

logger = logging.getLogger(__name__)

DRIFT_TOLERANCE = {
    "linear-spectral": 1e-10,
    "nonlinear-rk4": 1e-6,
}
DEFAULT_DRIFT_TOLERANCE = 1e-10


def relative_drift(values: pd.Series) -> float:
    """max |x − x₀| / |x₀|, or the absolute drift when x₀ = 0."""
    x = values.to_numpy(dtype=float)
    if x.size == 0:
        return 0.0
    ref = abs(x[0])
    spread = float(np.max(np.abs(x - x[0])))
    return spread / ref if ref > 0 else spread


def run_checks(record: RunRecord) -> Dict[str, Any]:
    """Run plausibility checks on a finished scenario."""
    rows = record.rows
    checks: Dict[str, Any] = {"row_count": len(rows)}

    numeric = rows.select_dtypes(include=[np.number])
    # NaN marks "not measured" (e.g. zero-amplitude sweep points); only inf is an error
    checks["all_finite"] = bool(not np.isinf(numeric.to_numpy(dtype=float)).any()) if not numeric.empty else True

    if "t" in rows.columns and len(rows) > 1:
        checks["t_increasing"] = bool(np.all(np.diff(rows["t"].to_numpy(dtype=float)) > 0))
    else:
        checks["t_increasing"] = True

    solver = (record.metadata.get("config") or {}).get("solver") or {}
    tolerance = DRIFT_TOLERANCE.get(solver.get("scheme"), DEFAULT_DRIFT_TOLERANCE)
    checks["drift_tolerance"] = tolerance

    drifts: Dict[str, float] = {}
    for col in ("V", "p_z", "L_z", "H"):
        if col in rows.columns:
            drifts[col] = relative_drift(rows[col])
    checks["drift"] = drifts
    exceeded = [c for c in record.conserved if drifts.get(c, 0.0) > tolerance]
    checks["drift_exceeded"] = exceeded

    checks["has_issues"] = (not checks["all_finite"]) or (not checks["t_increasing"]) or bool(exceeded)
    if checks["has_issues"]:
        logger.warning("Post-run checks found issues: %s", {
            k: checks[k] for k in ("all_finite", "t_increasing", "drift_exceeded")
        })
    else:
        logger.info("Post-run checks passed (%d rows)", len(rows))
    return checks
