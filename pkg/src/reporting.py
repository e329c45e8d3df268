"""
Reporting — write timeseries.csv, metadata.json, report.md and ψ snapshot CSVs.
"""
from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Any, Dict, Optional

from .io_readers import snapshot_frame
from .scenarios import RunRecord

logger = logging.getLogger(__name__)


def _write(path: Path, writer) -> None:
    try:
        writer(path)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def _fmt(value: Any) -> str:
    if isinstance(value, float):
        return f"{value:.10g}"
    return str(value)


def write_outputs(
    record: RunRecord,
    output_dir: str | Path,
    checks: Optional[Dict[str, Any]] = None,
) -> Dict[str, Path]:
    """Write all outputs of a run to output_dir and return their paths.

    timeseries.csv and the snapshots keep shortest round-trip decimals;
    metadata.json depends only on the config. The wall-clock duration is
    written to report.md only.
    """
    output_dir = Path(output_dir)
    try:
        output_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {output_dir}: {exc}") from exc

    paths: Dict[str, Path] = {}

    # --- timeseries.csv ---
    paths["timeseries"] = output_dir / "timeseries.csv"
    _write(paths["timeseries"],
           lambda p: record.rows.to_csv(p, index=False, lineterminator="\n", encoding="utf-8"))

    # --- metadata.json ---
    metadata = dict(record.metadata)
    if checks is not None:
        metadata["checks"] = checks
    paths["metadata"] = output_dir / "metadata.json"
    _write(paths["metadata"], lambda p: p.write_text(
        json.dumps(metadata, indent=2, sort_keys=True, ensure_ascii=False, default=str) + "\n",
        encoding="utf-8",
    ))

    # --- snapshots ---
    for name, state in sorted(record.snapshots.items()):
        path = output_dir / f"{name}.csv"
        _write(path, lambda p, s=state: snapshot_frame(s).to_csv(
            p, index=False, lineterminator="\n", encoding="utf-8"))
        paths[name] = path

    # --- report.md ---
    md = [
        f"# vortexline run report: {record.scenario}\n",
        "## Summary\n",
        f"- **Scenario**: {record.scenario}",
        f"- **Rows**: {len(record.rows)}",
        f"- **Snapshots**: {len(record.snapshots)}",
        f"- **Duration**: {record.duration_s:.3f} s\n",
    ]
    if record.summary:
        md.append("## Results\n")
        md.append("| Quantity | Value |")
        md.append("|---|---:|")
        for key, value in record.summary.items():
            md.append(f"| {key} | {_fmt(value)} |")
        md.append("")
    if checks is not None:
        md.append("## Checks\n")
        md.append(f"- Finite values: {checks.get('all_finite')}")
        md.append(f"- t strictly increasing: {checks.get('t_increasing')}")
        for col, drift in checks.get("drift", {}).items():
            md.append(f"- Relative drift {col}: {drift:.3e}")
        md.append(f"- **Issues**: {checks.get('has_issues')}\n")
    paths["report"] = output_dir / "report.md"
    _write(paths["report"], lambda p: p.write_text("\n".join(md), encoding="utf-8"))

    logger.info("Wrote %d output files to %s", len(paths), output_dir)
    return paths
