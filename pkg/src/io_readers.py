"""
I/O Readers — scenario documents and ψ snapshot CSVs (z, psi_real, psi_imag).
"""
from __future__ import annotations

from pathlib import Path

import numpy as np
import pandas as pd

from .filament import FilamentState, ZGrid

SNAPSHOT_COLUMNS = ["z", "psi_real", "psi_imag"]


# ---------------------------------------------------------------------------
# File readers
# ---------------------------------------------------------------------------

def read_text(path: str | Path) -> str:
    """Read a UTF-8 text file (scenario documents)."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"File not found: {path}")
    return path.read_text(encoding="utf-8")


def snapshot_frame(state: FilamentState) -> pd.DataFrame:
    return pd.DataFrame({
        "z": state.z,
        "psi_real": state.psi.real,
        "psi_imag": state.psi.imag,
    }, columns=SNAPSHOT_COLUMNS)


def read_snapshot(path: str | Path, grid: ZGrid, t: float = 0.0) -> FilamentState:
    """Read a ψ snapshot written by ``reporting.write_outputs``.

    Values are parsed with round-trip precision, so a written state comes
    back bit for bit. The snapshot must sample exactly the given grid.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"File not found: {path}")

    df = pd.read_csv(path, float_precision="round_trip")
    missing = [c for c in SNAPSHOT_COLUMNS if c not in df.columns]
    if missing:
        raise ValueError(f"{path}: snapshot is missing columns {missing}")
    if len(df) != grid.n:
        raise ValueError(f"{path}: snapshot has {len(df)} rows, grid expects {grid.n}")

    z = df["z"].to_numpy(dtype=float)
    if not np.allclose(z, grid.z, rtol=0.0, atol=1e-12 * grid.length):
        raise ValueError(f"{path}: snapshot z column does not match the configured grid")

    psi = np.empty(grid.n, dtype=complex)
    psi.real = df["psi_real"].to_numpy(dtype=float)
    psi.imag = df["psi_imag"].to_numpy(dtype=float)
    return FilamentState(grid=grid, psi=psi, t=t)
