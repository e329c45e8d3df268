"""
Filament state — periodic z-grid, complex filament ψ = x + iy, Kelvin-wave
constructors, and the volume/normalization machinery every other module uses.
"""
from __future__ import annotations

import logging
import math
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from . import spectral

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Pydantic models
# ---------------------------------------------------------------------------

class ZGrid(BaseModel):
    """Uniform periodic grid on [0, L). N and L are canonical, Δz is derived."""
    model_config = ConfigDict(frozen=True)

    n: int = Field(ge=8)
    length: float = Field(gt=0)
    periodic: Literal[True] = True

    @field_validator("n")
    @classmethod
    def _even(cls, v: int) -> int:
        if v % 2:
            raise ValueError(f"point count must be even, got {v}")
        return v

    @property
    def spacing(self) -> float:
        return self.length / self.n

    @property
    def z(self) -> np.ndarray:
        return np.arange(self.n) * self.spacing

    @property
    def wavenumbers(self) -> np.ndarray:
        return spectral.wavenumbers(self.n, self.length)

    @property
    def max_resolved_mode(self) -> int:
        return self.n // 2 - 1

    def wavenumber(self, m: int) -> float:
        return 2.0 * math.pi * m / self.length


class FluidParams(BaseModel):
    """Dimensional constants of the model (SI). ``log_factor`` is ln ε itself."""
    model_config = ConfigDict(frozen=True)

    circulation: float = Field(default=1.0, gt=0)
    density: float = Field(default=1.0, gt=0)
    log_factor: float = Field(default=0.8, gt=0)
    core_radius: float = Field(default=1e-4, gt=0)

    @property
    def lia_coefficient(self) -> float:
        """Γ ln ε / 4π, the coefficient of the linear Schrödinger-like equation."""
        return self.circulation * self.log_factor / (4.0 * math.pi)

    @classmethod
    def helium4(cls, density: float = 145.0) -> "FluidParams":
        # density is not part of the He-4 estimate; 145 kg/m³ is the liquid value
        return cls(circulation=9.97e-8, density=density, log_factor=0.8, core_radius=1e-10)


class KelvinWaveSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    amplitude: float = Field(ge=0)
    mode: int
    phase: float = 0.0


class FilamentState(BaseModel):
    """Complex samples psi_j = x_j + i y_j at z_j = j Δz, time stamp t.

    Immutable: the sample array is copied on construction and made read-only.
    """
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    grid: ZGrid
    psi: np.ndarray
    t: float = 0.0

    @model_validator(mode="after")
    def _check_samples(self) -> "FilamentState":
        psi = np.array(self.psi, dtype=complex)
        if psi.shape != (self.grid.n,):
            raise ValueError(
                f"psi must have exactly {self.grid.n} entries, got shape {psi.shape}"
            )
        if not np.all(np.isfinite(psi)):
            raise ValueError("psi contains non-finite samples")
        psi.flags.writeable = False
        object.__setattr__(self, "psi", psi)
        return self

    @property
    def z(self) -> np.ndarray:
        return self.grid.z

    def with_psi(self, psi: np.ndarray, t: float | None = None) -> "FilamentState":
        return FilamentState(grid=self.grid, psi=psi, t=self.t if t is None else t)


# ---------------------------------------------------------------------------
# Core functions
# ---------------------------------------------------------------------------

def make_kelvin_wave(spec: KelvinWaveSpec, grid: ZGrid) -> FilamentState:
    """Sample psi(z) = a exp(i(kz + φ0)) with k = 2πm/L at t = 0."""
    if abs(spec.mode) > grid.max_resolved_mode:
        raise ValueError(
            f"mode index {spec.mode} is not resolvable on a {grid.n}-point grid "
            f"(|m| must be <= {grid.max_resolved_mode})"
        )
    k = grid.wavenumber(spec.mode)
    psi = spec.amplitude * np.exp(1j * (k * grid.z + spec.phase))
    return FilamentState(grid=grid, psi=psi, t=0.0)


def superpose(*states: FilamentState) -> FilamentState:
    """Pointwise sum of states on one grid; the time stamp of the first is kept."""
    if not states:
        raise ValueError("superpose needs at least one state")
    grid = states[0].grid
    for s in states[1:]:
        if s.grid != grid:
            raise ValueError("cannot superpose states on different grids")
    return states[0].with_psi(sum(s.psi for s in states))


def volume(state: FilamentState) -> float:
    """V = π Σ|psi_j|² Δz, the volume of the tube swept by the filament."""
    return float(math.pi * np.sum(np.abs(state.psi) ** 2) * state.grid.spacing)


def normalize(state: FilamentState) -> FilamentState:
    """psi_n = sqrt(π/V) psi, so that Σ|psi_n|² Δz = 1."""
    v = volume(state)
    if v == 0.0:
        raise ValueError("cannot normalize a zero-volume state (straight vortex line)")
    return state.with_psi(math.sqrt(math.pi / v) * state.psi)


def recenter(state: FilamentState) -> FilamentState:
    """Shift the filament so the discrete mean of psi vanishes (∫psi dz = 0)."""
    return state.with_psi(state.psi - state.psi.mean())
