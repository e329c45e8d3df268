"""
Observables — momentum, angular momentum, energy, effective Planck constant and
mass of a filament state, plus the operator identities that tie them together.
"""
from __future__ import annotations

import logging
import math
from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy import constants

from . import spectral
from .filament import FilamentState, FluidParams, volume

logger = logging.getLogger(__name__)

EnergyMode = Literal["LIA", "LLIA"]

# relative size of the discarded imaginary part of Σψ*ψ′Δz
MOMENTUM_RESIDUAL_TOL = 1e-10

HE4_ATOM_MASS = 6.6464731e-27  # kg


# ---------------------------------------------------------------------------
# Pydantic models
# ---------------------------------------------------------------------------

class ObservableSet(BaseModel):
    model_config = ConfigDict(frozen=True)

    volume: float
    p_z: float
    l_z: float
    energy: float
    hbar_eff: float
    m_eff: float
    t: float

    def as_row(self) -> dict:
        return {
            "t": self.t,
            "V": self.volume,
            "p_z": self.p_z,
            "L_z": self.l_z,
            "H": self.energy,
            "hbar_eff": self.hbar_eff,
            "m_eff": self.m_eff,
        }


class QuantizedVortexParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    atom_mass: float = Field(default=HE4_ATOM_MASS, gt=0)
    atom_count: int = Field(default=1, ge=1)
    planck: float = Field(default=constants.h, gt=0)


class QuantizedVortexConstants(BaseModel):
    model_config = ConfigDict(frozen=True)

    circulation: float
    density: float
    hbar_eff: float
    m_eff: float


class DeBroglieCheck(BaseModel):
    model_config = ConfigDict(frozen=True)

    p_z: float
    hbar_k: float
    gap: float


# ---------------------------------------------------------------------------
# Effective constants
# ---------------------------------------------------------------------------

def effective_planck(params: FluidParams, volume_: float) -> float:
    """ħ_eff = ΓρV/2π."""
    return params.circulation * params.density * volume_ / (2.0 * math.pi)


def effective_mass(params: FluidParams, volume_: float) -> float:
    """m_eff = ρV/ln ε."""
    return params.density * volume_ / params.log_factor


def quantized_vortex_constants(
    qv: QuantizedVortexParams,
    volume_: float,
    log_factor: float,
) -> QuantizedVortexConstants:
    """Γ = h/m, ρ = nm/V, ħ_eff = nħ, m_eff = nm/ln ε for n atoms of mass m."""
    if volume_ <= 0:
        raise ValueError(f"volume must be positive, got {volume_}")
    if log_factor <= 0:
        raise ValueError(f"log factor must be positive, got {log_factor}")
    n, m = qv.atom_count, qv.atom_mass
    return QuantizedVortexConstants(
        circulation=qv.planck / m,
        density=n * m / volume_,
        hbar_eff=n * (qv.planck / (2.0 * math.pi)),
        m_eff=n * m / log_factor,
    )


# ---------------------------------------------------------------------------
# Momentum and angular momentum
# ---------------------------------------------------------------------------

def momentum_z(state: FilamentState, params: FluidParams) -> float:
    """p_z = −i(Γρ/2) Σ ψ*ψ′ Δz. The imaginary part must vanish to round-off."""
    psi = state.psi
    d1 = spectral.derivative(psi, state.grid.length, 1)
    dz = state.grid.spacing
    prefactor = 0.5 * params.circulation * params.density
    value = -1j * prefactor * np.sum(np.conj(psi) * d1) * dz
    scale = prefactor * np.sum(np.abs(psi) * np.abs(d1)) * dz
    if scale > 0 and abs(value.imag) > MOMENTUM_RESIDUAL_TOL * scale:
        raise ValueError(
            f"momentum sum has imaginary residual {value.imag!r} "
            f"(relative {abs(value.imag) / scale:.3e}); state is not periodic or is corrupted"
        )
    return float(value.real)


def momentum_loop_integral(state: FilamentState, params: FluidParams) -> float:
    """(Γρ/2) Σ (x Δy − y Δx) with centred differences; agrees with momentum_z to O(Δz²)."""
    x, y = state.psi.real, state.psi.imag
    dx = 0.5 * (np.roll(x, -1) - np.roll(x, 1))
    dy = 0.5 * (np.roll(y, -1) - np.roll(y, 1))
    return float(0.5 * params.circulation * params.density * np.sum(x * dy - y * dx))


def angular_momentum_z(state: FilamentState, params: FluidParams) -> float:
    """L_z = −(Γρ/2) Σ|ψ|²Δz = −ΓρV/2π (straight-line part subtracted)."""
    return float(
        -0.5 * params.circulation * params.density
        * np.sum(np.abs(state.psi) ** 2) * state.grid.spacing
    )


def de_broglie_check(state: FilamentState, params: FluidParams) -> DeBroglieCheck:
    """Compare p_z with ħ_eff·k of the dominant mode."""
    mode, share = spectral.dominant_mode(state.psi)
    if share <= 0.999:
        raise ValueError(
            f"de Broglie check needs a single-mode state; dominant mode {mode} "
            f"carries only {share:.6f} of the power"
        )
    p = momentum_z(state, params)
    hbar_k = effective_planck(params, volume(state)) * state.grid.wavenumber(mode)
    if p == 0.0:
        gap = 0.0 if hbar_k == 0.0 else math.inf
    else:
        gap = abs(p - hbar_k) / abs(p)
    return DeBroglieCheck(p_z=p, hbar_k=hbar_k, gap=gap)


def commutator_check(test_state: FilamentState, params: FluidParams) -> float:
    """max |([ẑ,p̂] − iħ_eff)ψ| / max|ψ| over the interior of the grid.

    p̂ = −iħ_eff ∂/∂z with ħ_eff from the test state's own volume. The outer
    eighth of the grid on each side is excluded; ẑ is not periodic, so the
    result is only meaningful for states that vanish near the seam.
    """
    psi = np.asarray(test_state.psi)
    peak = float(np.max(np.abs(psi)))
    if peak == 0.0:
        return 0.0
    grid = test_state.grid
    hbar = effective_planck(params, volume(test_state))
    z = grid.z

    def p_op(f: np.ndarray) -> np.ndarray:
        return -1j * hbar * spectral.derivative(f, grid.length, 1)

    deviation = z * p_op(psi) - p_op(z * psi) - 1j * hbar * psi
    margin = grid.n // 8
    interior = deviation[margin:grid.n - margin]
    return float(np.max(np.abs(interior)) / peak)


# ---------------------------------------------------------------------------
# Energy and Hamiltonian
# ---------------------------------------------------------------------------

def energy(state: FilamentState, params: FluidParams, mode: EnergyMode = "LLIA") -> float:
    """LIA: (ρΓ² ln ε/4π) Σ√(1+|ψ′|²)Δz, straight-line baseline included.
    LLIA: (ρΓ² ln ε/8π) Σ|ψ′|²Δz, the quadratic change in energy."""
    d1 = spectral.derivative(state.psi, state.grid.length, 1)
    dz = state.grid.spacing
    scale = params.density * params.circulation ** 2 * params.log_factor / math.pi
    if mode == "LIA":
        return float(scale / 4.0 * np.sum(np.sqrt(1.0 + np.abs(d1) ** 2)) * dz)
    if mode == "LLIA":
        return float(scale / 8.0 * np.sum(np.abs(d1) ** 2) * dz)
    raise ValueError(f"unknown energy mode {mode!r} (expected 'LIA' or 'LLIA')")


def hamiltonian_apply(
    state: FilamentState,
    params: FluidParams,
    volume_: Optional[float] = None,
) -> np.ndarray:
    """Ĥψ = −(ρVΓ² ln ε / 8π²) ψ″ with V frozen (default: V of ``state``)."""
    v = volume(state) if volume_ is None else volume_
    if v <= 0.0:
        raise ValueError("Hamiltonian needs V > 0; the straight vortex line has zero volume")
    coeff = params.density * v * params.circulation ** 2 * params.log_factor / (8.0 * math.pi ** 2)
    return -coeff * spectral.derivative(state.psi, state.grid.length, 2)


def hamiltonian_expectation(state: FilamentState, params: FluidParams) -> float:
    """⟨ψ_n|Ĥ|ψ_n⟩ with ψ_n = √(π/V)ψ and Ĥ built from the V of ``state``."""
    v = volume(state)
    if v == 0.0:
        raise ValueError("Hamiltonian needs V > 0; the straight vortex line has zero volume")
    scale = math.sqrt(math.pi / v)
    psi_n = state.with_psi(scale * state.psi)
    h_psi = hamiltonian_apply(psi_n, params, volume_=v)
    return float(np.real(np.sum(np.conj(psi_n.psi) * h_psi)) * state.grid.spacing)


def evaluate(state: FilamentState, params: FluidParams) -> ObservableSet:
    v = volume(state)
    return ObservableSet(
        volume=v,
        p_z=momentum_z(state, params),
        l_z=angular_momentum_z(state, params),
        energy=energy(state, params, "LLIA"),
        hbar_eff=effective_planck(params, v),
        m_eff=effective_mass(params, v),
        t=state.t,
    )
