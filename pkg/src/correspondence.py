"""
Correspondence — the vortex line as a free quantum particle with ħ_eff and
m_eff: plane waves, the Gaussian propagator, the discretized path-integral
kernel on the z-grid, and free wavepacket spreading.
"""
from __future__ import annotations

import logging
import math
from typing import Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.integrate import trapezoid

from . import spectral
from .evolution import SolverConfig, step_linear
from .filament import FilamentState, FluidParams, ZGrid
from .observables import effective_mass, effective_planck

logger = logging.getLogger(__name__)

SEAM_TOLERANCE = 1e-12

ArrayLike = Union[float, np.ndarray]


# ---------------------------------------------------------------------------
# Pydantic models
# ---------------------------------------------------------------------------

class WavepacketSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    center: float
    width: float = Field(gt=0)
    carrier_mode: int = 0
    amplitude: float = Field(default=0.1, gt=0)


class PropagatorKernel(BaseModel):
    """K[j′, j] ≈ ⟨z_j′|U(dt)|z_j⟩·Δz on the grid; acts as ψ ← K @ ψ."""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    grid: ZGrid
    dt: float
    slices: int = 1
    entries: np.ndarray

    @model_validator(mode="after")
    def _check_entries(self) -> "PropagatorKernel":
        k = np.array(self.entries, dtype=complex)
        if k.shape != (self.grid.n, self.grid.n):
            raise ValueError(f"kernel must be {self.grid.n}x{self.grid.n}, got {k.shape}")
        k.flags.writeable = False
        object.__setattr__(self, "entries", k)
        return self

    def apply(self, state: FilamentState) -> FilamentState:
        if state.grid != self.grid:
            raise ValueError("state and kernel live on different grids")
        return state.with_psi(self.entries @ state.psi, t=state.t + self.dt)

    def _fourier_matrix(self) -> np.ndarray:
        f = np.fft.fft(np.eye(self.grid.n), norm="ortho")
        return f @ self.entries @ f.conj().T

    def unitarity_defect(self, band_limited: bool = True) -> float:
        """max |K†K − I|, restricted to modes |m| ≤ N/3 when ``band_limited``."""
        khat = self._fourier_matrix()
        gram = khat.conj().T @ khat - np.eye(self.grid.n)
        if band_limited:
            keep = spectral.dealias_mask(self.grid.n)
            gram = gram[np.ix_(keep, keep)]
        return float(np.max(np.abs(gram)))

    def eigenphase(self, mode: int) -> float:
        """Phase of ⟨e_m|K|e_m⟩ for the plane wave of signed index ``mode``."""
        e = np.exp(1j * self.grid.wavenumber(mode) * self.grid.z) / math.sqrt(self.grid.n)
        return float(np.angle(np.vdot(e, self.entries @ e)))


# ---------------------------------------------------------------------------
# Plane waves and the continuum propagator
# ---------------------------------------------------------------------------

def plane_wave_overlap(p: ArrayLike, z: ArrayLike, hbar_eff: float) -> ArrayLike:
    """⟨z|p⟩ = exp(ipz/ħ_eff)/√(2πħ_eff); ⟨p|z⟩ is its conjugate."""
    if hbar_eff <= 0:
        raise ValueError(f"hbar_eff must be positive, got {hbar_eff}")
    value = np.exp(1j * np.multiply(p, z) / hbar_eff) / math.sqrt(2.0 * math.pi * hbar_eff)
    return complex(value) if np.ndim(value) == 0 else value


def analytic_propagator(
    z_from: ArrayLike,
    z_to: ArrayLike,
    dt: float,
    hbar_eff: float,
    m_eff: float,
) -> ArrayLike:
    """Free-particle kernel √(m/(2πiħ dt))·exp(im(z_to − z_from)²/(2ħ dt)).

    Principal branch: √i = e^{iπ/4}, so the prefactor phase is −π/4·sign(dt).
    """
    if dt == 0:
        raise ValueError("propagator at dt = 0 is a delta function and not representable")
    amplitude = math.sqrt(m_eff / (2.0 * math.pi * hbar_eff * abs(dt)))
    prefactor = amplitude * np.exp(-1j * math.pi / 4.0 * math.copysign(1.0, dt))
    dz = np.subtract(z_to, z_from)
    value = prefactor * np.exp(1j * m_eff * dz * dz / (2.0 * hbar_eff * dt))
    return complex(value) if np.ndim(value) == 0 else value


def stationary_phase_width(dt: float, hbar_eff: float, m_eff: float) -> float:
    """Length over which the kernel phase m z²/(2ħ dt) advances by π: √(2πħ|dt|/m)."""
    return math.sqrt(2.0 * math.pi * hbar_eff * abs(dt) / m_eff)


# ---------------------------------------------------------------------------
# Discretized kernel
# ---------------------------------------------------------------------------

def build_kernel(
    grid: ZGrid,
    dt: float,
    params: FluidParams,
    volume: float,
    slices: int = 1,
) -> PropagatorKernel:
    """Compose ``slices`` single-slice kernels over total time ``dt``.

    One slice of length τ is the momentum sum
        K1[j′, j] = Σ_m ⟨z_j′|p_m⟩ e^{−iω_l(k_m)τ} ⟨p_m|z_j⟩ Δp Δz
    over the grid momenta p_m = ħ_eff k_m, Δp = 2πħ_eff/L. Each slice must be
    resolved: 2Δz ≤ √(2πħ_eff τ/m_eff) ≤ L/2.
    """
    if slices < 1:
        raise ValueError(f"slices must be >= 1, got {slices}")
    if volume <= 0:
        raise ValueError(f"kernel needs V > 0, got {volume}")
    hbar = effective_planck(params, volume)
    mass = effective_mass(params, volume)
    tau = dt / slices
    if tau == 0:
        raise ValueError("kernel time step must be non-zero")
    width = stationary_phase_width(tau, hbar, mass)
    if width < 2.0 * grid.spacing or width > grid.length / 2.0:
        raise ValueError(
            f"slice dt = {tau!r} is not resolved on this grid: stationary-phase width "
            f"{width!r} must lie in [{2.0 * grid.spacing!r}, {grid.length / 2.0!r}]"
        )

    k = grid.wavenumbers
    p = hbar * k
    z = grid.z
    overlap = plane_wave_overlap(p[None, :], z[:, None], hbar)   # ⟨z_j|p_m⟩
    omega = p * p / (2.0 * mass * hbar)
    phase = np.exp(-1j * omega * tau)
    dp = 2.0 * math.pi * hbar / grid.length
    single = (overlap * phase[None, :]) @ overlap.conj().T * dp * grid.spacing
    entries = np.linalg.matrix_power(single, slices)
    logger.debug("kernel: N=%d dt=%g slices=%d width=%g", grid.n, dt, slices, width)
    return PropagatorKernel(grid=grid, dt=dt, slices=slices, entries=entries)


# ---------------------------------------------------------------------------
# Wavepackets
# ---------------------------------------------------------------------------

def seam_ratio(psi: np.ndarray) -> float:
    """Largest boundary sample relative to the peak modulus."""
    peak = float(np.max(np.abs(psi)))
    if peak == 0.0:
        return 0.0
    return max(abs(psi[0]), abs(psi[-1])) / peak


def make_wavepacket(spec: WavepacketSpec, grid: ZGrid) -> FilamentState:
    """ψ = A·exp(−(z−z₀)²/(4σ₀²))·e^{ik₀z}; |ψ|² has standard deviation σ₀."""
    if spec.width < 4.0 * grid.spacing:
        raise ValueError(
            f"packet width {spec.width} is under-resolved (needs >= 4Δz = {4.0 * grid.spacing})"
        )
    if abs(spec.carrier_mode) > grid.max_resolved_mode:
        raise ValueError(f"carrier mode {spec.carrier_mode} is not resolvable on {grid.n} points")
    z = grid.z
    k0 = grid.wavenumber(spec.carrier_mode)
    psi = spec.amplitude * np.exp(-((z - spec.center) ** 2) / (4.0 * spec.width ** 2) + 1j * k0 * z)
    ratio = seam_ratio(psi)
    if ratio >= SEAM_TOLERANCE:
        raise ValueError(f"packet tail at the seam is {ratio:.3e} of the peak (must be < {SEAM_TOLERANCE})")
    return FilamentState(grid=grid, psi=psi, t=0.0)


def packet_width(state: FilamentState) -> tuple[float, float]:
    """(centroid, σ) of the |ψ|²-weighted distribution of z."""
    w = np.abs(state.psi) ** 2
    total = float(np.sum(w))
    if total == 0.0:
        raise ValueError("packet width is undefined for ψ ≡ 0")
    z = state.z
    mean = float(np.sum(w * z) / total)
    var = float(np.sum(w * (z - mean) ** 2) / total)
    return mean, math.sqrt(var)


def propagate_by_quadrature(
    spec: WavepacketSpec,
    grid: ZGrid,
    t: float,
    hbar_eff: float,
    m_eff: float,
    half_window: float = 12.0,
    chunk: int = 64,
) -> np.ndarray:
    """ψ(z_j, t) = ∫ K(y → z_j, t) ψ₀(y) dy on the open line, by trapezoid quadrature.

    ψ₀ is the analytic packet of ``spec`` and y runs over z₀ ± half_window·σ₀.
    The node spacing resolves the fastest local frequency of the integrand,
    m|y − z|/(ħ_eff t) + |k₀|, four times over. Nothing here uses the grid
    momenta, so the result is an independent reference for ``build_kernel``.
    """
    if t == 0:
        raise ValueError("quadrature propagation needs t != 0")
    z = grid.z
    k0 = grid.wavenumber(spec.carrier_mode)
    reach = half_window * spec.width
    lo, hi = spec.center - reach, spec.center + reach
    span = max(abs(float(z[-1]) - lo), abs(hi - float(z[0])))
    f_max = m_eff * span / (hbar_eff * abs(t)) + abs(k0) + 8.0 / spec.width
    nodes = int(math.ceil(4.0 * reach * f_max / math.pi)) + 1
    y = np.linspace(lo, hi, nodes)
    psi0 = spec.amplitude * np.exp(-((y - spec.center) ** 2) / (4.0 * spec.width ** 2) + 1j * k0 * y)

    out = np.empty(grid.n, dtype=complex)
    for start in range(0, grid.n, chunk):
        block = z[start:start + chunk]
        kernel = analytic_propagator(y[None, :], block[:, None], t, hbar_eff, m_eff)
        out[start:start + chunk] = trapezoid(kernel * psi0[None, :], y, axis=1)
    logger.debug("quadrature propagation: %d nodes, t=%g", nodes, t)
    return out


class WavepacketResult(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    series: pd.DataFrame
    seam_reached: bool


def wavepacket_benchmark(
    spec: WavepacketSpec,
    params: FluidParams,
    config: SolverConfig,
    grid: ZGrid,
) -> WavepacketResult:
    """Spread a free packet with the linear stepper and compare with
    σ²(t) = σ₀²(1 + (ħ_eff t / 2m_eff σ₀²)²), where ħ_eff/2m_eff = Γ ln ε/4π.

    The series stops before the first sample whose seam tail reaches 1e-12 of
    the peak; ``seam_reached`` is then set.
    """
    state = make_wavepacket(spec, grid)
    c = params.lia_coefficient
    sigma0 = spec.width

    rows = []
    seam_reached = False
    current = state
    for step in range(config.steps + 1):
        t = step * config.dt
        if step > 0:
            current = step_linear(current, params, config.dt)
        if seam_ratio(current.psi) >= SEAM_TOLERANCE:
            seam_reached = True
            logger.warning("wavepacket reached the periodic seam at t = %g; series truncated", t)
            break
        centroid, sigma = packet_width(current)
        analytic = sigma0 * math.sqrt(1.0 + (c * t / sigma0 ** 2) ** 2)
        rows.append({"t": t, "centroid": centroid, "sigma": sigma, "sigma_analytic": analytic})

    return WavepacketResult(
        series=pd.DataFrame(rows, columns=["t", "centroid", "sigma", "sigma_analytic"]),
        seam_reached=seam_reached,
    )
