"""
Evolution — time steppers for the nonlinear LIA equation and its linear
Schrödinger form, dispersion relations, and the LLIA validity horizon.

Nonlinear:  ∂ψ/∂t = i c (ψ′ / √(1+|ψ′|²))′      (RK4, spectral z-derivatives)
Linear:     ∂ψ/∂t = i c ψ″                       (exact spectral phase step)
with c = Γ ln ε / 4π.
"""
from __future__ import annotations

import logging
import math
from typing import Callable, List, Literal, Sequence, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field
from scipy import stats

from . import spectral
from .filament import FilamentState, FluidParams, KelvinWaveSpec, ZGrid, make_kelvin_wave

logger = logging.getLogger(__name__)


class SolverBlowUp(RuntimeError):
    """Raised when the nonlinear stepper produces non-finite samples."""

    def __init__(self, step: int):
        super().__init__(f"nonlinear solver produced non-finite values at step {step}")
        self.step = step


# ---------------------------------------------------------------------------
# Pydantic models
# ---------------------------------------------------------------------------

class SolverConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    dt: float = Field(gt=0, allow_inf_nan=False)
    steps: int = Field(ge=1)
    scheme: Literal["nonlinear-rk4", "linear-spectral"] = "linear-spectral"
    dealias: bool = True  # nonlinear only

    @property
    def total_time(self) -> float:
        return self.dt * self.steps


class DispersionPoint(BaseModel):
    model_config = ConfigDict(frozen=True)

    k: float
    omega_n: float
    omega_l: float
    amplitude: float


class ConvergenceResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    dts: List[float]
    errors: List[float]
    orders: List[float]

    @property
    def order(self) -> float:
        return float(np.mean(self.orders))


# ---------------------------------------------------------------------------
# Right-hand sides and raw-array steppers
# ---------------------------------------------------------------------------

class _NonlinearRHS:
    """i c (ψ′/√(1+|ψ′|²))′ evaluated spectrally, optionally 2/3-rule masked."""

    def __init__(self, grid: ZGrid, params: FluidParams, dealias: bool):
        self.ik = 1j * grid.wavenumbers
        self.c = params.lia_coefficient
        self.mask = spectral.dealias_mask(grid.n) if dealias else None

    def __call__(self, psi: np.ndarray) -> np.ndarray:
        d1 = np.fft.ifft(self.ik * np.fft.fft(psi))
        flux = d1 / np.sqrt(1.0 + np.abs(d1) ** 2)
        rhs_hat = 1j * self.c * self.ik * np.fft.fft(flux)
        if self.mask is not None:
            rhs_hat = rhs_hat * self.mask
        return np.fft.ifft(rhs_hat)


def _rk4(psi: np.ndarray, dt: float, rhs: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    k1 = rhs(psi)
    k2 = rhs(psi + 0.5 * dt * k1)
    k3 = rhs(psi + 0.5 * dt * k2)
    k4 = rhs(psi + dt * k3)
    return psi + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _linear_multiplier(grid: ZGrid, params: FluidParams, dt: float) -> np.ndarray:
    k = grid.wavenumbers
    return np.exp(-1j * params.lia_coefficient * k * k * dt)


def stable_dt(grid: ZGrid, params: FluidParams) -> float:
    """Recorded RK4 threshold 0.5·Δz²·4π/(Γ ln ε) for the dealiased nonlinear stepper."""
    return 0.5 * grid.spacing ** 2 / params.lia_coefficient


def _warn_if_unstable(grid: ZGrid, params: FluidParams, dt: float) -> None:
    limit = stable_dt(grid, params)
    if dt > limit:
        logger.warning("dt = %g exceeds the RK4 stability threshold %g", dt, limit)


# ---------------------------------------------------------------------------
# Steppers
# ---------------------------------------------------------------------------

def step_linear(state: FilamentState, params: FluidParams, dt: float) -> FilamentState:
    """Exact spectral step: ψ̂_m ← ψ̂_m · exp(−i ω_l(k_m) dt)."""
    mult = _linear_multiplier(state.grid, params, dt)
    psi = np.fft.ifft(mult * np.fft.fft(state.psi))
    return state.with_psi(psi, t=state.t + dt)


def step_nonlinear(
    state: FilamentState,
    params: FluidParams,
    dt: float,
    dealias: bool = True,
    step_index: int = 1,
    check_stability: bool = True,
) -> FilamentState:
    """One classical RK4 step of the nonlinear LIA equation.

    Raises SolverBlowUp carrying ``step_index`` if any sample turns non-finite.
    """
    if check_stability:
        _warn_if_unstable(state.grid, params, dt)
    rhs = _NonlinearRHS(state.grid, params, dealias)
    psi = _rk4(np.asarray(state.psi), dt, rhs)
    if not np.all(np.isfinite(psi)):
        raise SolverBlowUp(step_index)
    return state.with_psi(psi, t=state.t + dt)


def _stepper(
    params: FluidParams,
    config: SolverConfig,
    grid: ZGrid,
) -> Callable[[FilamentState, int], FilamentState]:
    """Bind ``config`` to step_linear or step_nonlinear; the stability warning is issued once here."""
    if config.scheme == "linear-spectral":
        return lambda s, step: step_linear(s, params, config.dt)
    _warn_if_unstable(grid, params, config.dt)
    return lambda s, step: step_nonlinear(
        s, params, config.dt, config.dealias, step_index=step, check_stability=False
    )


def run_solver(
    state: FilamentState,
    params: FluidParams,
    config: SolverConfig,
    cadence: int = 1,
) -> List[Tuple[int, FilamentState]]:
    """Integrate ``config.steps`` steps; return (step, state) every ``cadence``
    steps, starting with step 0 and always ending with the final step."""
    if cadence < 1:
        raise ValueError(f"cadence must be >= 1, got {cadence}")
    grid = state.grid
    advance = _stepper(params, config, grid)
    t0 = state.t
    samples: List[Tuple[int, FilamentState]] = [(0, state)]

    logger.info(
        "Integrating %d steps of %s (dt=%g, N=%d, L=%g)",
        config.steps, config.scheme, config.dt, grid.n, grid.length,
    )
    current = state
    for step in range(1, config.steps + 1):
        current = advance(current, step)
        if step % cadence == 0 or step == config.steps:
            # t from the step count, not the accumulated sum
            samples.append((step, current.with_psi(current.psi, t=t0 + step * config.dt)))
    return samples


# ---------------------------------------------------------------------------
# Dispersion and validity
# ---------------------------------------------------------------------------

def dispersion(a: float, k: float, params: FluidParams) -> DispersionPoint:
    if k < 0 or a < 0:
        raise ValueError(f"dispersion needs k >= 0 and a >= 0, got k={k}, a={a}")
    omega_l = params.lia_coefficient * k * k
    omega_n = omega_l / math.sqrt(1.0 + (a * k) ** 2)
    return DispersionPoint(k=k, omega_n=omega_n, omega_l=omega_l, amplitude=a)


def characteristic_time(a: float, k: float, params: FluidParams) -> float:
    """T₀ = 2π² / (k²Γ ln ε (1 − 1/√(1+a²k²))), the time to a π/2 phase gap."""
    if a <= 0 or k <= 0:
        raise ValueError(
            f"characteristic time diverges for a={a}, k={k} (both must be > 0)"
        )
    x = (a * k) ** 2
    s = math.sqrt(1.0 + x)
    gap = x / (s * (s + 1.0))  # 1 - 1/s without cancellation
    return 2.0 * math.pi ** 2 / (k * k * params.circulation * params.log_factor * gap)


def llia_amplitude_bound(k: float, T0: float, params: FluidParams) -> float:
    """Largest amplitude whose characteristic time is at least T0."""
    x = k * k * T0 * params.circulation * params.log_factor
    if x <= 2.0 * math.pi ** 2:
        raise ValueError(
            f"k²T₀Γlnε = {x!r} must exceed 2π² = {2.0 * math.pi ** 2!r}"
        )
    return 2.0 * math.pi * math.sqrt(x - math.pi ** 2) / (k * (x - 2.0 * math.pi ** 2))


def z_drift(state: FilamentState, params: FluidParams) -> np.ndarray:
    """Pointwise axial drift c·Im(conj(ψ′)ψ″)/(1+|ψ′|²)^{3/2} of the grid points."""
    length = state.grid.length
    d1 = spectral.derivative(state.psi, length, 1)
    d2 = spectral.derivative(state.psi, length, 2)
    return params.lia_coefficient * np.imag(np.conj(d1) * d2) / (1.0 + np.abs(d1) ** 2) ** 1.5


# ---------------------------------------------------------------------------
# Phase measurements
# ---------------------------------------------------------------------------

def rotation_phase(coefficients: Sequence[complex]) -> np.ndarray:
    """Rotation phase ωt of a mode: negated unwrapped argument relative to the first sample."""
    # + 0.0 turns a signed-zero real part into +0, so a vanishing mode has phase 0
    arg = np.unwrap(np.angle(np.asarray(coefficients, dtype=complex) + 0.0))
    return -(arg - arg[0])


def measure_frequency(states: Sequence[FilamentState], mode: int) -> float:
    """Least-squares rotation frequency of Fourier mode ``mode`` over a run."""
    if len(states) < 2:
        raise ValueError("need at least two samples to measure a frequency")
    t = np.array([s.t for s in states])
    phase = rotation_phase([spectral.mode_coefficient(s.psi, mode) for s in states])
    return float(stats.linregress(t, phase).slope)


def phase_divergence_experiment(
    spec: KelvinWaveSpec,
    params: FluidParams,
    config: SolverConfig,
    grid: ZGrid,
) -> pd.DataFrame:
    """Evolve one Kelvin wave linearly and nonlinearly side by side.

    Returns a frame with columns t, phase_l, phase_n, phase_gap (= phase_l − phase_n),
    one row per step including t = 0.
    """
    state = make_kelvin_wave(spec, grid)
    advance_l = _stepper(params, config.model_copy(update={"scheme": "linear-spectral"}), grid)
    advance_n = _stepper(params, config.model_copy(update={"scheme": "nonlinear-rk4"}), grid)

    coef_l = np.empty(config.steps + 1, dtype=complex)
    coef_n = np.empty(config.steps + 1, dtype=complex)
    coef_l[0] = coef_n[0] = spectral.mode_coefficient(state.psi, spec.mode)

    lin, non = state, state
    for step in range(1, config.steps + 1):
        lin = advance_l(lin, step)
        non = advance_n(non, step)
        coef_l[step] = spectral.mode_coefficient(lin.psi, spec.mode)
        coef_n[step] = spectral.mode_coefficient(non.psi, spec.mode)

    phase_l = rotation_phase(coef_l)
    phase_n = rotation_phase(coef_n)
    t = np.arange(config.steps + 1) * config.dt
    return pd.DataFrame({
        "t": t,
        "phase_l": phase_l,
        "phase_n": phase_n,
        "phase_gap": phase_l - phase_n,
    })


def convergence_order(
    state: FilamentState,
    params: FluidParams,
    total_time: float,
    dts: Sequence[float],
    dealias: bool = True,
) -> ConvergenceResult:
    """Estimate the RK4 order from dt-halving against a dt_min/16 reference."""
    dts = sorted((float(d) for d in dts), reverse=True)
    if len(dts) < 2:
        raise ValueError("need at least two time steps")

    def final_psi(dt: float) -> np.ndarray:
        steps = int(round(total_time / dt))
        if abs(steps * dt - total_time) > 1e-9 * total_time:
            raise ValueError(f"dt = {dt} does not divide the total time {total_time}")
        cfg = SolverConfig(dt=dt, steps=steps, scheme="nonlinear-rk4", dealias=dealias)
        return np.asarray(run_solver(state, params, cfg, cadence=steps)[-1][1].psi)

    reference = final_psi(dts[-1] / 16.0)
    norm = np.linalg.norm(reference)
    errors = [float(np.linalg.norm(final_psi(dt) - reference) / norm) for dt in dts]
    orders = [
        math.log(errors[i] / errors[i + 1]) / math.log(dts[i] / dts[i + 1])
        for i in range(len(dts) - 1)
    ]
    logger.debug("convergence: dts=%s errors=%s orders=%s", dts, errors, orders)
    return ConvergenceResult(dts=dts, errors=errors, orders=orders)
