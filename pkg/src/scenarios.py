"""
Scenarios — dispatch a validated ScenarioConfig to the numerical modules and
collect a RunRecord (time series, snapshots, run summary, metadata).
"""
from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor, as_completed
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field

from . import __version__, spectral
from .config import FileInitial, KelvinInitial, ScenarioConfig, WavepacketInitial
from .correspondence import (
    WavepacketSpec,
    build_kernel,
    make_wavepacket,
    packet_width,
    propagate_by_quadrature,
    stationary_phase_width,
)
from .evolution import (
    SolverConfig,
    characteristic_time,
    dispersion,
    llia_amplitude_bound,
    measure_frequency,
    phase_divergence_experiment,
    run_solver,
    step_linear,
    z_drift,
)
from .filament import FilamentState, FluidParams, KelvinWaveSpec, ZGrid, make_kelvin_wave, volume
from .induction import (
    biot_savart_velocity,
    curve_from_state,
    effective_log_factor,
    lia_velocity,
    rotation_rate,
)
from .io_readers import read_snapshot
from .observables import (
    commutator_check,
    de_broglie_check,
    effective_mass,
    effective_planck,
    energy,
    evaluate,
    hamiltonian_expectation,
    momentum_loop_integral,
)

logger = logging.getLogger(__name__)

OBSERVABLE_COLUMNS = ["t", "V", "p_z", "L_z", "H", "hbar_eff", "m_eff"]


class ScenarioError(RuntimeError):
    """A numerical module failed while running a scenario."""


class RunRecord(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    scenario: str
    rows: pd.DataFrame
    summary: Dict[str, Any] = Field(default_factory=dict)
    snapshots: Dict[str, FilamentState] = Field(default_factory=dict)
    conserved: List[str] = Field(default_factory=list)
    metadata: Dict[str, Any] = Field(default_factory=dict)
    duration_s: float = 0.0


_Result = Tuple[pd.DataFrame, Dict[str, Any], Dict[str, FilamentState], List[str]]


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------

def build_initial_state(config: ScenarioConfig) -> FilamentState:
    grid = config.grid.to_grid()
    init = config.initial
    if isinstance(init, KelvinInitial):
        return make_kelvin_wave(init.to_spec(), grid)
    if isinstance(init, WavepacketInitial):
        return make_wavepacket(init.to_spec(), grid)
    if isinstance(init, FileInitial):
        return read_snapshot(init.path, grid, t=init.t)
    raise ValueError(f"scenario '{config.scenario}' has no initial state")


def _observable_rows(states: List[FilamentState], params: FluidParams) -> pd.DataFrame:
    return pd.DataFrame([evaluate(s, params).as_row() for s in states], columns=OBSERVABLE_COLUMNS)


def _snapshot_name(step: int) -> str:
    return f"psi_{step:06d}"


def _select_snapshots(samples: List[Tuple[int, FilamentState]], mode: str) -> Dict[str, FilamentState]:
    if mode == "all":
        return {_snapshot_name(step): s for step, s in samples}
    if mode == "final":
        step, s = samples[-1]
        return {_snapshot_name(step): s}
    return {}


def _resolve_workers(section_workers: Optional[int], workers: Optional[int]) -> Optional[int]:
    return section_workers if section_workers is not None else workers


# ---------------------------------------------------------------------------
# Scenario runners
# ---------------------------------------------------------------------------

def _run_evolve(config: ScenarioConfig, workers: Optional[int]) -> _Result:
    params = config.fluid.to_params()
    state = build_initial_state(config)
    samples = run_solver(state, params, config.solver, cadence=config.output.cadence)
    rows = _observable_rows([s for _, s in samples], params)

    final = samples[-1][1]
    drift = z_drift(final, params)
    summary = {
        "steps": config.solver.steps,
        "t_final": final.t,
        "z_drift_mean": float(np.mean(drift)),
        "z_drift_max": float(np.max(np.abs(drift))),
    }
    if config.solver.scheme == "linear-spectral":
        conserved = ["V", "p_z", "L_z", "H"]
    elif isinstance(config.initial, KelvinInitial):
        conserved = ["V"]
    else:
        # volume drift of a generic state is reported, not asserted
        conserved = []
    return rows, summary, _select_snapshots(samples, config.output.snapshots), conserved


def _dispersion_job(
    index: int,
    a: float,
    mode: Optional[int],
    k: float,
    params: FluidParams,
    grid: ZGrid,
    solver: Optional[SolverConfig],
    measure: bool,
) -> Tuple[int, Dict[str, Any]]:
    point = dispersion(a, k, params)
    row: Dict[str, Any] = {"k": point.k, "a": a, "omega_n": point.omega_n, "omega_l": point.omega_l}
    if measure:
        state = make_kelvin_wave(KelvinWaveSpec(amplitude=a, mode=mode), grid)
        nonlinear = solver.model_copy(update={"scheme": "nonlinear-rk4"})
        samples = [s for _, s in run_solver(state, params, nonlinear)]
        if a > 0:
            measured = measure_frequency(samples, mode)
            row["omega_measured"] = measured
            row["rel_error"] = abs(measured - point.omega_n) / point.omega_n if point.omega_n else 0.0
        else:
            row["omega_measured"] = float("nan")
            row["rel_error"] = float("nan")
    return index, row


def _run_dispersion(config: ScenarioConfig, workers: Optional[int]) -> _Result:
    params = config.fluid.to_params()
    grid = config.grid.to_grid()
    sweep = config.sweep
    if sweep.modes is not None:
        axis = [(m, grid.wavenumber(m)) for m in sweep.modes]
    else:
        axis = [(None, k) for k in sweep.wavenumbers]
    jobs = [
        (idx, a, mode, abs(k))
        for idx, ((mode, k), a) in enumerate((mk, a) for mk in axis for a in sweep.amplitudes)
    ]
    n_workers = _resolve_workers(sweep.workers, workers)
    logger.info("Dispersion sweep: %d points (measure=%s, workers=%s)", len(jobs), sweep.measure, n_workers)

    results: Dict[int, Dict[str, Any]] = {}
    if n_workers is None or n_workers <= 1:
        for idx, a, mode, k in jobs:
            results[idx] = _dispersion_job(idx, a, mode, k, params, grid, config.solver, sweep.measure)[1]
    else:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            futures = [
                pool.submit(_dispersion_job, idx, a, mode, k, params, grid, config.solver, sweep.measure)
                for idx, a, mode, k in jobs
            ]
            for future in as_completed(futures):
                idx, row = future.result()
                results[idx] = row

    # Ergebnisse in Sweep-Reihenfolge zusammenführen
    rows = pd.DataFrame([results[idx] for idx in sorted(results)])
    summary: Dict[str, Any] = {"points": len(rows)}
    if sweep.measure and "rel_error" in rows:
        summary["max_rel_error"] = float(rows["rel_error"].max())
    return rows, summary, {}, []


def _run_validity(config: ScenarioConfig, workers: Optional[int]) -> _Result:
    params = config.fluid.to_params()
    v = config.validity
    amplitudes = v.amplitudes or [v.amplitude]
    rows = []
    for a in amplitudes:
        point = dispersion(a, v.k, params)
        rows.append({
            "a": a,
            "k": v.k,
            "ak": a * v.k,
            "omega_n": point.omega_n,
            "omega_l": point.omega_l,
            "T0": characteristic_time(a, v.k, params),
        })
    t0 = characteristic_time(v.amplitude, v.k, params)
    bound = llia_amplitude_bound(v.k, v.t0, params)
    summary = {
        "amplitude": v.amplitude,
        "k": v.k,
        "T0": t0,
        "T0_in_band_10_100s": 10.0 <= t0 <= 100.0,
        "t0_target": v.t0,
        "amplitude_bound": bound,
        "bound_in_range_1e-6_1e-4m": 1e-6 <= bound <= 1e-4,
    }
    logger.info("T0 = %.6g s, amplitude bound at T0=%g s: %.6g m", t0, v.t0, bound)
    return pd.DataFrame(rows), summary, {}, []


def _run_observables(config: ScenarioConfig, workers: Optional[int]) -> _Result:
    params = config.fluid.to_params()
    state = build_initial_state(config)
    obs = evaluate(state, params)
    rows = _observable_rows([state], params)
    summary: Dict[str, Any] = {
        "H_LIA": energy(state, params, "LIA"),
        "p_z_loop_integral": momentum_loop_integral(state, params),
        "L_z_plus_hbar_eff": obs.l_z + obs.hbar_eff,
        "hbar_over_2m_minus_c": (
            obs.hbar_eff / (2.0 * obs.m_eff) - params.lia_coefficient if obs.m_eff > 0 else None
        ),
    }
    if obs.volume > 0:
        summary["hamiltonian_expectation"] = hamiltonian_expectation(state, params)
        mode, share = spectral.dominant_mode(state.psi)
        if share > 0.999:
            check = de_broglie_check(state, params)
            k = state.grid.wavenumber(mode)
            summary["de_broglie_gap"] = check.gap
            summary["E_minus_hbar_omega_l"] = obs.energy - obs.hbar_eff * params.lia_coefficient * k * k
            summary["E_minus_p2_over_2m"] = obs.energy - obs.p_z ** 2 / (2.0 * obs.m_eff)
    if isinstance(config.initial, WavepacketInitial):
        summary["commutator_deviation"] = commutator_check(state, params)
    return rows, summary, _select_snapshots([(0, state)], config.output.snapshots), []


def _quadrature_deviations(
    spec: WavepacketSpec,
    states: List[FilamentState],
    params: FluidParams,
    volume_: float,
) -> List[float]:
    """max |ψ_kernel − ψ_quadrature| / max |ψ₀| at every sample after the first."""
    hbar, mass = effective_planck(params, volume_), effective_mass(params, volume_)
    grid = states[0].grid
    peak = float(np.max(np.abs(states[0].psi)))
    out = [0.0]
    for s in states[1:]:
        reference = propagate_by_quadrature(spec, grid, s.t - states[0].t, hbar, mass)
        out.append(float(np.max(np.abs(s.psi - reference))) / peak)
    return out


def _run_propagate(config: ScenarioConfig, workers: Optional[int]) -> _Result:
    params = config.fluid.to_params()
    section = config.propagate
    state = build_initial_state(config)
    v = volume(state)
    kernel = build_kernel(state.grid, section.dt, params, v, section.slices)

    states = [state]
    deviations = [0.0]
    by_kernel, by_spectrum = state, state
    for _ in range(section.steps):
        by_kernel = kernel.apply(by_kernel)
        by_spectrum = step_linear(by_spectrum, params, section.dt)
        peak = float(np.max(np.abs(by_spectrum.psi))) or 1.0
        deviations.append(float(np.max(np.abs(by_kernel.psi - by_spectrum.psi))) / peak)
        states.append(by_kernel)

    rows = _observable_rows(states, params)
    rows["kernel_vs_spectral"] = deviations
    if isinstance(config.initial, WavepacketInitial):
        rows["kernel_vs_quadrature"] = _quadrature_deviations(config.initial.to_spec(), states, params, v)

    grid = state.grid
    resolved = range(-(grid.n // 3), grid.n // 3 + 1)
    phase_errors = []
    for m in resolved:
        omega = params.lia_coefficient * grid.wavenumber(m) ** 2
        target = np.exp(-1j * omega * section.dt)
        phase_errors.append(abs(np.angle(np.exp(1j * kernel.eigenphase(m)) / target)))
    obs = evaluate(state, params)
    summary = {
        "unitarity_defect": kernel.unitarity_defect(),
        "max_eigenphase_error": float(max(phase_errors)),
        "stationary_phase_width": stationary_phase_width(section.dt / section.slices, obs.hbar_eff, obs.m_eff),
        "max_kernel_vs_spectral": float(max(deviations)),
    }
    if "kernel_vs_quadrature" in rows:
        summary["max_kernel_vs_quadrature"] = float(rows["kernel_vs_quadrature"].max())
    if isinstance(config.initial, WavepacketInitial):
        summary["final_packet_width"] = packet_width(states[-1])[1]
    return rows, summary, _select_snapshots([(section.steps, states[-1])], config.output.snapshots), ["V", "p_z", "L_z", "H"]


def _run_biot_savart(config: ScenarioConfig, workers: Optional[int]) -> _Result:
    params = config.fluid.to_params()
    state = build_initial_state(config)
    section = config.biot_savart
    n_workers = _resolve_workers(section.workers, workers)

    v_bs = biot_savart_velocity(curve_from_state(state), params, section.periods, n_workers)
    v_lia = lia_velocity(state, params)
    cosine = v_bs.cosine_similarity(v_lia)
    rows = pd.DataFrame({
        "z": state.z,
        "cosine": cosine,
        "speed_bs": v_bs.magnitude,
        "speed_lia": v_lia.magnitude,
    })

    k = abs(state.grid.wavenumber(config.initial.mode))
    omega_bs = rotation_rate(v_bs, state)
    summary: Dict[str, Any] = {
        "min_cosine": float(np.min(cosine)),
        "omega_bs": omega_bs,
        "omega_lia": rotation_rate(v_lia, state),
    }
    if k > 0 and config.initial.amplitude > 0:
        lam = effective_log_factor(state, params, velocity=v_bs)
        reference = math.log(1.0 / (k * params.core_radius))
        summary.update({
            "lambda_fit": lam,
            "ln_1_over_k_sigma": reference,
            "lambda_ratio": lam / reference if reference else None,
        })
    return rows, summary, {}, []


def _run_phase_divergence(config: ScenarioConfig, workers: Optional[int]) -> _Result:
    params = config.fluid.to_params()
    grid = config.grid.to_grid()
    spec = config.initial.to_spec()
    rows = phase_divergence_experiment(spec, params, config.solver, grid)

    k = abs(grid.wavenumber(spec.mode))
    point = dispersion(spec.amplitude, k, params)
    summary: Dict[str, Any] = {"omega_l_minus_omega_n": point.omega_l - point.omega_n}
    if len(rows) >= 2:
        summary["fitted_gap_slope"] = float(np.polyfit(rows["t"], rows["phase_gap"], 1)[0])
    if spec.amplitude > 0 and k > 0:
        t0 = characteristic_time(spec.amplitude, k, params)
        summary["T0"] = t0
        if rows["t"].iloc[-1] >= t0:
            summary["gap_at_T0"] = float(np.interp(t0, rows["t"], rows["phase_gap"]))
    return rows, summary, {}, []


_RUNNERS: Dict[str, Callable[[ScenarioConfig, Optional[int]], _Result]] = {
    "evolve": _run_evolve,
    "dispersion": _run_dispersion,
    "validity": _run_validity,
    "observables": _run_observables,
    "propagate": _run_propagate,
    "biot-savart-compare": _run_biot_savart,
    "phase-divergence": _run_phase_divergence,
}


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

def run_scenario(config: ScenarioConfig, workers: Optional[int] = None) -> RunRecord:
    """Run one scenario. Output depends only on ``config``; ``workers`` only
    changes how sweeps and Biot–Savart blocks are scheduled."""
    tag = config.scenario
    logger.info("━━━ Scenario: %s ━━━", tag)
    start = time.perf_counter()
    try:
        rows, summary, snapshots, conserved = _RUNNERS[tag](config, workers)
    except FileNotFoundError:
        raise
    except (ValueError, RuntimeError) as exc:
        raise ScenarioError(f"scenario '{tag}' failed: {exc}") from exc
    duration = time.perf_counter() - start

    metadata = {
        "version": __version__,
        "scenario": tag,
        "config": config.model_dump(mode="json"),
        "summary": summary,
    }
    logger.info("Scenario '%s' produced %d rows in %.2f s", tag, len(rows), duration)
    return RunRecord(
        scenario=tag,
        rows=rows,
        summary=summary,
        snapshots=snapshots,
        conserved=conserved,
        metadata=metadata,
        duration_s=duration,
    )
