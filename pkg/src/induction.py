"""
Induction — desingularized Biot–Savart velocity on a periodic filament, the
local kernel f(z) with its logarithmic polarity fit, and the LIA velocity law.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor, as_completed
from typing import Dict, Literal, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator
from scipy import integrate, stats

from . import spectral
from .filament import FilamentState, FluidParams

logger = logging.getLogger(__name__)

# Target nodes per Biot–Savart work unit. Fixed so that block boundaries, and
# therefore the summation order, do not depend on the worker count.
BLOCK_SIZE = 64


# ---------------------------------------------------------------------------
# Pydantic models
# ---------------------------------------------------------------------------

class Curve3D(BaseModel):
    """Filament nodes (x, y, z), single-valued in z, continued with period L."""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    nodes: np.ndarray
    period: float

    @model_validator(mode="after")
    def _check_nodes(self) -> "Curve3D":
        nodes = np.array(self.nodes, dtype=float)
        if nodes.ndim != 2 or nodes.shape[1] != 3:
            raise ValueError(f"nodes must be an (N, 3) array, got shape {nodes.shape}")
        if nodes.shape[0] < 8:
            raise ValueError(f"a curve needs at least 8 nodes, got {nodes.shape[0]}")
        if not np.all(np.isfinite(nodes)):
            raise ValueError("curve nodes contain non-finite coordinates")
        if self.period <= 0:
            raise ValueError(f"period must be positive, got {self.period}")
        z = nodes[:, 2]
        if np.any(np.diff(z) <= 0):
            raise ValueError("node z must be strictly increasing within one period")
        if z[-1] - z[0] >= self.period:
            raise ValueError(
                f"nodes span {z[-1] - z[0]} in z, which is not less than the period {self.period}"
            )
        nodes.flags.writeable = False
        object.__setattr__(self, "nodes", nodes)
        return self

    @property
    def n(self) -> int:
        return self.nodes.shape[0]


class VelocityField(BaseModel):
    """One (v_x, v_y, v_z) triple per node."""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    velocities: np.ndarray

    @model_validator(mode="after")
    def _check_velocities(self) -> "VelocityField":
        v = np.array(self.velocities, dtype=float)
        if v.ndim != 2 or v.shape[1] != 3:
            raise ValueError(f"velocities must be an (N, 3) array, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("velocity field contains non-finite values")
        v.flags.writeable = False
        object.__setattr__(self, "velocities", v)
        return self

    @property
    def transverse(self) -> np.ndarray:
        """v_x + i v_y, the velocity in the complex filament plane."""
        return self.velocities[:, 0] + 1j * self.velocities[:, 1]

    @property
    def magnitude(self) -> np.ndarray:
        return np.linalg.norm(self.velocities, axis=1)

    def cosine_similarity(self, other: "VelocityField") -> np.ndarray:
        """Node-wise cosine between two fields. Two zero vectors count as aligned."""
        if other.velocities.shape != self.velocities.shape:
            raise ValueError("velocity fields have different shapes")
        dot = np.sum(self.velocities * other.velocities, axis=1)
        norms = self.magnitude * other.magnitude
        both_zero = (self.magnitude == 0) & (other.magnitude == 0)
        with np.errstate(invalid="ignore", divide="ignore"):
            cos = np.where(norms > 0, dot / norms, 0.0)
        return np.where(both_zero, 1.0, cos)


class LocalCurve(BaseModel):
    """First three z-derivatives of x(z), y(z) at a point shifted to the origin."""
    model_config = ConfigDict(frozen=True)

    x1: float = 0.0
    x2: float = 0.0
    x3: float = 0.0
    y1: float = 0.0
    y2: float = 0.0
    y3: float = 0.0


# ---------------------------------------------------------------------------
# Curves and the LIA law
# ---------------------------------------------------------------------------

def curve_from_state(state: FilamentState) -> Curve3D:
    nodes = np.column_stack([state.psi.real, state.psi.imag, state.z])
    return Curve3D(nodes=nodes, period=state.grid.length)


def lia_velocity(state: FilamentState, params: FluidParams) -> VelocityField:
    """Local induction velocity with spectral ψ′ and ψ″.

    v_x + i v_y = i c ψ″ / (1+|ψ′|²)^{3/2}
    v_z         = c Im(conj(ψ′) ψ″) / (1+|ψ′|²)^{3/2}
    with c = Γ ln ε / 4π.
    """
    length = state.grid.length
    d1 = spectral.derivative(state.psi, length, 1)
    d2 = spectral.derivative(state.psi, length, 2)
    c = params.lia_coefficient
    weight = (1.0 + np.abs(d1) ** 2) ** 1.5
    transverse = 1j * c * d2 / weight
    vz = c * np.imag(np.conj(d1) * d2) / weight
    return VelocityField(velocities=np.column_stack([transverse.real, transverse.imag, vz]))


def rotation_rate(velocity: VelocityField, state: FilamentState) -> float:
    """Mean angular rate ω with v_x + i v_y = -iω ψ, over nodes where ψ ≠ 0."""
    psi = state.psi
    mask = np.abs(psi) > 0
    if not np.any(mask):
        return 0.0
    return float(np.mean(np.real(1j * velocity.transverse[mask] / psi[mask])))


# ---------------------------------------------------------------------------
# Biot–Savart
# ---------------------------------------------------------------------------

def _interpolated_segments(curve: Curve3D) -> tuple[np.ndarray, np.ndarray]:
    """Midpoints and dr/du of the Fourier-interpolated curve at u = j + 1/2.

    The curve is parameterized by the node index u; z(u) = uL/N + ζ(u) with ζ
    periodic, so x, y and ζ interpolate spectrally.
    """
    n = curve.n
    u_nodes = np.arange(n)
    drift = curve.period / n
    fields = np.column_stack([
        curve.nodes[:, 0],
        curve.nodes[:, 1],
        curve.nodes[:, 2] - drift * u_nodes,
    ])
    m = spectral.mode_indices(n)
    shift = np.exp(1j * np.pi * m / n)[:, None]
    hat = np.fft.fft(fields, axis=0) * shift
    mid = np.fft.ifft(hat, axis=0).real
    dmid = np.fft.ifft(hat * (2j * np.pi * m / n)[:, None], axis=0).real
    mid[:, 2] += drift * (u_nodes + 0.5)
    dmid[:, 2] += drift
    return mid, dmid


def _block_velocity(
    targets: np.ndarray,
    curve: Curve3D,
    mid: np.ndarray,
    dl: np.ndarray,
    periods: int,
    core_sq: float,
) -> np.ndarray:
    n = curve.n
    half = periods * n + n // 2
    offsets = np.arange(-half, half)
    src = targets[:, None] + offsets[None, :]
    j = np.mod(src, n)
    image = np.floor_divide(src, n).astype(float) * curve.period

    pos = mid[j].copy()
    pos[..., 2] += image
    r = curve.nodes[targets][:, None, :] - pos
    cross = np.cross(dl[j], r)
    denom = (np.sum(r * r, axis=-1) + core_sq) ** 1.5
    return np.sum(cross / denom[..., None], axis=1)


def biot_savart_velocity(
    curve: Curve3D,
    params: FluidParams,
    periods: int = 1,
    workers: Optional[int] = None,
) -> VelocityField:
    """Desingularized Biot–Savart velocity at every node.

    v(P) = Γ/4π Σ dl × R / (|R|² + σ_c²)^{3/2},  R = P − source.

    Sources are midpoints of the Fourier-interpolated curve in a window of
    ±(periods + 1/2)·L centred on each target. Targets are processed in fixed
    blocks, optionally across a thread pool; results are merged by block index.
    """
    if periods < 0:
        raise ValueError(f"periods must be >= 0, got {periods}")
    mid, dl = _interpolated_segments(curve)
    seg_len = np.linalg.norm(dl, axis=1)
    if np.any(seg_len == 0.0):
        bad = int(np.argmin(seg_len))
        raise ValueError(f"degenerate segment of zero length at node {bad}")

    core_sq = params.core_radius ** 2
    blocks = [
        (idx, np.arange(start, min(start + BLOCK_SIZE, curve.n)))
        for idx, start in enumerate(range(0, curve.n, BLOCK_SIZE))
    ]
    logger.debug(
        "Biot–Savart: %d nodes, %d blocks, %d image period(s), workers=%s",
        curve.n, len(blocks), periods, workers,
    )

    results: Dict[int, np.ndarray] = {}
    if workers is None or workers <= 1:
        for idx, targets in blocks:
            results[idx] = _block_velocity(targets, curve, mid, dl, periods, core_sq)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = {
                pool.submit(_block_velocity, targets, curve, mid, dl, periods, core_sq): idx
                for idx, targets in blocks
            }
            for future in as_completed(futures):
                results[futures[future]] = future.result()

    # Blöcke in Index-Reihenfolge zusammenführen
    v = np.concatenate([results[idx] for idx in sorted(results)], axis=0)
    return VelocityField(velocities=params.circulation / (4.0 * math.pi) * v)


def effective_log_factor(
    state: FilamentState,
    params: FluidParams,
    periods: int = 1,
    workers: Optional[int] = None,
    velocity: Optional[VelocityField] = None,
) -> float:
    """Λ such that the Biot–Savart rotation rate of a helix equals Γk²Λ/4π.

    Pass ``velocity`` to reuse an already computed Biot–Savart field.
    """
    mode, _ = spectral.dominant_mode(state.psi)
    if mode == 0:
        raise ValueError("effective log factor needs a helix with a non-zero dominant mode")
    k = state.grid.wavenumber(mode)
    if velocity is None:
        velocity = biot_savart_velocity(curve_from_state(state), params, periods, workers)
    omega = rotation_rate(velocity, state)
    return 4.0 * math.pi * omega / (params.circulation * k * k)


# ---------------------------------------------------------------------------
# Local kernel and polarity
# ---------------------------------------------------------------------------

def kernel_f(local: LocalCurve, z: float) -> np.ndarray:
    """Integrand f(z) of the self-induction integral for the Taylor curve through 0.

    x(z)/z and y(z)/z come from the cubic Taylor polynomial; the slopes in
    dl are frozen at their z = 0 values. The pole part of f_i is even in z,
    ≈ (∂²y/∂z²)·F / (2|z|) with F = (1 + x1² + y1²)^{-3/2}.
    """
    if z == 0:
        raise ValueError("kernel_f has a pole at z = 0")
    xz = local.x1 + local.x2 * z / 2.0 + local.x3 * z * z / 6.0
    yz = local.y1 + local.y2 * z / 2.0 + local.y3 * z * z / 6.0
    num = np.array([yz - local.y1, local.x1 - xz, xz * local.y1 - yz * local.x1])
    return num / (z * abs(z) * (1.0 + xz * xz + yz * yz) ** 1.5)


def polarity_slope(
    curvature_xx: float,
    curvature_yy: float,
    slope_x: float,
    slope_y: float,
    l: float,
    sigmas: Sequence[float],
    component: Literal["i", "j"] = "i",
) -> float:
    """Fit ∫_{σ<|z|<l} f dz against ln(l/σ) and return the slope.

    As σ → 0 the slope tends to ∂²y/∂z² · F for the i component and
    −∂²x/∂z² · F for the j component, F = (1 + (∂x/∂z)² + (∂y/∂z)²)^{-3/2}.
    """
    sig = np.asarray(sigmas, dtype=float)
    if sig.size < 4:
        raise ValueError(f"need at least 4 cutoff values, got {sig.size}")
    if np.any(sig <= 0):
        raise ValueError("cutoff values must be positive")
    steps = np.diff(sig)
    if not (np.all(steps > 0) or np.all(steps < 0)):
        raise ValueError(f"cutoff list must be strictly monotone, got {list(sig)}")
    if l <= sig.max():
        raise ValueError(f"l = {l} must exceed the largest cutoff {sig.max()}")

    local = LocalCurve(x1=slope_x, x2=curvature_xx, y1=slope_y, y2=curvature_yy)
    axis = 0 if component == "i" else 1

    def integrand(u: float) -> float:
        z = math.exp(u)
        return (kernel_f(local, z)[axis] + kernel_f(local, -z)[axis]) * z

    integrals = []
    for s in sig:
        value, _ = integrate.quad(integrand, math.log(s), math.log(l),
                                  epsabs=1e-13, epsrel=1e-11, limit=200)
        integrals.append(value)

    fit = stats.linregress(np.log(l / sig), np.asarray(integrals))
    logger.debug("polarity fit (%s): slope=%.8g intercept=%.8g", component, fit.slope, fit.intercept)
    return float(fit.slope)
