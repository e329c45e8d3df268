"""
Spectral helpers — FFT wavenumbers, derivatives, 2/3-rule mask, dominant mode.

All functions work on plain arrays sampled on a uniform periodic grid of
``n`` points over ``length``; the grid objects live in ``filament``.
"""
from __future__ import annotations

from typing import Tuple

import numpy as np


def wavenumbers(n: int, length: float) -> np.ndarray:
    """Angular wavenumbers k_m = 2πm/L in FFT order (m = 0..n/2-1, -n/2..-1)."""
    return 2.0 * np.pi * np.fft.fftfreq(n, d=length / n)


def mode_indices(n: int) -> np.ndarray:
    """Signed integer mode numbers in FFT order."""
    return np.rint(np.fft.fftfreq(n) * n).astype(int)


def derivative(psi: np.ndarray, length: float, order: int = 1) -> np.ndarray:
    """Spectral derivative of a periodic sample vector.

    The Nyquist wavenumber is kept as -n/2 for every order, so that
    derivative(derivative(psi)) == derivative(psi, order=2) to round-off and
    the discrete integrations by parts used by the observables hold exactly.
    """
    k = wavenumbers(psi.shape[-1], length)
    return np.fft.ifft((1j * k) ** order * np.fft.fft(psi))


def dealias_mask(n: int) -> np.ndarray:
    """Boolean mask keeping |m| <= n/3 (the 2/3 rule)."""
    return np.abs(mode_indices(n)) <= n // 3


def mode_coefficient(psi: np.ndarray, m: int) -> complex:
    """Fourier coefficient c_m with psi_j = sum_m c_m exp(i k_m z_j)."""
    n = psi.shape[-1]
    return complex(np.fft.fft(psi)[m % n] / n)


def dominant_mode(psi: np.ndarray) -> Tuple[int, float]:
    """Return (signed mode index, share of sum |psi_hat|^2) of the strongest mode.

    A zero vector has no dominant mode and yields (0, 0.0).
    """
    power = np.abs(np.fft.fft(psi)) ** 2
    total = float(power.sum())
    if total == 0.0:
        return 0, 0.0
    idx = int(np.argmax(power))
    return int(mode_indices(psi.shape[-1])[idx]), float(power[idx] / total)
