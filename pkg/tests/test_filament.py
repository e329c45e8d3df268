"""Tests for the filament state (grid, Kelvin waves, volume, normalization)."""
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose
from pydantic import ValidationError
from scipy.integrate import trapezoid

from src.filament import (
    FilamentState,
    FluidParams,
    KelvinWaveSpec,
    ZGrid,
    make_kelvin_wave,
    normalize,
    recenter,
    superpose,
    volume,
)

TWO_PI = 2.0 * math.pi


@pytest.fixture
def grid():
    return ZGrid(n=64, length=TWO_PI)


class TestZGrid:

    def test_spacing(self, grid):
        assert grid.spacing * grid.n == pytest.approx(grid.length, rel=1e-15)

    def test_nodes(self, grid):
        assert grid.z[0] == 0.0
        assert grid.z[-1] == pytest.approx(TWO_PI - TWO_PI / 64)

    def test_odd_n_rejected(self):
        with pytest.raises(ValidationError, match="even"):
            ZGrid(n=63, length=1.0)

    def test_small_n_rejected(self):
        with pytest.raises(ValidationError):
            ZGrid(n=6, length=1.0)

    def test_wavenumbers_include_nyquist(self, grid):
        k = grid.wavenumbers
        assert k[1] == pytest.approx(1.0)
        assert k[32] == pytest.approx(-32.0)


class TestFilamentState:

    def test_wrong_length_rejected(self, grid):
        with pytest.raises(ValidationError, match="64 entries"):
            FilamentState(grid=grid, psi=np.zeros(10, dtype=complex))

    def test_non_finite_rejected(self, grid):
        psi = np.zeros(64, dtype=complex)
        psi[3] = np.nan
        with pytest.raises(ValidationError, match="non-finite"):
            FilamentState(grid=grid, psi=psi)

    def test_samples_are_read_only_copy(self, grid):
        source = np.ones(64, dtype=complex)
        state = FilamentState(grid=grid, psi=source)
        source[0] = 5.0
        assert state.psi[0] == 1.0
        with pytest.raises(ValueError):
            state.psi[0] = 2.0


class TestKelvinWave:

    def test_zero_amplitude_is_straight_line(self, grid):
        state = make_kelvin_wave(KelvinWaveSpec(amplitude=0.0, mode=3), grid)
        assert np.all(state.psi == 0)
        assert state.t == 0.0

    def test_constant_modulus(self, grid):
        state = make_kelvin_wave(KelvinWaveSpec(amplitude=0.1, mode=1), grid)
        assert_allclose(np.abs(state.psi), 0.1, rtol=1e-15)
        assert_allclose(state.psi, 0.1 * np.exp(1j * grid.z), rtol=0, atol=1e-16)

    def test_phase_offset(self, grid):
        state = make_kelvin_wave(KelvinWaveSpec(amplitude=0.1, mode=1, phase=math.pi / 2), grid)
        assert state.psi[0].real == pytest.approx(0.0, abs=1e-16)
        assert state.psi[0].imag == pytest.approx(0.1, rel=1e-15)

    def test_unresolvable_mode(self, grid):
        with pytest.raises(ValueError, match="not resolvable"):
            make_kelvin_wave(KelvinWaveSpec(amplitude=0.1, mode=32), grid)

    def test_highest_resolvable_mode(self, grid):
        state = make_kelvin_wave(KelvinWaveSpec(amplitude=0.1, mode=-31), grid)
        assert state.psi.shape == (64,)


class TestVolume:

    def test_straight_line(self, grid):
        assert volume(FilamentState(grid=grid, psi=np.zeros(64))) == 0.0

    @pytest.mark.parametrize("mode", [1, 2, 5, -3])
    def test_kelvin_wave(self, grid, mode):
        state = make_kelvin_wave(KelvinWaveSpec(amplitude=0.1, mode=mode), grid)
        assert volume(state) == pytest.approx(math.pi * 0.01 * TWO_PI, rel=1e-12)
        assert volume(state) == pytest.approx(0.197392, rel=1e-5)

    def test_fine_quadrature_oracle(self, grid):
        fine = np.linspace(0.0, TWO_PI, 1_000_001)
        oracle = math.pi * trapezoid(np.abs(0.1 * np.exp(1j * fine)) ** 2, fine)
        state = make_kelvin_wave(KelvinWaveSpec(amplitude=0.1, mode=1), grid)
        assert volume(state) == pytest.approx(oracle, rel=1e-9)

    def test_superposed_orthogonal_modes(self, grid):
        a = make_kelvin_wave(KelvinWaveSpec(amplitude=0.1, mode=1), grid)
        b = make_kelvin_wave(KelvinWaveSpec(amplitude=0.1, mode=2), grid)
        assert volume(superpose(a, b)) == pytest.approx(0.394784, rel=1e-5)
        assert volume(superpose(a, b)) == pytest.approx(volume(a) + volume(b), rel=1e-13)


class TestNormalize:

    def test_kelvin_modulus(self, grid):
        state = normalize(make_kelvin_wave(KelvinWaveSpec(amplitude=0.1, mode=1), grid))
        assert_allclose(np.abs(state.psi), 1.0 / math.sqrt(TWO_PI), rtol=1e-12)
        assert_allclose(np.abs(state.psi), 0.398942, rtol=1e-5)

    def test_unit_norm(self, grid):
        rng = np.random.default_rng(7)
        psi = rng.normal(size=64) + 1j * rng.normal(size=64)
        state = normalize(FilamentState(grid=grid, psi=psi))
        assert np.sum(np.abs(state.psi) ** 2) * grid.spacing == pytest.approx(1.0, rel=1e-12)

    def test_idempotent(self, grid):
        rng = np.random.default_rng(11)
        psi = rng.normal(size=64) + 1j * rng.normal(size=64)
        once = normalize(FilamentState(grid=grid, psi=psi))
        twice = normalize(once)
        assert_allclose(twice.psi, once.psi, rtol=1e-12)

    def test_zero_volume_rejected(self, grid):
        with pytest.raises(ValueError, match="zero-volume"):
            normalize(FilamentState(grid=grid, psi=np.zeros(64)))


class TestRecenter:

    def test_constant(self, grid):
        state = recenter(FilamentState(grid=grid, psi=np.full(64, 0.3 + 0.2j)))
        assert np.max(np.abs(state.psi)) < 1e-15

    def test_kelvin_unchanged(self, grid):
        state = make_kelvin_wave(KelvinWaveSpec(amplitude=0.1, mode=2), grid)
        assert_allclose(recenter(state).psi, state.psi, rtol=0, atol=1e-15)

    def test_offset_removed(self, grid):
        wave = make_kelvin_wave(KelvinWaveSpec(amplitude=0.1, mode=1), grid)
        shifted = wave.with_psi(wave.psi + 0.3)
        out = recenter(shifted)
        assert_allclose(out.psi, wave.psi, rtol=0, atol=1e-15)
        assert abs(out.psi.mean()) <= 1e-14 * np.max(np.abs(out.psi))

    def test_preserves_volume_of_zero_mean_state(self, grid):
        wave = make_kelvin_wave(KelvinWaveSpec(amplitude=0.1, mode=3), grid)
        assert volume(recenter(wave)) == pytest.approx(volume(wave), rel=1e-14)


class TestFluidParams:

    def test_lia_coefficient(self):
        assert FluidParams().lia_coefficient == pytest.approx(0.8 / (4 * math.pi))
        assert FluidParams().lia_coefficient == pytest.approx(0.063662, rel=1e-5)

    def test_helium4(self):
        he = FluidParams.helium4()
        assert he.circulation == 9.97e-8
        assert he.log_factor == 0.8

    @pytest.mark.parametrize("field", ["circulation", "density", "log_factor", "core_radius"])
    def test_non_positive_rejected(self, field):
        with pytest.raises(ValidationError):
            FluidParams(**{field: 0.0})
