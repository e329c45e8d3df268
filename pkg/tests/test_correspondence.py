"""Tests for plane waves, the free propagator, the path-integral kernel and wavepackets."""
import cmath
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.integrate import trapezoid

from src.correspondence import (
    PropagatorKernel,
    WavepacketSpec,
    analytic_propagator,
    build_kernel,
    make_wavepacket,
    packet_width,
    plane_wave_overlap,
    propagate_by_quadrature,
    seam_ratio,
    stationary_phase_width,
    wavepacket_benchmark,
)
from src.evolution import SolverConfig, step_linear
from src.filament import FilamentState, FluidParams, KelvinWaveSpec, ZGrid, make_kelvin_wave, volume
from src.observables import effective_mass, effective_planck

TWO_PI = 2.0 * math.pi
PARAMS = FluidParams()
HBAR_OVER_M = 0.8 / TWO_PI


def free_gaussian(z, t, hbar_over_m=1.0):
    """exp(−z²/2) evolved freely for time t."""
    s = 1.0 + 1j * hbar_over_m * t
    return np.exp(-z * z / (2.0 * s)) / np.sqrt(s)


class TestPlaneWave:

    def test_scalar_is_complex(self):
        value = plane_wave_overlap(1.0, 2.0, 0.5)
        assert isinstance(value, complex)
        assert abs(value) == pytest.approx(1.0 / math.sqrt(math.pi), rel=1e-14)
        assert cmath.phase(value) == pytest.approx(4.0 - TWO_PI, abs=1e-12)

    def test_array(self):
        z = np.linspace(0.0, 1.0, 5)
        value = plane_wave_overlap(0.0, z, 1.0)
        assert value.shape == (5,)
        assert_allclose(value, 1.0 / math.sqrt(TWO_PI))

    def test_completeness_on_grid(self):
        grid = ZGrid(n=32, length=TWO_PI)
        hbar = 0.03
        p = hbar * grid.wavenumbers
        dp = hbar * TWO_PI / grid.length
        z = grid.z
        waves = plane_wave_overlap(p[None, :], z[:, None], hbar)
        identity = waves @ np.conj(waves).T * dp
        f = np.random.default_rng(3).normal(size=32) + 1j * np.random.default_rng(4).normal(size=32)
        assert_allclose(identity @ f * grid.spacing, f, atol=1e-10)

    def test_half_turn_and_density(self):
        assert cmath.phase(plane_wave_overlap(1.0, math.pi, 1.0)) == pytest.approx(math.pi, abs=1e-15)
        hbar = 0.37
        value = plane_wave_overlap(hbar, math.pi, hbar)
        conj = np.conj(value)
        assert (value * conj).real == pytest.approx(1.0 / (TWO_PI * hbar), rel=1e-14)

    def test_bad_hbar(self):
        with pytest.raises(ValueError):
            plane_wave_overlap(1.0, 1.0, 0.0)


class TestAnalyticPropagator:

    def test_prefactor_phase(self):
        k = analytic_propagator(0.0, 0.0, 0.5, 1.0, 1.0)
        assert abs(k) == pytest.approx(1.0 / math.sqrt(math.pi), rel=1e-14)
        assert cmath.phase(k) == pytest.approx(-math.pi / 4)
        assert cmath.phase(analytic_propagator(0.0, 0.0, -0.5, 1.0, 1.0)) == pytest.approx(math.pi / 4)

    def test_zero_dt_rejected(self):
        with pytest.raises(ValueError, match="delta"):
            analytic_propagator(0.0, 1.0, 0.0, 1.0, 1.0)

    def test_exponent_scales_with_mass(self):
        def exponent(m_eff):
            return cmath.phase(analytic_propagator(0.0, 0.3, 1.0, 1.0, m_eff) / analytic_propagator(0.0, 0.0, 1.0, 1.0, m_eff))

        assert exponent(1.0) == pytest.approx(0.045, rel=1e-12)
        assert exponent(2.0) == pytest.approx(2.0 * exponent(1.0), rel=1e-12)

    def test_evolves_gaussian(self):
        y = np.linspace(-15.0, 15.0, 20001)
        psi0 = np.exp(-y * y / 2.0)
        for z in (0.0, 0.5, 1.0):
            value = trapezoid(analytic_propagator(y, z, 0.5, 1.0, 1.0) * psi0, y)
            assert value == pytest.approx(free_gaussian(z, 0.5), rel=1e-6)

    def test_chapman_kolmogorov(self):
        y = np.linspace(-15.0, 15.0, 20001)
        half = free_gaussian(y, 0.5)
        for z in (0.0, 0.7):
            value = trapezoid(analytic_propagator(y, z, 0.5, 1.0, 1.0) * half, y)
            assert value == pytest.approx(free_gaussian(z, 1.0), rel=1e-6)


class TestKernel:

    GRID = ZGrid(n=64, length=TWO_PI)

    def test_resolution_window(self):
        assert stationary_phase_width(0.0482, HBAR_OVER_M, 1.0) == pytest.approx(2 * self.GRID.spacing, rel=1e-2)
        build_kernel(self.GRID, 0.4, PARAMS, volume=1.0, slices=4)
        with pytest.raises(ValueError, match="not resolved"):
            build_kernel(self.GRID, 100.0, PARAMS, volume=1.0)
        with pytest.raises(ValueError, match="not resolved"):
            build_kernel(self.GRID, 0.01, PARAMS, volume=1.0)

    def test_bad_arguments(self):
        with pytest.raises(ValueError, match="slices"):
            build_kernel(self.GRID, 0.4, PARAMS, volume=1.0, slices=0)
        with pytest.raises(ValueError, match="V > 0"):
            build_kernel(self.GRID, 0.4, PARAMS, volume=0.0)

    def test_unitary(self):
        kernel = build_kernel(self.GRID, 0.4, PARAMS, volume=1.0, slices=4)
        assert kernel.unitarity_defect() < 1e-12
        assert kernel.unitarity_defect(band_limited=False) < 1e-12

    def test_matches_spectral_step(self):
        state = make_kelvin_wave(KelvinWaveSpec(amplitude=0.1, mode=3), self.GRID)
        kernel = build_kernel(self.GRID, 0.4, PARAMS, volume=1.0, slices=4)
        out = kernel.apply(state)
        assert_allclose(out.psi, step_linear(state, PARAMS, 0.4).psi, atol=1e-13)
        assert out.t == pytest.approx(0.4)

    @pytest.mark.parametrize("mode", [1, 2, 5, -7])
    def test_eigenphase(self, mode):
        kernel = build_kernel(self.GRID, 0.4, PARAMS, volume=1.0, slices=4)
        expected = -PARAMS.lia_coefficient * mode * mode * 0.4
        assert kernel.eigenphase(mode) == pytest.approx(expected, abs=1e-12)

    def test_slicing_does_not_change_action(self):
        z = self.GRID.z
        state = FilamentState(grid=self.GRID, psi=np.exp(-((z - math.pi) ** 2) / 0.5))
        one = build_kernel(self.GRID, 0.4, PARAMS, volume=1.0, slices=1).apply(state)
        four = build_kernel(self.GRID, 0.4, PARAMS, volume=1.0, slices=4).apply(state)
        assert np.max(np.abs(one.psi - four.psi)) < 1e-6

    def test_does_not_depend_on_volume(self):
        a = build_kernel(self.GRID, 0.4, PARAMS, volume=1.0, slices=2)
        b = build_kernel(self.GRID, 0.4, PARAMS, volume=7.0, slices=2)
        assert_allclose(a.entries, b.entries, atol=1e-13)

    def test_continuum_gaussian(self):
        grid = ZGrid(n=512, length=40.0)
        z = grid.z
        state = FilamentState(grid=grid, psi=np.exp(-((z - 20.0) ** 2) / 2.0))
        out = build_kernel(grid, 2.0, PARAMS, volume=1.0, slices=2).apply(state)
        assert_allclose(out.psi, free_gaussian(z - 20.0, 2.0, HBAR_OVER_M), atol=1e-10)

    def test_grid_mismatch(self):
        kernel = build_kernel(self.GRID, 0.4, PARAMS, volume=1.0, slices=4)
        other = FilamentState(grid=ZGrid(n=32, length=TWO_PI), psi=np.zeros(32))
        with pytest.raises(ValueError, match="different grids"):
            kernel.apply(other)

    def test_entries_shape_checked(self):
        with pytest.raises(ValueError):
            PropagatorKernel(grid=self.GRID, dt=0.1, entries=np.eye(8))


class TestWavepacket:

    GRID = ZGrid(n=512, length=40.0)

    def test_width_and_centroid(self):
        packet = make_wavepacket(WavepacketSpec(center=20.0, width=0.5), self.GRID)
        centroid, sigma = packet_width(packet)
        assert centroid == pytest.approx(20.0, abs=1e-12)
        assert sigma == pytest.approx(0.5, rel=1e-10)
        assert seam_ratio(packet.psi) < 1e-12

    def test_under_resolved(self):
        with pytest.raises(ValueError, match="under-resolved"):
            make_wavepacket(WavepacketSpec(center=20.0, width=0.2), self.GRID)

    def test_tail_at_seam(self):
        with pytest.raises(ValueError, match="seam"):
            make_wavepacket(WavepacketSpec(center=5.0, width=2.0), self.GRID)

    def test_spreading(self):
        config = SolverConfig(dt=0.3927, steps=10)
        result = wavepacket_benchmark(WavepacketSpec(center=20.0, width=0.5), PARAMS, config, self.GRID)
        assert not result.seam_reached
        assert len(result.series) == 11
        last = result.series.iloc[-1]
        assert last["sigma"] == pytest.approx(last["sigma_analytic"], rel=1e-9)
        assert last["sigma"] == pytest.approx(0.7071, rel=1e-4)
        assert_allclose(result.series["centroid"], 20.0, atol=1e-9)

    def test_carrier_moves_centroid(self):
        config = SolverConfig(dt=0.5, steps=8)
        result = wavepacket_benchmark(
            WavepacketSpec(center=20.0, width=1.0, carrier_mode=2), PARAMS, config, self.GRID
        )
        k0 = self.GRID.wavenumber(2)
        last = result.series.iloc[-1]
        assert last["centroid"] - 20.0 == pytest.approx(2.0 * PARAMS.lia_coefficient * k0 * 4.0, rel=1e-6)

    def test_seam_truncates_series(self):
        config = SolverConfig(dt=50.0, steps=20)
        result = wavepacket_benchmark(WavepacketSpec(center=20.0, width=0.5), PARAMS, config, self.GRID)
        assert result.seam_reached
        assert 1 <= len(result.series) < 21

    def test_zero_packet(self):
        state = FilamentState(grid=self.GRID, psi=np.zeros(512))
        with pytest.raises(ValueError, match="undefined"):
            packet_width(state)


class TestQuadratureReference:

    GRID = ZGrid(n=512, length=40.0)

    def test_matches_free_gaussian(self):
        spec = WavepacketSpec(center=20.0, width=1.0 / math.sqrt(2.0), amplitude=1.0)
        got = propagate_by_quadrature(spec, self.GRID, 2.0, HBAR_OVER_M, 1.0)
        expected = free_gaussian(self.GRID.z - 20.0, 2.0, HBAR_OVER_M)
        assert_allclose(got, expected, atol=1e-10)

    def test_kernel_agrees_in_real_space(self):
        spec = WavepacketSpec(center=20.0, width=1.0, carrier_mode=2)
        state = make_wavepacket(spec, self.GRID)
        v = volume(state)
        kernel = build_kernel(self.GRID, 2.0, PARAMS, volume=v, slices=2)
        out = kernel.apply(state)
        reference = propagate_by_quadrature(
            spec, self.GRID, 2.0, effective_planck(PARAMS, v), effective_mass(PARAMS, v)
        )
        assert np.max(np.abs(out.psi - reference)) / np.max(np.abs(state.psi)) < 1e-9

    def test_zero_time_rejected(self):
        with pytest.raises(ValueError, match="t != 0"):
            propagate_by_quadrature(WavepacketSpec(center=20.0, width=1.0), self.GRID, 0.0, 1.0, 1.0)
