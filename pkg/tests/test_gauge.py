import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from csslab.errors import ParameterError, PreconditionError
from csslab.evolution import SimulationState, integrate, nonlinearity
from csslab.gauge import (
    GaugeConfiguration,
    biot_savart,
    constraint_residual,
    covariant_current,
    curvature_timeslice_check,
    flux_defect,
    gauge_from_phi,
    make_coulomb_data,
    neutral_density,
)
from csslab.grid import SpectralGrid
from helpers import gaussian, random_field


def series_potential(L, x1, x2, cutoff=14.0):
    """Biot-Savart potential of rho = exp(-|x|^2) on the torus by direct Fourier series.

    Fourier coefficients ``(1/L^2) int rho e^{-ik.x} = (pi/L^2) e^{-|k|^2/4}``
    (the Gaussian is negligible at the box edge); the zero mode is dropped.
    """
    M = int(cutoff * L / (2 * np.pi))
    k = 2 * np.pi / L * np.arange(-M, M + 1)
    K1, K2 = np.meshgrid(k, k, indexing="ij")
    ksq = K1**2 + K2**2
    c = np.pi / L**2 * np.exp(-ksq / 4)
    c[M, M] = 0
    ksq[M, M] = 1
    e = np.exp(1j * (K1 * x1 + K2 * x2))
    a1 = np.sum(-0.5j * K2 / ksq * c * e).real
    a2 = np.sum(0.5j * K1 / ksq * c * e).real
    return a1, a2


def planar_potential(grid):
    r2 = np.where(grid.r2 == 0, 1.0, grid.r2)
    f = (1 - np.exp(-grid.r2)) / (4 * r2)
    return grid.x[1] * f, -grid.x[0] * f


class TestBiotSavart:
    def test_matches_fourier_series(self, grid256):
        phi = np.exp(-grid256.r2 / 2) + 0j
        a1, a2 = biot_savart(grid256, phi)
        rng = np.random.default_rng(7)
        for i, j in rng.integers(0, grid256.n, size=(20, 2)):
            s1, s2 = series_potential(grid256.L, grid256.x1d[i], grid256.x1d[j])
            assert abs(a1[i, j] - s1) < 1e-12
            assert abs(a2[i, j] - s2) < 1e-12

    def test_planar_limit_after_background(self):
        # The torus potential equals the planar one minus the field of the
        # uniform neutralising background, up to periodic images that fade with L.
        errs = []
        for n, L in ((256, 40.0), (512, 80.0)):
            g = SpectralGrid(n, L)
            phi = np.exp(-g.r2 / 2) + 0j
            a1, a2 = biot_savart(g, phi)
            p1, p2 = planar_potential(g)
            rbar = np.mean(np.abs(phi) ** 2)
            inside = g.r2 <= 100
            b1 = a1 + rbar / 4 * g.x[1]
            b2 = a2 - rbar / 4 * g.x[0]
            errs.append(max(np.max(np.abs(b1 - p1)[inside]), np.max(np.abs(b2 - p2)[inside])))
        assert errs[0] < 1e-3
        assert errs[1] < errs[0] / 8

    def test_zero_field(self, grid8):
        a1, a2 = biot_savart(grid8, np.zeros(grid8.shape, dtype=complex))
        assert not np.any(a1) and not np.any(a2)

    def test_constant_density_carries_no_potential(self, grid8):
        a1, a2 = biot_savart(grid8, np.full(grid8.shape, 0.3 + 0.4j))
        assert np.max(np.abs(a1)) < 1e-15 and np.max(np.abs(a2)) < 1e-15

    @given(seed=st.integers(0, 2**32 - 1), theta=st.floats(0, 2 * np.pi), c=st.floats(0.1, 3.0))
    def test_phase_invariant_and_quadratic(self, seed, theta, c):
        g = SpectralGrid(16, 6.0)
        phi = random_field(g, np.random.default_rng(seed))
        a1, a2 = biot_savart(g, phi)
        b1, b2 = biot_savart(g, c * np.exp(1j * theta) * phi)
        scale = np.max(np.abs(a1)) + np.max(np.abs(a2))
        assert np.max(np.abs(b1 - c**2 * a1)) <= 1e-12 * c**2 * scale
        assert np.max(np.abs(b2 - c**2 * a2)) <= 1e-12 * c**2 * scale

    @given(seed=st.integers(0, 2**32 - 1), s1=st.integers(-8, 8), s2=st.integers(-8, 8))
    def test_translation_covariant(self, seed, s1, s2):
        g = SpectralGrid(16, 6.0)
        phi = random_field(g, np.random.default_rng(seed))
        a1, a2 = biot_savart(g, phi)
        b1, b2 = biot_savart(g, np.roll(phi, (s1, s2), axis=(0, 1)))
        np.testing.assert_allclose(b1, np.roll(a1, (s1, s2), axis=(0, 1)), atol=1e-13)
        np.testing.assert_allclose(b2, np.roll(a2, (s1, s2), axis=(0, 1)), atol=1e-13)


class TestConstraints:
    @given(seed=st.integers(0, 2**32 - 1))
    def test_residuals_vanish(self, seed):
        g = SpectralGrid(32, 10.0)
        phi = random_field(g, np.random.default_rng(seed), band=5)
        gauge, phi = make_coulomb_data(g, phi)
        div, curl = constraint_residual(g, phi, gauge)
        size = g.lp_norm(np.abs(phi) ** 2, 2)
        assert div <= 1e-13 * size
        assert curl <= 1e-13 * size

    def test_full_density_misses_only_the_flux_defect(self, grid64):
        phi = gaussian(grid64, 1.5)
        gauge = gauge_from_phi(grid64, phi)
        curl = grid64.derivative(gauge.a2, 1) - grid64.derivative(gauge.a1, 2)
        miss = grid64.lp_norm(curl + 0.5 * np.abs(phi) ** 2, 2)
        assert miss == pytest.approx(flux_defect(grid64, phi), rel=1e-12)

    def test_flux_defect_of_constant(self):
        g = SpectralGrid(16, 5.0)
        assert flux_defect(g, np.full(g.shape, 2.0)) == pytest.approx(0.5 * 4.0 * 5.0)

    def test_neutral_density_is_mean_free(self, grid64, rng):
        assert abs(neutral_density(random_field(grid64, rng)).mean()) < 1e-14

    def test_rejects_non_finite_datum(self, grid8):
        phi = np.zeros(grid8.shape, dtype=complex)
        phi[2, 3] = np.nan
        with pytest.raises(ParameterError):
            make_coulomb_data(grid8, phi)


class TestTemporalPotential:
    def test_elliptic_equations(self, grid64):
        phi = gaussian(grid64, 1.2, center=(0.5, 0.0)) * np.exp(1j * 0.8 * grid64.x[1])
        gauge = gauge_from_phi(grid64, phi)
        q1 = (np.conj(phi) * grid64.derivative(phi, 1)).imag
        q2 = (np.conj(phi) * grid64.derivative(phi, 2)).imag
        rho = np.abs(phi) ** 2
        for a0, (v1, v2) in ((gauge.a01, (q1, q2)), (gauge.a02, (gauge.a1 * rho, gauge.a2 * rho))):
            source = grid64.derivative(v1, 2) - grid64.derivative(v2, 1)
            assert np.max(np.abs(-grid64.laplacian(a0) - source)) < 1e-12

    @given(c=st.floats(0.1, 2.0), seed=st.integers(0, 2**32 - 1))
    def test_homogeneity(self, c, seed):
        g = SpectralGrid(16, 6.0)
        phi = random_field(g, np.random.default_rng(seed), band=4)
        a = gauge_from_phi(g, phi)
        b = gauge_from_phi(g, c * phi)
        s1 = np.max(np.abs(a.a01)) + 1e-300
        s2 = np.max(np.abs(a.a02)) + 1e-300
        assert np.max(np.abs(b.a01 - c**2 * a.a01)) <= 1e-11 * c**2 * s1
        assert np.max(np.abs(b.a02 - c**4 * a.a02)) <= 1e-11 * c**4 * s2

    def test_real_field_has_no_current_part(self, grid64):
        gauge = gauge_from_phi(grid64, gaussian(grid64, 1.0))
        assert np.max(np.abs(gauge.a01)) < 1e-15
        np.testing.assert_array_equal(gauge.a0, gauge.a01 + gauge.a02)

    def test_covariant_current_adds_potential(self, grid64):
        phi = gaussian(grid64, 1.0) * np.exp(0.5j * grid64.x[0])
        a1 = np.full(grid64.shape, 0.2)
        q1, q2 = covariant_current(grid64, phi, a1, np.zeros(grid64.shape))
        rho = np.abs(phi) ** 2
        assert np.max(np.abs(q1 - (0.5 + 0.2) * rho)) < 1e-12
        assert np.max(np.abs(q2)) < 1e-12


class TestGaugeProvenance:
    def test_fingerprint_follows_field(self, grid8, rng):
        phi = random_field(grid8, rng)
        gauge = gauge_from_phi(grid8, phi)
        nonlinearity(grid8, phi, gauge, 1.0)
        with pytest.raises(PreconditionError):
            nonlinearity(grid8, phi * 1.001, gauge, 1.0)

    def test_zero_configuration(self, grid8):
        z = GaugeConfiguration.zero(grid8)
        assert z.a1.shape == grid8.shape and not np.any(z.a0)


class TestCurvatureTimeslice:
    def test_plane_wave(self):
        g = SpectralGrid(32, 10.0)
        phi = 0.1 * np.exp(1j * g.dk * 2 * g.x[0])
        traj = integrate(g, phi, g=1.0, dt=1e-3, t_end=2e-3, checkpoint_stride=1)
        r1, r2 = curvature_timeslice_check(g, traj.states[0], traj.states[2], 2e-3)
        assert r1 < 1e-10 and r2 < 1e-10

    def test_second_order_in_dt(self):
        g = SpectralGrid(64, 16.0)
        phi = 0.5 * gaussian(g, 1.0) * np.exp(0.7j * g.x[0])
        res = []
        for dt in (4e-3, 2e-3):
            traj = integrate(g, phi, g=1.0, dt=dt, t_end=2 * dt, checkpoint_stride=1, use_dealias=False)
            res.append(max(curvature_timeslice_check(g, traj.states[0], traj.states[2], 2 * dt)))
        assert res[1] < 1e-4
        assert 3.0 < res[0] / res[1] < 5.0

    def test_rejects_nonpositive_dt(self, grid8):
        st0 = SimulationState.initial(grid8, np.zeros(grid8.shape))
        with pytest.raises(ParameterError):
            curvature_timeslice_check(grid8, st0, st0, 0.0)
