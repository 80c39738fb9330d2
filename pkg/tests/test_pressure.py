import numpy as np
import pytest

from sns2d.field import (
    GridSpec,
    ScalarField,
    SpectralVelocity,
    divergence,
    laplacian,
    leray_project,
    random_divfree_field,
    single_mode,
    taylor_green,
    to_physical,
    to_spectral,
)
from sns2d.field import _tensor_uu
from sns2d.noise import NoiseModel, generate_path
from sns2d.pressure import (
    pressure_bound_stats,
    pressure_cor,
    pressure_det,
    pressure_ito,
    write_pressure_csv,
)
from sns2d.scheme import SchemeConfig, run_trajectory

GRID = GridSpec(16)
SIGMAS = [(1.0, 0.0), (0.6, 0.8), (-2.0, 3.5)]


def divdiv_uu(v):
    t = _tensor_uu(v.coeffs, v.grid)
    kx, ky = v.grid.kx, v.grid.ky
    return -(kx * kx * t[0] + 2 * kx * ky * t[1] + ky * ky * t[2])


class TestPressureDet:
    def test_zero(self):
        assert not np.any(pressure_det(SpectralVelocity.zeros(GRID)).coeffs)

    def test_single_mode(self):
        p = pressure_det(single_mode(GRID, (3, 1), (1.0, -3.0)))
        assert np.max(np.abs(p.coeffs)) < 1e-14

    def test_taylor_green(self):
        # -Lap^{-1} div div(u x u) gives +(cos 2x1 + cos 2x2)/4
        p = pressure_det(taylor_green(GRID)).coeffs
        for xi in [(2, 0), (-2, 0), (0, 2), (0, -2)]:
            assert p[xi[0] % 16, xi[1] % 16] == pytest.approx(0.125, abs=1e-15)
        q = p.copy()
        for xi in [(2, 0), (-2, 0), (0, 2), (0, -2)]:
            q[xi[0] % 16, xi[1] % 16] = 0
        assert np.max(np.abs(q)) < 1e-15

    def test_taylor_green_physical_identity(self):
        # for Taylor-Green, (u.grad)u = -grad((cos 2x1 + cos 2x2)/4), so grad pi must cancel it
        u = taylor_green(GRID)
        x1, x2 = GRID.physical_coords()
        expected = 0.25 * (np.cos(2 * x1) + np.cos(2 * x2))
        got = to_physical(pressure_det(u).coeffs, GRID)
        assert np.max(np.abs(got - expected)) < 1e-14

    def test_poisson_residual(self):
        v = taylor_green(GRID) + random_divfree_field(GRID, 4, 5.0, 0.5)
        p = pressure_det(v)
        resid = laplacian(p).coeffs + divdiv_uu(v) * GRID.mask * (GRID.k2 > 0)
        assert np.max(np.abs(resid)) < 1e-10
        assert p.coeffs[0, 0] == 0

    def test_leray_consistency(self):
        # P div(u x u) = div(u x u) + grad pi_det
        v = taylor_green(GRID) + random_divfree_field(GRID, 4, 5.0, 0.5)
        t = _tensor_uu(v.coeffs, GRID)
        kx, ky = GRID.kx, GRID.ky
        div_t = np.stack((1j * (kx * t[0] + ky * t[1]), 1j * (kx * t[1] + ky * t[2]))) * GRID.mask
        div_t[:, 0, 0] = 0
        p = pressure_det(v).coeffs
        lhs = leray_project(SpectralVelocity(GRID, div_t)).coeffs
        rhs = div_t + np.stack((1j * kx * p, 1j * ky * p))
        assert np.max(np.abs(lhs - rhs)) < 1e-14


class TestStochasticPressures:
    @pytest.mark.parametrize("sigma", SIGMAS)
    def test_vanish_on_solenoidal(self, sigma):
        v = taylor_green(GRID) + random_divfree_field(GRID, 9, 5.0, 1.0)
        scale = np.max(np.abs(v.coeffs))
        assert np.max(np.abs(pressure_ito(v, sigma).coeffs)) <= 1e-12 * scale
        assert np.max(np.abs(pressure_cor(v, sigma).coeffs)) <= 1e-12 * scale

    def test_zero(self):
        z = SpectralVelocity.zeros(GRID)
        assert not np.any(pressure_ito(z, (1, 2)).coeffs)
        assert not np.any(pressure_cor(z, (1, 2)).coeffs)

    def test_debug_non_solenoidal(self):
        x1, x2 = GRID.physical_coords()
        c = to_spectral(np.stack((np.sin(x1), 0 * x1)), GRID)
        out = to_physical(pressure_ito(SpectralVelocity(GRID, c), (1.0, 0.0)).coeffs, GRID)
        assert np.max(np.abs(out[0] + np.cos(x1))) < 1e-14
        assert np.max(np.abs(out[1])) < 1e-14

    def test_cor_on_gradient_field(self):
        # v = grad(cos x1) = (-sin x1, 0); div div(sigma x sigma grad v) with sigma=(1,0) is d1^3 v_1
        x1, x2 = GRID.physical_coords()
        c = to_spectral(np.stack((-np.sin(x1), 0 * x1)), GRID)
        out = to_physical(pressure_cor(SpectralVelocity(GRID, c), (1.0, 0.0)).coeffs, GRID)
        # -grad Lap^{-1} d1^3(-sin x1) = -grad Lap^{-1} cos x1 = grad cos x1 = (-sin x1, 0)
        assert np.max(np.abs(out[0] + np.sin(x1))) < 1e-13
        assert np.max(np.abs(out[1])) < 1e-13

    def test_non_solenoidal_is_gradient(self):
        vals = np.random.default_rng(0).standard_normal((2, 16, 16))
        v = SpectralVelocity(GRID, to_spectral(vals, GRID))
        out = pressure_ito(v, (0.3, 0.7))
        assert np.max(np.abs(leray_project(out).coeffs)) < 1e-14
        assert np.max(np.abs(out.coeffs)) > 1e-3


class TestBoundStats:
    def _traj(self, M, u0, noise, stride=1):
        path = generate_path(5, noise.K, 2048, 0.5)
        return run_trajectory(u0, path, M, noise, SchemeConfig(0.05, 0.5, M), stride=stride)

    def test_zero_trajectory(self):
        noise = NoiseModel(SIGMAS[:2])
        tr = self._traj(8, SpectralVelocity.zeros(GRID), noise)
        assert pressure_bound_stats(tr, noise) == (0.0, 0.0)

    def test_ito_zero_and_det_stable(self):
        noise = NoiseModel(SIGMAS[:2])
        u0 = taylor_green(GRID) + random_divfree_field(GRID, 1, 5.0, 0.1)
        s256 = pressure_bound_stats(self._traj(256, u0, noise), noise)
        s512 = pressure_bound_stats(self._traj(512, u0, noise), noise)
        assert s256[0] > 0
        assert 0.8 <= s512[0] / s256[0] <= 1.25
        assert s256[1] <= 1e-24 * s256[0]

    def test_requires_stride_one(self):
        noise = NoiseModel()
        tr = self._traj(8, taylor_green(GRID), noise, stride=2)
        with pytest.raises(ValueError):
            pressure_bound_stats(tr, noise)


def test_pressure_csv(tmp_path):
    write_pressure_csv([(256, 1.0 / 3.0, 0.0)], tmp_path / "p.csv")
    lines = (tmp_path / "p.csv").read_text().splitlines()
    assert lines == ["M,S_det,S_ito", "256,0.33333333333333331,0"]
