"""Pressure fields reconstructed from velocity states.

Sign conventions follow ``pi_det = -Lap^{-1} div div(u x u)``, so that the
projected convection equals ``div(u x u) + grad pi_det``.  The two
stochastic pressures are

    Pi_ito = -grad Lap^{-1} div div(u x sigma)
    Pi_cor = -grad Lap^{-1} div div(sigma x sigma grad u),

where ``(sigma x sigma grad u)_ij = sigma_i (sigma . grad) u_j``.  Both vanish
for solenoidal ``u`` and constant ``sigma`` but are evaluated in full.
"""
from __future__ import annotations

import csv

import numpy as np

from .field import GridSpec, ScalarField, SpectralVelocity, _tensor_uu, _weighted_sq
from .noise import NoiseModel


def _pressure_det_coeffs(c: np.ndarray, grid: GridSpec) -> np.ndarray:
    t = _tensor_uu(c, grid)
    kx, ky = grid.kx, grid.ky
    divdiv = -(kx * kx * t[0] + 2.0 * kx * ky * t[1] + ky * ky * t[2])
    return divdiv * grid.inv_k2


def pressure_det(v: SpectralVelocity) -> ScalarField:
    return ScalarField(v.grid, _pressure_det_coeffs(v.coeffs, v.grid))


def _neg_grad_inv_lap(s: np.ndarray, grid: GridSpec) -> np.ndarray:
    # -grad Lap^{-1} has symbol i xi / |xi|^2
    f = s * grid.inv_k2
    return np.stack((1j * grid.kx * f, 1j * grid.ky * f))


def _ito_coeffs(c: np.ndarray, sigma, grid: GridSpec) -> np.ndarray:
    s1, s2 = sigma
    xi_v = grid.kx * c[0] + grid.ky * c[1]
    xi_s = s1 * grid.kx + s2 * grid.ky
    return _neg_grad_inv_lap(-xi_v * xi_s, grid)


def _cor_coeffs(c: np.ndarray, sigma, grid: GridSpec) -> np.ndarray:
    s1, s2 = sigma
    xi_v = grid.kx * c[0] + grid.ky * c[1]
    xi_s = s1 * grid.kx + s2 * grid.ky
    return _neg_grad_inv_lap(-1j * xi_s**2 * xi_v, grid)


def pressure_ito(v: SpectralVelocity, sigma) -> SpectralVelocity:
    return SpectralVelocity(v.grid, _ito_coeffs(v.coeffs, tuple(map(float, sigma)), v.grid))


def pressure_cor(v: SpectralVelocity, sigma) -> SpectralVelocity:
    return SpectralVelocity(v.grid, _cor_coeffs(v.coeffs, tuple(map(float, sigma)), v.grid))


def pressure_bound_stats(trajectory, noise: NoiseModel) -> tuple[float, float]:
    """Riemann sums over midpoint states of a stride-1 trajectory.

    Returns ``S_det = dt sum_m ||grad pi_det(u_{m+1/2})||^2`` and
    ``S_ito = dt sum_m sum_k ||Pi_k(u_{m+1/2})||_{W^{1,2}}^2``.
    """
    if trajectory.stride != 1:
        raise ValueError("pressure statistics need every state (stride 1)")
    grid, dt = trajectory.grid, trajectory.dt
    k2 = grid.k2
    s_det = 0.0
    s_ito = 0.0
    states = trajectory.states
    for m in range(states.shape[0] - 1):
        v = 0.5 * (states[m] + states[m + 1])
        s_det += _weighted_sq(_pressure_det_coeffs(v, grid), k2)
        for sig in noise.sigmas:
            s_ito += _weighted_sq(_ito_coeffs(v, sig, grid), 1.0 + k2)
    return dt * s_det, dt * s_ito


def write_pressure_csv(rows, filename) -> None:
    """``rows`` is an iterable of ``(M, S_det, S_ito)``."""
    with open(filename, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["M", "S_det", "S_ito"])
        for M, sd, si in rows:
            w.writerow([int(M), f"{sd:.17g}", f"{si:.17g}"])
