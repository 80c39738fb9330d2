"""Error functional, Monte Carlo aggregation, order fitting and diagnostics."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np

from .field import GridSpec, SpectralVelocity
from .noise import NoiseModel, coarsen_increments


@dataclass(frozen=True)
class ErrorSample:
    """``max_m ||e_m||^2 + dt sum_m ||grad e_m||^2`` for one path at level ``M``."""

    M: int
    max_sq_err: float
    grad_sq_err: float
    sq_err_path: np.ndarray = field(repr=False, compare=False, default=None)

    @property
    def total(self) -> float:
        return self.max_sq_err + self.grad_sq_err


def error_from_states(coarse: np.ndarray, reference: np.ndarray, grid: GridSpec, dt: float) -> ErrorSample:
    """Error functional for aligned state stacks of shape ``(M+1, 2, N, N)``.

    Index 0 (the shared initial datum) is excluded, as in ``m = 1..M``.
    """
    if coarse.shape != reference.shape:
        raise ValueError(f"state stacks differ in shape: {coarse.shape} vs {reference.shape}")
    M = coarse.shape[0] - 1
    e = coarse[1:] - reference[1:]
    p = e.real**2 + e.imag**2
    p = p.sum(axis=1)  # components
    area = (2.0 * np.pi) ** 2
    sq = area * p.sum(axis=(-2, -1))
    grad = area * (p * grid.k2).sum(axis=(-2, -1))
    return ErrorSample(
        M=M,
        max_sq_err=float(sq.max()) if M else 0.0,
        grad_sq_err=float(dt * grad.sum()),
        sq_err_path=sq,
    )


def error_functional(coarse, reference, M: int | None = None) -> ErrorSample:
    """Compare a stride-1 level-``M`` trajectory with a finer reference run.

    The reference state at coarse time ``t_m`` is its step ``m * M_f / M``
    state; both runs must share grid and Wiener path.
    """
    M = coarse.M if M is None else M
    if coarse.M != M:
        raise ValueError(f"coarse trajectory has M={coarse.M}, expected {M}")
    if coarse.grid != reference.grid:
        raise ValueError(f"grid mismatch: N={coarse.grid.N} vs N={reference.grid.N}")
    if coarse.stride != 1:
        raise ValueError("coarse trajectory must keep every state")
    if reference.M % M:
        raise ValueError(f"level {M} does not divide reference level {reference.M}")
    if abs(coarse.cfg.T - reference.cfg.T) > 1e-12 * reference.cfg.T:
        raise ValueError("trajectories cover different time horizons")
    ratio = reference.M // M
    if ratio % reference.stride:
        raise ValueError(f"reference stride {reference.stride} does not resolve level {M}")
    if reference.increments.shape[0] and not np.array_equal(
        coarsen_increments(reference.increments, M), coarse.increments
    ):
        raise ValueError("trajectories were driven by different Wiener paths")
    step = ratio // reference.stride
    ref_states = reference.states[::step]
    return error_from_states(coarse.states, ref_states, coarse.grid, coarse.dt)


def single_mode_exact(a, xi, t: float, W, mu: float, noise: NoiseModel, grid: GridSpec) -> SpectralVelocity:
    """Pathwise solution started from ``a cos(xi . x)`` with ``a . xi = 0``.

    Convection and pressure vanish on a single solenoidal mode, leaving
    ``u_hat(xi, t) = u_hat(xi, 0) exp(-mu |xi|^2 t + i sum_k (sigma_k . xi) W_k(t))``.
    """
    xi1, xi2 = (int(v) for v in xi)
    a = np.asarray(a, dtype=float)
    if abs(a[0] * xi1 + a[1] * xi2) > 1e-14 * max(1.0, float(np.abs(a).max())):
        raise ValueError("single_mode_exact requires a . xi = 0")
    W = np.asarray(W, dtype=float).reshape(-1)
    if W.size != noise.K:
        raise ValueError(f"expected {noise.K} Wiener values, got {W.size}")
    theta = float(sum((s[0] * xi1 + s[1] * xi2) * w for s, w in zip(noise.sigmas, W)))
    z = -mu * (xi1 * xi1 + xi2 * xi2) * t + 1j * theta
    c = np.zeros((2, grid.N, grid.N), dtype=complex)
    c[:, xi1 % grid.N, xi2 % grid.N] += 0.5 * a * np.exp(z)
    c[:, (-xi1) % grid.N, (-xi2) % grid.N] += 0.5 * a * np.exp(np.conj(z))
    return SpectralVelocity(grid, c)


def single_mode_exact_states(a, xi, times, W_values, mu, noise, grid) -> np.ndarray:
    """Stack of :func:`single_mode_exact` states; ``W_values`` has shape ``(K, len(times))``."""
    W_values = np.asarray(W_values, dtype=float).reshape(noise.K, len(times))
    return np.stack(
        [single_mode_exact(a, xi, t, W_values[:, i], mu, noise, grid).coeffs for i, t in enumerate(times)]
    )


def fit_order(levels, mse) -> float:
    """Strong order ``alpha`` from ``mse ~ C dt^(2 alpha)`` with ``dt ~ 1/M``.

    Ordinary least squares on ``log(mse)`` against ``log(1/M)``; the slope
    is halved.
    """
    levels = np.asarray(levels, dtype=float)
    mse = np.asarray(mse, dtype=float)
    if levels.size < 3 or levels.size != mse.size:
        raise ValueError("fit_order needs at least 3 levels with matching mse values")
    if np.any(mse <= 0) or not np.all(np.isfinite(mse)):
        raise ValueError("fit_order needs positive, finite mse values")
    x = -np.log(levels)
    y = np.log(mse)
    slope = np.polyfit(x, y, 1)[0]
    return float(slope / 2.0)


def mean_and_stderr(values) -> tuple[float, float]:
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise ValueError("no samples")
    if v.size == 1:
        return float(v[0]), 0.0
    return float(v.mean()), float(v.std(ddof=1) / np.sqrt(v.size))


def holder_quotient(trajectory, alpha: float, l: int) -> float:
    """Discrete ``C^alpha([0,T]; W^{l-1,2})`` seminorm over dyadic-gap pairs.

    Pairs ``(m, m + 2^j)`` for all ``m`` and ``j``, i.e. ``O(M log M)`` pairs
    out of the stored states.
    """
    if not 0.0 <= alpha < 0.5:
        raise ValueError("alpha must lie in [0, 1/2)")
    if l not in (1, 2, 3):
        raise ValueError("l must be 1, 2 or 3")
    states = trajectory.states
    times = trajectory.times
    k2 = trajectory.grid.k2
    weight = sum(k2**j for j in range(l))
    n = states.shape[0]
    best = 0.0
    gap = 1
    while gap < n:
        d = states[gap:] - states[:-gap]
        p = (d.real**2 + d.imag**2).sum(axis=1)
        dist = np.sqrt((2.0 * np.pi) ** 2 * (p * weight).sum(axis=(-2, -1)))
        dt = times[gap:] - times[:-gap]
        best = max(best, float(np.max(dist / dt**alpha)))
        gap *= 2
    return best


@dataclass
class ErrorReport:
    levels: list
    T: float
    mse: list
    stderr: list
    alpha_fit: float | None
    samples: int
    master_seed: int
    max_mean_sq: list = field(default_factory=list)

    @property
    def dts(self) -> list:
        return [self.T / M for M in self.levels]

    def csv_text(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["M", "dt", "mse_mean", "mse_stderr", "samples"])
        for M, dt, m, s in zip(self.levels, self.dts, self.mse, self.stderr):
            w.writerow([M, f"{dt:.17g}", f"{m:.17g}", f"{s:.17g}", self.samples])
        return buf.getvalue()

    def summary(self) -> dict:
        return {
            "alpha_fit": self.alpha_fit,
            "samples": self.samples,
            "master_seed": self.master_seed,
            "T": self.T,
            "monotone_outside_2se_bands": self.monotone_outside_bands(),
            "disjoint_2se_bands": self.bands_disjoint(),
            "levels": [
                {
                    "M": M,
                    "dt": dt,
                    "mse_mean": m,
                    "mse_stderr": s,
                    "max_m_mean_sq_err": mm,
                }
                for M, dt, m, s, mm in zip(self.levels, self.dts, self.mse, self.stderr, self.max_mean_sq)
            ],
        }

    def summary_text(self) -> str:
        return json.dumps(self.summary(), indent=2) + "\n"

    def monotone_outside_bands(self, k: float = 2.0) -> bool:
        """Level means decrease and no step up is significant at ``k`` stderr.

        Each mean must lie below its predecessor, and the lower band edge of a
        level must never sit above the upper band edge of the previous level.
        """
        for i in range(1, len(self.levels)):
            if not self.mse[i] < self.mse[i - 1]:
                return False
            if not self.mse[i] - k * self.stderr[i] < self.mse[i - 1] + k * self.stderr[i - 1]:
                return False
        return True

    def bands_disjoint(self, k: float = 2.0) -> bool:
        """Stricter reading: successive ``k`` stderr bands do not overlap at all."""
        for i in range(1, len(self.levels)):
            if not self.mse[i] + k * self.stderr[i] < self.mse[i - 1] - k * self.stderr[i - 1]:
                return False
        return True
