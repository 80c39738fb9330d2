"""Implicit midpoint stepping for the transport-noise Navier-Stokes system.

One step solves, modewise,

    u_{m+1} = u_m + L u_{m+1/2} - dt N(u_{m+1/2}),   u_{m+1/2} = (u_m + u_{m+1}) / 2,

with ``L(xi) = -dt mu |xi|^2 + i sum_k (sigma_k . xi) dW_k`` and ``N`` the
projected convection.  The linear part is inverted exactly (a diagonal
Cayley solve), the convection by Picard iteration on the midpoint.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .field import (
    GridSpec,
    SpectralVelocity,
    _nonlinear,
    _weighted_sq,
)
from .noise import NoiseModel, WienerPath, coarsen_increments


class NonConvergence(RuntimeError):
    """Picard iteration did not reach ``fp_tol`` within ``fp_max_iters``."""

    def __init__(self, message, step=None, iterations=None, residual=None):
        super().__init__(message)
        self.step = step
        self.iterations = iterations
        self.residual = residual


@dataclass(frozen=True)
class SchemeConfig:
    mu: float
    T: float
    M: int
    fp_tol: float = 1e-12
    fp_max_iters: int = 100

    def __post_init__(self):
        if not self.mu > 0:
            raise ValueError("viscosity mu must be positive")
        if not self.T > 0:
            raise ValueError("final time T must be positive")
        if int(self.M) != self.M or self.M < 1:
            raise ValueError(f"step count M must be a positive integer, got {self.M!r}")
        if self.fp_tol < 1e-14:
            raise ValueError("fp_tol must be >= 1e-14")
        if self.fp_max_iters < 1:
            raise ValueError("fp_max_iters must be >= 1")

    @property
    def dt(self) -> float:
        return self.T / self.M

    def with_steps(self, M: int) -> "SchemeConfig":
        return SchemeConfig(self.mu, self.T, M, self.fp_tol, self.fp_max_iters)

    def times(self) -> np.ndarray:
        return np.arange(self.M + 1) * self.dt


LEDGER_FIELDS = (
    "energy_before",
    "energy_after",
    "dissipation",
    "energy_defect",
    "grad_before",
    "grad_after",
    "grad_dissipation",
    "h1_defect",
    "fp_iters",
    "fp_residual",
    "max_divergence",
    "mean_mode",
)


@dataclass
class StepLedger:
    """Per-step energy bookkeeping, one entry per accepted step.

    ``energy_*`` are ``||u||^2 / 2``, ``grad_*`` are ``||grad u||^2 / 2``;
    the dissipations are ``dt mu ||grad u_{m+1/2}||^2`` and
    ``dt mu ||Lap u_{m+1/2}||^2``.  The defects are ``after + dissipation -
    before`` and vanish for an exact solve.  ``max_divergence`` is
    ``max |xi . u_hat(xi)|`` of the new state and ``mean_mode`` is
    ``|u_hat(0)|``.
    """

    dt: float
    first_step: int = 0
    columns: dict = field(default_factory=lambda: {k: [] for k in LEDGER_FIELDS})

    def append(self, **entry) -> None:
        for k in LEDGER_FIELDS:
            self.columns[k].append(entry[k])

    def __len__(self) -> int:
        return len(self.columns["energy_before"])

    def __getattr__(self, name):
        cols = self.__dict__.get("columns")
        if cols is not None and name in cols:
            return np.asarray(cols[name])
        raise AttributeError(name)

    def relative_energy_defects(self) -> np.ndarray:
        scale = np.maximum(self.energy_before, np.finfo(float).tiny)
        return np.abs(self.energy_defect) / scale

    def relative_h1_defects(self) -> np.ndarray:
        scale = np.maximum(self.grad_before, np.finfo(float).tiny)
        return np.abs(self.h1_defect) / scale

    def cumulative_energy_defect(self) -> float:
        """``max_m |E_{m+1} + sum_{n<=m} dissipation_n - E_0| / E_0``."""
        if not len(self) or self.energy_before[0] == 0:
            return 0.0
        e0 = self.energy_before[0]
        running = self.energy_after + np.cumsum(self.dissipation)
        return float(np.max(np.abs(running - e0)) / e0)

    def write_csv(self, filename) -> None:
        with open(filename, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["m", "t", "energy", "grad_energy", "dissipation", "energy_defect", "fp_iters", "fp_residual"])
            for i in range(len(self)):
                c = self.columns
                w.writerow(
                    [
                        self.first_step + i + 1,
                        _fmt((self.first_step + i + 1) * self.dt),
                        _fmt(c["energy_after"][i]),
                        _fmt(c["grad_after"][i]),
                        _fmt(c["dissipation"][i]),
                        _fmt(c["energy_defect"][i]),
                        c["fp_iters"][i],
                        _fmt(c["fp_residual"][i]),
                    ]
                )


def _fmt(x: float) -> str:
    return f"{float(x):.17g}"


# ---------------------------------------------------------------------------


def linear_symbol(grid: GridSpec, dW, noise: NoiseModel, cfg: SchemeConfig) -> np.ndarray:
    """``L(xi) = -dt mu |xi|^2 + i sum_k (sigma_k . xi) dW_k``."""
    L = -cfg.dt * cfg.mu * grid.k2 + 0j
    dW = np.asarray(dW, dtype=float).reshape(-1)
    if dW.size != noise.K:
        raise ValueError(f"expected {noise.K} Wiener increments, got {dW.size}")
    if noise.K:
        sig = noise.as_array()
        theta = grid.kx * float(sig[:, 0] @ dW) + grid.ky * float(sig[:, 1] @ dW)
        L = L + 1j * theta
    return L


def linear_cayley_solve(rhs: SpectralVelocity, dW, noise: NoiseModel, cfg: SchemeConfig) -> SpectralVelocity:
    """Solve ``(I - L/2) x = rhs`` mode by mode."""
    L = linear_symbol(rhs.grid, dW, noise, cfg)
    return SpectralVelocity(rhs.grid, rhs.coeffs / (1.0 - 0.5 * L))


def _l2(c: np.ndarray) -> float:
    return math.sqrt(_weighted_sq(c, None))


def _midpoint_solve(c_m: np.ndarray, L: np.ndarray, grid: GridSpec, cfg: SchemeConfig):
    dt = cfg.dt
    den = 1.0 - 0.5 * L
    base = (1.0 + 0.5 * L) * c_m
    tol = cfg.fp_tol * max(1.0, _l2(c_m))
    v = c_m
    diff = math.inf
    for it in range(1, cfg.fp_max_iters + 1):
        u_new = (base - dt * _nonlinear(v, grid)) / den
        v_new = 0.5 * (c_m + u_new)
        diff = _l2(v_new - v)
        v = v_new
        if diff <= tol:
            return u_new, v, it, diff
    raise NonConvergence(
        f"Picard iteration stalled after {cfg.fp_max_iters} iterations (update {diff:.3e} > {tol:.3e});"
        " reduce dt",
        iterations=cfg.fp_max_iters,
        residual=diff,
    )


def _ledger_entry(c_m, c_new, v, grid, cfg, iters, resid) -> dict:
    k2 = grid.k2
    dtmu = cfg.dt * cfg.mu
    e_b = 0.5 * _weighted_sq(c_m, None)
    e_a = 0.5 * _weighted_sq(c_new, None)
    diss = dtmu * _weighted_sq(v, k2)
    g_b = 0.5 * _weighted_sq(c_m, k2)
    g_a = 0.5 * _weighted_sq(c_new, k2)
    gdiss = dtmu * _weighted_sq(v, k2 * k2)
    return dict(
        energy_before=e_b,
        energy_after=e_a,
        dissipation=diss,
        energy_defect=e_a + diss - e_b,
        grad_before=g_b,
        grad_after=g_a,
        grad_dissipation=gdiss,
        h1_defect=g_a + gdiss - g_b,
        fp_iters=iters,
        fp_residual=resid,
        max_divergence=float(np.max(np.abs(grid.kx * c_new[0] + grid.ky * c_new[1]))),
        mean_mode=float(np.max(np.abs(c_new[:, 0, 0]))),
    )


def midpoint_step(u_m: SpectralVelocity, dW, noise: NoiseModel, cfg: SchemeConfig):
    """Advance one step; returns ``(u_{m+1}, ledger_entry_dict)``."""
    grid = u_m.grid
    L = linear_symbol(grid, dW, noise, cfg)
    c_new, v, iters, resid = _midpoint_solve(u_m.coeffs, L, grid, cfg)
    return SpectralVelocity(grid, c_new), _ledger_entry(u_m.coeffs, c_new, v, grid, cfg, iters, resid)


def step_residual(u_m: SpectralVelocity, u_next: SpectralVelocity, dW, noise: NoiseModel, cfg: SchemeConfig) -> float:
    """L2 norm of ``u_{m+1} - u_m - L u_{m+1/2} + dt N(u_{m+1/2})``."""
    if u_m.grid != u_next.grid:
        raise ValueError("step_residual: grid mismatch")
    grid = u_m.grid
    L = linear_symbol(grid, dW, noise, cfg)
    v = 0.5 * (u_m.coeffs + u_next.coeffs)
    r = u_next.coeffs - u_m.coeffs - L * v + cfg.dt * _nonlinear(v, grid)
    return _l2(r)


@dataclass(eq=False)
class Trajectory:
    """States ``u_0, u_s, u_2s, ...`` (stride ``s``) of an ``M``-step run."""

    grid: GridSpec
    cfg: SchemeConfig
    stride: int
    states: np.ndarray = field(repr=False)
    ledger: StepLedger = field(repr=False)
    increments: np.ndarray = field(repr=False)
    start: int = 0

    @property
    def M(self) -> int:
        return self.cfg.M

    @property
    def dt(self) -> float:
        return self.cfg.dt

    @property
    def times(self) -> np.ndarray:
        return (self.start + np.arange(self.states.shape[0]) * self.stride) * self.cfg.dt

    def state(self, i: int) -> SpectralVelocity:
        return SpectralVelocity(self.grid, self.states[i])

    @property
    def final(self) -> SpectralVelocity:
        if (self.M - self.start) % self.stride:
            raise ValueError("final state not stored for this stride")
        return self.state(-1)


def run_trajectory(
    u0: SpectralVelocity,
    path,
    M: int,
    noise: NoiseModel,
    cfg: SchemeConfig,
    stride: int = 1,
    start: int = 0,
) -> Trajectory:
    """Run the midpoint scheme driven by ``path`` coarsened to ``M`` steps.

    ``path`` may be a :class:`WienerPath` or an already coarsened ``(K, M)``
    increment array.  ``u0`` is taken as the state at step ``start`` and
    steps ``start .. M-1`` are applied, so a run can be resumed from a
    snapshot.  States are kept every ``stride`` steps counted from
    ``start``.
    """
    cfg = cfg if cfg.M == M else cfg.with_steps(M)
    if isinstance(path, WienerPath):
        if path.K != noise.K:
            raise ValueError(f"path has {path.K} channels but noise model has K={noise.K}")
        if abs(path.T - cfg.T) > 1e-12 * cfg.T:
            raise ValueError(f"path horizon {path.T} differs from T={cfg.T}")
        dW = coarsen_increments(path, M)
    else:
        dW = np.asarray(path, dtype=float).reshape(noise.K, M) if noise.K == 0 else np.asarray(path, dtype=float).reshape(noise.K, -1)
        if dW.shape[1] != M:
            raise ValueError(f"increment array has {dW.shape[1]} steps, expected {M}")
    if not 0 <= start <= M:
        raise ValueError(f"start step {start} outside 0..{M}")
    steps = M - start
    if stride < 1 or steps % stride:
        raise ValueError(f"stride {stride} must divide the {steps} steps taken")
    grid = u0.grid
    states = np.empty((steps // stride + 1, 2, grid.N, grid.N), dtype=complex)
    states[0] = u0.coeffs
    ledger = StepLedger(cfg.dt, first_step=start)
    c = u0.coeffs
    for m in range(start, M):
        L = linear_symbol(grid, dW[:, m], noise, cfg)
        try:
            c_new, v, iters, resid = _midpoint_solve(c, L, grid, cfg)
        except NonConvergence as exc:
            exc.step = m
            exc.args = (f"step {m}: {exc.args[0]}",)
            raise
        ledger.append(**_ledger_entry(c, c_new, v, grid, cfg, iters, resid))
        c = c_new
        if (m + 1 - start) % stride == 0:
            states[(m + 1 - start) // stride] = c
    return Trajectory(grid=grid, cfg=cfg, stride=stride, states=states, ledger=ledger, increments=dW, start=start)
