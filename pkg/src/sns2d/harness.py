"""Convergence study and validation suite."""
from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from . import field as fld
from .analysis import (
    ErrorReport,
    error_from_states,
    error_functional,
    fit_order,
    mean_and_stderr,
    single_mode_exact_states,
)
from .noise import NoiseModel, coarsen_increments, generate_path, split_seed
from .pressure import pressure_bound_stats, pressure_cor, pressure_det, pressure_ito
from .scheme import NonConvergence, SchemeConfig, run_trajectory, step_residual
from .snapshot import load_state


log = logging.getLogger(__name__)


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class InitialCondition:
    """Initial datum recipe.

    ``kind`` is one of ``taylor-green``, ``random``, ``taylor-green+random``,
    ``single-mode`` or ``snapshot``.
    """

    kind: str = "taylor-green+random"
    decay: float = 5.0
    amplitude: float = 0.1
    seed: int = 0
    mode: tuple = (1, 0)
    mode_amplitude: tuple = (0.0, 1.0)
    path: str = ""

    KINDS = ("taylor-green", "random", "taylor-green+random", "single-mode", "snapshot")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ConfigError(f"unknown initial condition {self.kind!r}; expected one of {', '.join(self.KINDS)}")
        if self.kind == "snapshot" and not self.path:
            raise ConfigError("snapshot initial condition needs a path")

    def build(self, grid: fld.GridSpec) -> fld.SpectralVelocity:
        if self.kind == "taylor-green":
            return fld.taylor_green(grid)
        if self.kind == "random":
            return fld.random_divfree_field(grid, self.seed, self.decay, self.amplitude)
        if self.kind == "taylor-green+random":
            return fld.taylor_green(grid) + fld.random_divfree_field(grid, self.seed, self.decay, self.amplitude)
        if self.kind == "single-mode":
            return fld.single_mode(grid, self.mode, self.mode_amplitude)
        u = load_state(self.path)
        if u.grid != grid:
            raise ConfigError(f"snapshot {self.path} has N={u.grid.N}, config expects N={grid.N}")
        return u


@dataclass(frozen=True)
class StudyConfig:
    """Everything a convergence study depends on.

    ``reference`` is ``scheme`` (same stepper at ``M_f``) or ``exact`` (closed
    form, single-mode data only).  ``reference_factor`` is the minimum ratio
    ``M_f / max(levels)`` for the scheme reference.
    """

    N: int = 64
    noise: NoiseModel = field(default_factory=lambda: NoiseModel(((1.0, 0.0), (0.6, 0.8))))
    mu: float = 0.05
    T: float = 0.5
    levels: tuple = (16, 32, 64, 128, 256)
    M_f: int = 4096
    samples: int = 32
    master_seed: int = 20240601
    u0: InitialCondition = field(default_factory=InitialCondition)
    fp_tol: float = 1e-12
    fp_max_iters: int = 100
    reference: str = "scheme"
    reference_factor: int = 16

    def __post_init__(self):
        object.__setattr__(self, "levels", tuple(int(M) for M in self.levels))
        if self.reference not in ("scheme", "exact"):
            raise ConfigError(f"reference must be 'scheme' or 'exact', got {self.reference!r}")
        if not self.levels:
            raise ConfigError("at least one level is required")
        if self.M_f < 1 or self.M_f & (self.M_f - 1):
            raise ConfigError(f"M_f must be a power of two, got {self.M_f}")
        for M in self.levels:
            if M < 1 or self.M_f % M:
                raise ConfigError(f"level {M} does not divide M_f={self.M_f}")
        if self.reference == "scheme" and self.M_f < self.reference_factor * max(self.levels):
            raise ConfigError(
                f"M_f={self.M_f} must be at least {self.reference_factor} x the finest level {max(self.levels)}"
            )
        if self.reference == "exact" and self.u0.kind != "single-mode":
            raise ConfigError("the exact reference is only available for single-mode initial data")
        if self.samples < 8:
            raise ConfigError(f"samples must be >= 8, got {self.samples}")
        try:
            fld.GridSpec(self.N)
            self.scheme(1)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    @property
    def grid(self) -> fld.GridSpec:
        return fld.GridSpec(self.N)

    def scheme(self, M: int) -> SchemeConfig:
        return SchemeConfig(self.mu, self.T, M, self.fp_tol, self.fp_max_iters)


def _sample_errors(cfg: StudyConfig, s: int):
    """Per-level error samples for Monte Carlo sample ``s``."""
    grid = cfg.grid
    u0 = cfg.u0.build(grid)
    path = generate_path(split_seed(cfg.master_seed, s), cfg.noise.K, cfg.M_f, cfg.T)
    out = []
    try:
        if cfg.reference == "scheme":
            stride = cfg.M_f // max(cfg.levels)
            level = cfg.M_f
            ref = run_trajectory(u0, path, cfg.M_f, cfg.noise, cfg.scheme(cfg.M_f), stride=stride)
        for M in cfg.levels:
            level = M
            if cfg.reference == "scheme" and M == cfg.M_f:
                tr = ref
            else:
                tr = run_trajectory(u0, path, M, cfg.noise, cfg.scheme(M))
            if cfg.reference == "scheme":
                sample = error_functional(tr, ref, M)
            else:
                times = np.arange(M + 1) * (cfg.T / M)
                exact = single_mode_exact_states(
                    cfg.u0.mode_amplitude, cfg.u0.mode, times, path.values(M), cfg.mu, cfg.noise, grid
                )
                sample = error_from_states(tr.states, exact, grid, cfg.T / M)
            out.append((sample.total, sample.sq_err_path))
        log.info("sample %d done", s)
    except NonConvergence as exc:
        exc.sample = s
        exc.level = level
        exc.args = (f"sample {s}, level {level}: {exc.args[0]}",)
        raise
    return out


def _run_sample(args):
    return _sample_errors(*args)


def convergence_study(cfg: StudyConfig, threads: int = 1) -> ErrorReport:
    """Monte Carlo estimate of the mean-square error functional per level.

    Samples are independent (seed ``split_seed(master_seed, s)``) and
    reduced in sample order, so the report does not depend on ``threads``.
    """
    jobs = [(cfg, s) for s in range(cfg.samples)]
    threads = max(1, int(threads or 1))
    if threads == 1:
        results = [_run_sample(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_run_sample, jobs))
    mse, se, max_mean = [], [], []
    for i, M in enumerate(cfg.levels):
        totals = [r[i][0] for r in results]
        m, e = mean_and_stderr(totals)
        mse.append(m)
        se.append(e)
        paths = np.stack([r[i][1] for r in results])
        max_mean.append(float(paths.mean(axis=0).max()) if paths.size else 0.0)
    alpha = None
    if len(cfg.levels) >= 3 and all(v > 0 for v in mse):
        alpha = fit_order(cfg.levels, mse)
    return ErrorReport(
        levels=list(cfg.levels),
        T=cfg.T,
        mse=mse,
        stderr=se,
        alpha_fit=alpha,
        samples=cfg.samples,
        master_seed=cfg.master_seed,
        max_mean_sq=max_mean,
    )


# ---------------------------------------------------------------------------
# validation suite


@dataclass
class CheckResult:
    name: str
    value: float
    tolerance: float
    status: str  # "pass", "fail" or "skip"
    note: str = ""

    def line(self) -> str:
        return f"{self.status.upper():4s} {self.name:34s} value={self.value:.3e} tol={self.tolerance:.1e} {self.note}".rstrip()


@dataclass
class ValidationReport:
    checks: list

    @property
    def ok(self) -> bool:
        return all(c.status != "fail" for c in self.checks)

    def text(self) -> str:
        return "\n".join(c.line() for c in self.checks) + "\n"


@dataclass(frozen=True)
class ValidateConfig:
    """Sizes used by :func:`validate_suite`."""

    N: int = 32
    noise: NoiseModel = field(default_factory=lambda: NoiseModel(((1.0, 0.0), (0.6, 0.8))))
    mu: float = 0.05
    T: float = 0.5
    M: int = 64
    pressure_M: int = 256
    fp_tol: float = 1e-12
    fp_max_iters: int = 100
    seed: int = 7
    u0: InitialCondition = field(default_factory=InitialCondition)
    energy_tol: float = 1e-9
    cumulative_tol: float = 1e-7
    h1_tol: float = 1e-8


def _check(name, value, tol, skip=False, note=""):
    if skip:
        return CheckResult(name, float("nan"), tol, "skip", note)
    value = float(value)
    return CheckResult(name, value, tol, "pass" if value <= tol else "fail", note)


def validate_suite(cfg: ValidateConfig = ValidateConfig()) -> ValidationReport:
    grid = fld.GridSpec(cfg.N)
    noise = cfg.noise
    no_noise = noise.K == 0
    u0 = cfg.u0.build(grid)
    rnd = fld.random_divfree_field(grid, cfg.seed + 1, 5.0, 1.0)
    raw = fld.SpectralVelocity(grid, fld.to_spectral(np.random.default_rng(cfg.seed).standard_normal((2, cfg.N, cfg.N)), grid))
    checks = []

    un = math.sqrt(fld.l2_norm_sq(u0))
    # field
    p1 = fld.leray_project(raw)
    idem = np.max(np.abs(fld.leray_project(p1).coeffs - p1.coeffs)) / np.max(np.abs(p1.coeffs))
    checks.append(_check("projector_idempotence", idem, 1e-14))
    orth = abs(fld.inner(raw - p1, rnd)) / (math.sqrt(fld.l2_norm_sq(raw)) * math.sqrt(fld.l2_norm_sq(rnd)))
    checks.append(_check("projector_orthogonality", orth, 1e-12))
    phys = fld.to_physical(raw.coeffs, grid)
    rt = np.max(np.abs(fld.to_spectral(phys, grid) - raw.coeffs)) / np.max(np.abs(raw.coeffs))
    checks.append(_check("round_trip", rt, 1e-12))
    sig = noise.sigmas[0] if noise.K else (1.0, 0.0)
    tr_neutral = abs(fld.inner(fld.transport_apply(u0, sig), u0)) / fld.l2_norm_sq(u0)
    checks.append(_check("transport_energy_neutrality", tr_neutral, 1e-12, skip=no_noise, note="K=0" if no_noise else ""))
    nl = fld.nonlinear_term(u0)
    scale = math.sqrt(fld.l2_norm_sq(nl)) * un
    checks.append(_check("nonlinear_energy_neutrality", abs(fld.inner(nl, u0)) / scale if scale else 0.0, 1e-10))
    lap = fld.laplacian(u0)
    scale = math.sqrt(fld.l2_norm_sq(nl) * fld.l2_norm_sq(lap))
    checks.append(_check("nonlinear_enstrophy_neutrality", abs(fld.inner(nl, lap)) / scale if scale else 0.0, 1e-10))

    # noise
    path = generate_path(cfg.seed, max(noise.K, 1), 2**16, cfg.T)
    a = coarsen_increments(coarsen_increments(path, 2**10), 2**9)
    checks.append(_check("coarsening_consistency", np.max(np.abs(a - coarsen_increments(path, 2**9))), 0.0))
    z = path.increments[0] / math.sqrt(path.dt_fine)
    ks = stats.kstest(z, "norm").statistic
    crit = 1.63 / math.sqrt(z.size)  # 1% critical value, asymptotic
    checks.append(_check("increment_ks_statistic", ks, crit))

    # scheme
    scfg = SchemeConfig(cfg.mu, cfg.T, cfg.M, cfg.fp_tol, cfg.fp_max_iters)
    spath = generate_path(cfg.seed, noise.K, cfg.M, cfg.T)
    try:
        traj = run_trajectory(u0, spath, cfg.M, noise, scfg)
    except NonConvergence as exc:
        checks.append(CheckResult("picard_convergence", float(exc.residual or float("nan")), cfg.fp_tol, "fail", str(exc)))
        return ValidationReport(checks)
    led = traj.ledger
    checks.append(_check("energy_defect_per_step", led.relative_energy_defects().max(), cfg.energy_tol))
    checks.append(_check("energy_defect_cumulative", led.cumulative_energy_defect(), cfg.cumulative_tol))
    checks.append(_check("h1_defect_per_step", led.relative_h1_defects().max(), cfg.h1_tol))
    checks.append(_check("divergence_free", led.max_divergence.max() / un, 1e-12))
    checks.append(_check("zero_mean", led.mean_mode.max(), 0.0))
    worst = 0.0
    for m in range(0, cfg.M, max(1, cfg.M // 16)):
        r = step_residual(traj.state(m), traj.state(m + 1), spath.increments[:, m], noise, scfg)
        worst = max(worst, r / (cfg.fp_tol * max(1.0, math.sqrt(fld.l2_norm_sq(traj.state(m))))))
    checks.append(_check("momentum_residual_over_fp_tol", worst, 10.0))
    again = run_trajectory(u0, spath, cfg.M, noise, scfg)
    checks.append(_check("determinism", 0.0 if np.array_equal(again.states, traj.states) else 1.0, 0.0))

    # pressure
    worst_ito = 0.0
    worst_leray = 0.0
    worst_poisson = 0.0
    for m in range(0, cfg.M + 1, max(1, cfg.M // 8)):
        v = traj.state(m)
        vn = math.sqrt(fld.l2_norm_sq(v))
        for s in noise.sigmas:
            worst_ito = max(
                worst_ito,
                math.sqrt(fld.l2_norm_sq(pressure_ito(v, s))) / vn,
                math.sqrt(fld.l2_norm_sq(pressure_cor(v, s))) / vn,
            )
        pi = pressure_det(v)
        t = fld._tensor_uu(v.coeffs, grid)
        divuu = fld._div_tensor(t, grid)
        recon = divuu + fld.gradient(pi).coeffs
        nl = fld._nonlinear(v.coeffs, grid)
        worst_leray = max(worst_leray, np.max(np.abs(recon - nl)) / max(np.max(np.abs(nl)), 1e-300))
        divdiv = 1j * grid.kx * divuu[0] + 1j * grid.ky * divuu[1]
        res = fld.laplacian(pi).coeffs + divdiv
        res[0, 0] = 0.0
        worst_poisson = max(worst_poisson, np.max(np.abs(res)) / max(np.max(np.abs(divdiv)), 1e-300))
    checks.append(_check("stochastic_pressure_vanishing", worst_ito, 1e-12, skip=no_noise, note="K=0" if no_noise else ""))
    checks.append(_check("leray_pressure_consistency", worst_leray, 1e-10))
    checks.append(_check("pressure_poisson_residual", worst_poisson, 1e-10))
    Mp = cfg.pressure_M
    fine_path = generate_path(cfg.seed, noise.K, 2 * Mp, cfg.T)
    s1, _ = pressure_bound_stats(run_trajectory(u0, fine_path, Mp, noise, scfg.with_steps(Mp)), noise)
    s2, _ = pressure_bound_stats(run_trajectory(u0, fine_path, 2 * Mp, noise, scfg.with_steps(2 * Mp)), noise)
    ratio = s2 / s1 if s1 > 0 else 1.0
    checks.append(
        CheckResult("pressure_det_uniformity", ratio, 1.25, "pass" if 0.8 <= ratio <= 1.25 else "fail", "ratio in [0.8, 1.25]")
    )
    return ValidationReport(checks)


