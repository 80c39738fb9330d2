"""Command line entry point: ``sns2d simulate | convergence | validate``.

Exit codes: 0 ok, 2 invariant failure, 3 solver non-convergence, 4 config error.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import config as cfgmod
from .field import GridSpec, l2_norm_sq
from .harness import ConfigError, convergence_study, validate_suite
from .noise import generate_path
from .plot import convergence_svg
from .pressure import pressure_bound_stats, write_pressure_csv
from .scheme import NonConvergence, SchemeConfig, run_trajectory
from .snapshot import load_state, save_state

EXIT_OK, EXIT_INVARIANT, EXIT_NONCONVERGENCE, EXIT_CONFIG = 0, 2, 3, 4

# convenience flags -> config keys
FLAG_KEYS = {
    "N": "grid.N",
    "K": "noise.K",
    "sigmas": "noise.sigmas",
    "mu": "scheme.mu",
    "T": "scheme.T",
    "M": "scheme.M",
    "fp_tol": "scheme.fp_tol",
    "u0": "initial.u0",
    "seed": "run.seed",
    "levels": "study.levels",
    "M_f": "study.M_f",
    "samples": "study.samples",
    "master_seed": "study.master_seed",
}


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="key = value config file")
    common.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config entry (section.key=value), repeatable")
    common.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    common.add_argument("-v", "--verbose", action="count", default=0)
    for flag in FLAG_KEYS:
        common.add_argument("--" + flag.replace("_", "-"), dest="flag_" + flag, default=None,
                            help=f"shorthand for --set {FLAG_KEYS[flag]}=...")

    p = argparse.ArgumentParser(prog="sns2d", description="Stochastic 2D Navier-Stokes with transport noise")
    sub = p.add_subparsers(dest="command", required=True)
    sim = sub.add_parser("simulate", parents=[common], help="run one trajectory")
    sim.add_argument("--save-state", type=Path, help="write the state at run.save_step (default: final) here")
    sim.add_argument("--load-state", type=Path, help="start from this snapshot (at run.start_step)")
    sim.add_argument("--start-step", type=int, default=None, help="step index of the loaded state")
    sim.add_argument("--save-step", type=int, default=None, help="step whose state --save-state writes")
    sim.add_argument("--pressure", action="store_true", help="also write pressure statistics")
    conv = sub.add_parser("convergence", parents=[common], help="Monte Carlo convergence study")
    conv.add_argument("--threads", type=int, default=1, help="worker processes for the sample loop")
    sub.add_parser("validate", parents=[common], help="run the invariant suite")
    return p


def _load(args) -> dict:
    overrides = list(args.overrides)
    for flag, key in FLAG_KEYS.items():
        value = getattr(args, "flag_" + flag)
        if value is not None:
            overrides.append(f"{key}={value}")
    return cfgmod.load_config(args.config, overrides)


def _f(x: float) -> str:
    return f"{x:.17g}"


def cmd_simulate(args, cfg: dict) -> int:
    run = cfg["run"]
    sc = cfg["scheme"]
    try:
        grid = GridSpec(cfg["grid"]["N"])
        noise = cfgmod.noise_model(cfg)
        scheme = SchemeConfig(sc["mu"], sc["T"], sc["M"], sc["fp_tol"], sc["fp_max_iters"])
        M = scheme.M
        if M & (M - 1):
            raise ConfigError(f"scheme.M must be a power of two for simulate, got {M}")
        start = run["start_step"] if args.start_step is None else args.start_step
        save_step = run["save_step"] if args.save_step is None else args.save_step
        save_step = M if save_step is None else save_step
        if not 0 <= start <= M:
            raise ConfigError(f"start step {start} outside 0..{M}")
        if args.load_state is not None:
            u0 = load_state(args.load_state)
            if u0.grid != grid:
                raise ConfigError(f"snapshot has N={u0.grid.N}, config has N={grid.N}")
        else:
            u0 = cfgmod.initial_condition(cfg).build(grid)
        for m in (save_step, *run["snapshot_steps"]):
            if not start <= m <= M:
                raise ConfigError(f"snapshot step {m} outside {start}..{M}")
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    path = generate_path(run["seed"], noise.K, M, scheme.T)
    keep = {save_step, *run["snapshot_steps"]}
    want_all = args.pressure or run["pressure"]
    steps = M - start
    stride = 1 if want_all or keep - {start, M} else max(steps, 1)
    traj = run_trajectory(u0, path, M, noise, scheme, stride=stride, start=start) if steps else None
    if traj is None:
        states = {start: u0}
    else:
        states = {start + i * traj.stride: traj.state(i) for i in range(traj.states.shape[0])}
        traj.ledger.write_csv(out / "ledger.csv")
    if args.save_state is not None:
        save_state(states[save_step], args.save_state)
    for m in run["snapshot_steps"]:
        save_state(states[m], out / f"state_{m:06d}.sns2")
    if want_all and traj is not None:
        s_det, s_ito = pressure_bound_stats(traj, noise)
        write_pressure_csv([(M, s_det, s_ito)], out / "pressure.csv")
    final = states[M]
    e0, e1 = 0.5 * l2_norm_sq(u0), 0.5 * l2_norm_sq(final)
    print(f"initial_energy {_f(e0)}")
    print(f"final_energy {_f(e1)}")
    if traj is not None:
        led = traj.ledger
        print(f"max_rel_energy_defect {_f(float(led.relative_energy_defects().max()))}")
        print(f"max_fp_iters {int(led.fp_iters.max())}")
    return EXIT_OK


def cmd_convergence(args, cfg: dict) -> int:
    try:
        study = cfgmod.study_config(cfg)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    report = convergence_study(study, threads=args.threads)
    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    (out / "convergence.csv").write_text(report.csv_text())
    (out / "summary.json").write_text(report.summary_text())
    (out / "convergence.svg").write_text(convergence_svg(report))
    print(report.csv_text(), end="")
    alpha = "nan" if report.alpha_fit is None else _f(report.alpha_fit)
    print(f"alpha_fit {alpha}")
    return EXIT_OK


def cmd_validate(args, cfg: dict) -> int:
    try:
        vcfg = cfgmod.validate_config(cfg)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    report = validate_suite(vcfg)
    text = report.text()
    args.out.mkdir(parents=True, exist_ok=True)
    (args.out / "validate.txt").write_text(text)
    print(text, end="")
    return EXIT_OK if report.ok else EXIT_INVARIANT


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(message)s")
    try:
        cfg = _load(args)
        handler = {"simulate": cmd_simulate, "convergence": cmd_convergence, "validate": cmd_validate}[args.command]
        return handler(args, cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NonConvergence as exc:
        print(f"solver did not converge: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE


if __name__ == "__main__":
    sys.exit(main())
