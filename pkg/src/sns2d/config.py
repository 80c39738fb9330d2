"""Flat ``key = value`` configuration files with one section per module.

Example::

    [grid]
    N = 64

    [noise]
    sigmas = 1,0; 0.6,0.8

    [scheme]
    mu = 0.05
    T = 0.5
    M = 1024

Unknown sections or keys raise :class:`ConfigError`.  Overrides use the
form ``section.key=value``; a bare ``key=value`` works when the key name is
unique across sections.
"""
from __future__ import annotations

import configparser
import os

from .harness import ConfigError, InitialCondition, StudyConfig, ValidateConfig
from .noise import NoiseModel


def _ints(text: str) -> tuple:
    return tuple(int(x) for x in text.replace(";", ",").split(",") if x.strip())


def _floats(text: str) -> tuple:
    return tuple(float(x) for x in text.replace(";", ",").split(",") if x.strip())


def _sigmas(text: str) -> tuple:
    text = text.strip()
    if not text or text.lower() == "none":
        return ()
    out = []
    for item in text.split(";"):
        vec = _floats(item)
        if len(vec) != 2:
            raise ValueError(f"sigma entry {item.strip()!r} must have two components")
        out.append(vec)
    return tuple(out)


def _int(text: str) -> int:
    return int(str(text).strip())


SCHEMA = {
    "grid": {"N": (_int, 64)},
    "noise": {"K": (_int, None), "sigmas": (_sigmas, ((1.0, 0.0), (0.6, 0.8)))},
    "scheme": {
        "mu": (float, 0.05),
        "T": (float, 0.5),
        "M": (_int, 1024),
        "fp_tol": (float, 1e-12),
        "fp_max_iters": (_int, 100),
    },
    "initial": {
        "u0": (str, "taylor-green+random"),
        "decay": (float, 5.0),
        "amplitude": (float, 0.1),
        "seed": (_int, 0),
        "mode": (_ints, (1, 0)),
        "mode_amplitude": (_floats, (0.0, 1.0)),
        "path": (str, ""),
    },
    "study": {
        "levels": (_ints, (16, 32, 64, 128, 256)),
        "M_f": (_int, 4096),
        "samples": (_int, 32),
        "master_seed": (_int, 20240601),
        "reference": (str, "scheme"),
        "reference_factor": (_int, 16),
    },
    "run": {
        "seed": (_int, 7),
        "save_step": (_int, None),
        "start_step": (_int, 0),
        "snapshot_steps": (_ints, ()),
        "pressure": (lambda s: str(s).strip().lower() in ("1", "true", "yes", "on"), False),
    },
    "validate": {"N": (_int, 32), "M": (_int, 64), "pressure_M": (_int, 256), "seed": (_int, 7)},
}


def _resolve_key(key: str) -> tuple[str, str]:
    if "." in key:
        section, name = key.split(".", 1)
        if section not in SCHEMA:
            raise ConfigError(f"unknown config section {section!r}")
        if name not in SCHEMA[section]:
            raise ConfigError(f"unknown config key {key!r}")
        return section, name
    hits = [s for s, keys in SCHEMA.items() if key in keys]
    if not hits:
        raise ConfigError(f"unknown config key {key!r}")
    if len(hits) > 1:
        raise ConfigError(f"ambiguous config key {key!r}; use one of {', '.join(h + '.' + key for h in hits)}")
    return hits[0], key


def load_config(path=None, overrides=(), env=None) -> dict:
    """Parse a config file plus ``section.key=value`` overrides.

    Returns ``{section: {key: typed value}}`` with defaults filled in.
    ``SNS_SEED`` in ``env`` (default ``os.environ``) replaces
    ``study.master_seed`` and ``run.seed``; explicit overrides win over it.
    """
    raw = {s: {} for s in SCHEMA}
    if path is not None:
        cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
        cp.optionxform = str
        try:
            with open(path) as fh:
                cp.read_file(fh)
        except (OSError, configparser.Error) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        for section in cp.sections():
            if section not in SCHEMA:
                raise ConfigError(f"unknown config section [{section}]")
            for key, value in cp.items(section):
                if key not in SCHEMA[section]:
                    raise ConfigError(f"unknown config key {section}.{key}")
                raw[section][key] = value
    env = os.environ if env is None else env
    if env.get("SNS_SEED"):
        raw["study"]["master_seed"] = env["SNS_SEED"]
        raw["run"]["seed"] = env["SNS_SEED"]
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        key, value = item.split("=", 1)
        section, name = _resolve_key(key.strip())
        raw[section][name] = value.strip()
    out = {}
    for section, keys in SCHEMA.items():
        out[section] = {}
        for name, (conv, default) in keys.items():
            if name in raw[section]:
                try:
                    out[section][name] = conv(raw[section][name])
                except ValueError as exc:
                    raise ConfigError(f"bad value for {section}.{name}: {raw[section][name]!r} ({exc})") from exc
            else:
                out[section][name] = default
    return out


def noise_model(cfg: dict) -> NoiseModel:
    sig = cfg["noise"]["sigmas"]
    K = cfg["noise"]["K"]
    if K is not None:
        if K < 0 or K > len(sig):
            raise ConfigError(f"noise.K={K} but only {len(sig)} sigma vectors are given")
        sig = sig[:K]
    return NoiseModel(sig)


def initial_condition(cfg: dict) -> InitialCondition:
    i = cfg["initial"]
    return InitialCondition(
        kind=i["u0"],
        decay=i["decay"],
        amplitude=i["amplitude"],
        seed=i["seed"],
        mode=tuple(i["mode"]),
        mode_amplitude=tuple(i["mode_amplitude"]),
        path=i["path"],
    )


def study_config(cfg: dict) -> StudyConfig:
    s = cfg["study"]
    return StudyConfig(
        N=cfg["grid"]["N"],
        noise=noise_model(cfg),
        mu=cfg["scheme"]["mu"],
        T=cfg["scheme"]["T"],
        levels=s["levels"],
        M_f=s["M_f"],
        samples=s["samples"],
        master_seed=s["master_seed"],
        u0=initial_condition(cfg),
        fp_tol=cfg["scheme"]["fp_tol"],
        fp_max_iters=cfg["scheme"]["fp_max_iters"],
        reference=s["reference"],
        reference_factor=s["reference_factor"],
    )


def validate_config(cfg: dict) -> ValidateConfig:
    v = cfg["validate"]
    return ValidateConfig(
        N=v["N"],
        noise=noise_model(cfg),
        mu=cfg["scheme"]["mu"],
        T=cfg["scheme"]["T"],
        M=v["M"],
        pressure_M=v["pressure_M"],
        fp_tol=cfg["scheme"]["fp_tol"],
        fp_max_iters=cfg["scheme"]["fp_max_iters"],
        seed=v["seed"],
        u0=initial_condition(cfg),
    )
