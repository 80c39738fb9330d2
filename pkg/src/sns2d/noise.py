"""Wiener increments at a finest dyadic level and exact coarsening.

Seed splitting: channel ``k`` of a path with seed ``s`` draws from
``numpy.random.default_rng(SeedSequence(s, spawn_key=(k,)))``.  The stream
of channel ``k`` depends only on ``(s, k)``, so adding channels never
reshuffles existing ones.  :func:`split_seed` uses the same mechanism to
derive per-sample seeds from a master seed.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class NoiseModel:
    """``K`` constant transport directions ``sigma_k`` in R^2."""

    sigmas: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        sig = tuple(tuple(float(c) for c in s) for s in self.sigmas)
        for s in sig:
            if len(s) != 2:
                raise ValueError(f"sigma vectors must have two components, got {s}")
        object.__setattr__(self, "sigmas", sig)

    @property
    def K(self) -> int:
        return len(self.sigmas)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.sigmas, dtype=float).reshape(self.K, 2)


def split_seed(seed: int, index: int) -> int:
    """Deterministic 64-bit child seed for stream ``index``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(index),))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True, eq=False)
class WienerPath:
    """Fine increments ``dW[k, m] = W_k(t_{m+1}) - W_k(t_m)`` on ``T / M_f`` steps."""

    seed: int
    T: float
    increments: np.ndarray = field(repr=False)

    @property
    def K(self) -> int:
        return self.increments.shape[0]

    @property
    def finest_steps(self) -> int:
        return self.increments.shape[1]

    @property
    def dt_fine(self) -> float:
        return self.T / self.finest_steps

    def values(self, M: int | None = None) -> np.ndarray:
        """``W_k(t_m)`` for ``m = 0..M`` (shape ``(K, M+1)``).

        ``W_k(t_m)`` adds the dyadic block sums selected by the binary digits
        of ``m`` (largest block first), taking each block sum from the same
        tree as :func:`coarsen_increments`.  Values at shared times are then
        bit-identical across levels, and ``W_k(T)`` is the tree total.
        """
        M_f = self.finest_steps
        M = M_f if M is None else M
        if M <= 0 or M_f % M or not _is_pow2(M_f // M):
            raise ValueError(f"level {M} is not a dyadic coarsening of {M_f}")
        tree = [self.increments]
        while tree[-1].shape[1] > 1:
            tree.append(tree[-1][:, 0::2] + tree[-1][:, 1::2])
        m = np.arange(M + 1) * (M_f // M)
        out = np.zeros((self.K, M + 1))
        for j in range(len(tree) - 1, -1, -1):
            hit = ((m >> j) & 1).astype(bool)
            out[:, hit] += tree[j][:, (m[hit] >> j) - 1]
        return out


def generate_path(seed: int, K: int, M_f: int, T: float) -> WienerPath:
    if not _is_pow2(M_f):
        raise ValueError(f"finest step count must be a power of two, got {M_f}")
    if T <= 0:
        raise ValueError("T must be positive")
    if K < 0:
        raise ValueError("K must be nonnegative")
    sd = np.sqrt(T / M_f)
    inc = np.empty((K, M_f))
    for k in range(K):
        rng = np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(k,)))
        inc[k] = sd * rng.standard_normal(M_f)
    return WienerPath(seed=int(seed), T=float(T), increments=inc)


def coarsen_increments(path, M_c: int) -> np.ndarray:
    """Sum fine increments down to ``M_c`` steps.

    ``path`` is a :class:`WienerPath` or a ``(K, M)`` increment array.  The
    reduction halves the level repeatedly, adding neighbouring pairs, so a
    coarse increment is a fixed binary-tree sum of its fine increments.
    Coarsening in stages therefore matches coarsening directly bit-for-bit,
    and ``coarsen_increments(path, 1)`` is ``W_k(T)`` at every level.
    """
    inc = path.increments if isinstance(path, WienerPath) else np.atleast_2d(np.asarray(path, dtype=float))
    M = inc.shape[1]
    if M_c <= 0 or M % M_c:
        raise ValueError(f"coarse step count {M_c} does not divide finest count {M}")
    if not _is_pow2(M // M_c):
        raise ValueError(f"level ratio {M // M_c} is not a power of two")
    out = inc.copy()
    while out.shape[1] > M_c:
        out = out[:, 0::2] + out[:, 1::2]
    return out


def write_path_csv(path: WienerPath, filename) -> None:
    with open(filename, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["k", "m", "increment"])
        for k in range(path.K):
            for m, v in enumerate(path.increments[k]):
                w.writerow([k, m, f"{v:.17g}"])
