"""Truncated Fourier fields on the torus [0, 2*pi)^2.

Coefficients are stored as full complex ``N x N`` arrays in numpy FFT order
(index ``j`` holds wavenumber ``j`` for ``j < N/2`` and ``j - N`` otherwise)
with the normalization ``u(x) = sum_xi u_hat(xi) exp(i xi.x)``.  The Nyquist
row and column (wavenumber ``-N/2``) are kept at zero so that every retained
mode has its conjugate partner in the band.

Norms follow Parseval on the torus: ``||u||_{L2}^2 = (2 pi)^2 sum |u_hat|^2``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.fft as sfft

TORUS_AREA = (2.0 * np.pi) ** 2


@dataclass(frozen=True)
class GridSpec:
    """Spectral truncation with ``N`` modes per direction."""

    N: int

    def __post_init__(self):
        if not isinstance(self.N, (int, np.integer)) or self.N < 4 or self.N % 2:
            raise ValueError(f"modes_per_dim must be an even integer >= 4, got {self.N!r}")

    @property
    def padded(self) -> int:
        return 3 * self.N // 2

    @cached_property
    def k(self) -> np.ndarray:
        return np.fft.fftfreq(self.N, 1.0 / self.N).astype(float)

    @cached_property
    def kx(self) -> np.ndarray:
        return self.k[:, None] * np.ones((1, self.N))

    @cached_property
    def ky(self) -> np.ndarray:
        return np.ones((self.N, 1)) * self.k[None, :]

    @cached_property
    def k2(self) -> np.ndarray:
        return self.kx**2 + self.ky**2

    @cached_property
    def inv_k2(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            out = 1.0 / self.k2
        out[0, 0] = 0.0
        return out

    @cached_property
    def mask(self) -> np.ndarray:
        """Retained modes: everything except the Nyquist row/column."""
        m = np.ones((self.N, self.N), dtype=bool)
        m[self.N // 2, :] = False
        m[:, self.N // 2] = False
        return m

    @cached_property
    def _neg_index(self) -> np.ndarray:
        return (-np.arange(self.N)) % self.N

    @cached_property
    def _rev_cols(self) -> np.ndarray:
        return np.arange(self.N // 2 - 1, 0, -1)

    @cached_property
    def _half_ops(self) -> tuple:
        """Half-spectrum wavenumbers and projector entries (masked, zero mean)."""
        h = self.N // 2
        kx, ky = self.kx[:, :h], self.ky[:, :h]
        w = self.inv_k2[:, :h]
        m = self.mask[:, :h].astype(float)
        p11 = (1.0 - kx * kx * w) * m
        p12 = (-kx * ky * w) * m
        p22 = (1.0 - ky * ky * w) * m
        p11[0, 0] = p12[0, 0] = p22[0, 0] = 0.0
        return kx, ky, p11, p12, p22

    def physical_coords(self, n: int | None = None) -> tuple[np.ndarray, np.ndarray]:
        n = self.N if n is None else n
        x = 2.0 * np.pi * np.arange(n) / n
        return np.meshgrid(x, x, indexing="ij")


@dataclass(frozen=True, eq=False)
class ScalarField:
    grid: GridSpec
    coeffs: np.ndarray

    def __post_init__(self):
        if self.coeffs.shape != (self.grid.N, self.grid.N):
            raise ValueError(f"scalar coeffs shape {self.coeffs.shape} does not match N={self.grid.N}")


@dataclass(frozen=True, eq=False)
class SpectralVelocity:
    """Velocity field as a ``(2, N, N)`` coefficient array.

    Construction does not project; use :func:`leray_project` to obtain a
    solenoidal field from arbitrary coefficients.
    """

    grid: GridSpec
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.coeffs.shape != (2, self.grid.N, self.grid.N):
            raise ValueError(f"velocity coeffs shape {self.coeffs.shape} does not match N={self.grid.N}")

    @classmethod
    def zeros(cls, grid: GridSpec) -> "SpectralVelocity":
        return cls(grid, np.zeros((2, grid.N, grid.N), dtype=complex))

    def __add__(self, other: "SpectralVelocity") -> "SpectralVelocity":
        _check_same_grid(self.grid, other.grid)
        return SpectralVelocity(self.grid, self.coeffs + other.coeffs)

    def __sub__(self, other: "SpectralVelocity") -> "SpectralVelocity":
        _check_same_grid(self.grid, other.grid)
        return SpectralVelocity(self.grid, self.coeffs - other.coeffs)

    def __mul__(self, scalar: float) -> "SpectralVelocity":
        return SpectralVelocity(self.grid, self.coeffs * scalar)

    __rmul__ = __mul__


def _check_same_grid(a: GridSpec, b: GridSpec) -> None:
    if a != b:
        raise ValueError(f"grid mismatch: N={a.N} vs N={b.N}")


def _as_array(v) -> np.ndarray:
    return v.coeffs if isinstance(v, (SpectralVelocity, ScalarField)) else np.asarray(v)


# ---------------------------------------------------------------------------
# transforms


def to_spectral(values: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Real grid samples (``(..., N, N)``) to truncated coefficients."""
    n = values.shape[-1]
    if values.shape[-2:] != (n, n) or n != grid.N:
        raise ValueError(f"physical array shape {values.shape[-2:]} does not match N={grid.N}")
    c = sfft.fft2(values, axes=(-2, -1)) / (n * n)
    return c * grid.mask


def to_physical(coeffs: np.ndarray, grid: GridSpec, n: int | None = None) -> np.ndarray:
    """Evaluate Hermitian coefficients on an ``n x n`` grid (default ``N``)."""
    n = grid.N if n is None else n
    if n == grid.N:
        half = coeffs[..., : n // 2 + 1]
    else:
        half = _pad_half(coeffs, grid, n)
    return sfft.irfft2(half, s=(n, n), axes=(-2, -1)) * (n * n)


def _pad_half(coeffs: np.ndarray, grid: GridSpec, n: int) -> np.ndarray:
    """Zero-padded half spectrum (rfft layout) on an ``n x n`` grid."""
    N = grid.N
    h = N // 2
    out = np.zeros(coeffs.shape[:-2] + (n, n // 2 + 1), dtype=complex)
    out[..., :h, :h] = coeffs[..., :h, :h]
    out[..., n - h + 1 :, :h] = coeffs[..., h + 1 :, :h]
    return out


def _truncate_half(half: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Retained columns ``0..N/2-1`` of a padded-grid half spectrum, as ``(..., N, N/2)``."""
    N = grid.N
    h = N // 2
    n = half.shape[-2]
    out = np.zeros(half.shape[:-2] + (N, h), dtype=complex)
    out[..., :h, :] = half[..., :h, :h]
    out[..., h + 1 :, :] = half[..., n - h + 1 :, :h]
    return out


def _complete(half: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Full ``N x N`` Hermitian coefficients from columns ``0..N/2-1``."""
    N = grid.N
    h = N // 2
    full = np.zeros(half.shape[:-2] + (N, N), dtype=complex)
    full[..., :h] = half
    # c(kx, -ky) = conj(c(-kx, ky))
    full[..., h + 1 :] = np.conj(half[..., grid._neg_index[:, None], grid._rev_cols[None, :]])
    return full


def _tensor_uu_half(c: np.ndarray, grid: GridSpec) -> np.ndarray:
    n = grid.padded
    u = sfft.irfft2(_pad_half(c, grid, n), s=(n, n), axes=(-2, -1)) * (n * n)
    prods = np.empty((3, n, n))
    np.multiply(u[0], u[0], out=prods[0])
    np.multiply(u[0], u[1], out=prods[1])
    np.multiply(u[1], u[1], out=prods[2])
    half = sfft.rfft2(prods, axes=(-2, -1))
    half *= 1.0 / (n * n)
    return _truncate_half(half, grid)


def _tensor_uu(c: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Dealiased coefficients of ``(u1 u1, u1 u2, u2 u2)`` for ``c`` of shape (2, N, N)."""
    return _complete(_tensor_uu_half(c, grid), grid)


# ---------------------------------------------------------------------------
# operators on raw coefficient arrays (hot path)


def _project(c: np.ndarray, grid: GridSpec) -> np.ndarray:
    kx, ky = grid.kx, grid.ky
    kdotv = (kx * c[0] + ky * c[1]) * grid.inv_k2
    out = np.empty_like(c)
    out[0] = (c[0] - kx * kdotv) * grid.mask
    out[1] = (c[1] - ky * kdotv) * grid.mask
    out[:, 0, 0] = 0.0
    return out


def _div_tensor(t: np.ndarray, grid: GridSpec) -> np.ndarray:
    """``div(u x u)`` from the symmetric tensor components (11, 12, 22)."""
    ikx, iky = 1j * grid.kx, 1j * grid.ky
    return np.stack((ikx * t[0] + iky * t[1], ikx * t[1] + iky * t[2]))


def _nonlinear(c: np.ndarray, grid: GridSpec) -> np.ndarray:
    """``P div(u x u)``, evaluated on the half spectrum and completed."""
    t = _tensor_uu_half(c, grid)
    kx, ky, p11, p12, p22 = grid._half_ops
    # f = i div(T); projected: P f = f - xi (xi . f)/|xi|^2
    f1 = kx * t[0] + ky * t[1]
    f2 = kx * t[1] + ky * t[2]
    out = np.empty((2,) + f1.shape, dtype=complex)
    out[0] = 1j * (p11 * f1 + p12 * f2)
    out[1] = 1j * (p12 * f1 + p22 * f2)
    return _complete(out, grid)


# ---------------------------------------------------------------------------
# public operations


def leray_project(v) -> SpectralVelocity:
    """Project a spectral vector field onto divergence-free, zero-mean fields."""
    if isinstance(v, SpectralVelocity):
        grid, c = v.grid, v.coeffs
    else:
        comps = list(v)
        if len(comps) != 2:
            raise ValueError("expected two velocity components")
        if comps[0].grid != comps[1].grid:
            raise ValueError(f"grid mismatch between components: N={comps[0].grid.N} vs N={comps[1].grid.N}")
        grid = comps[0].grid
        c = np.stack([_as_array(x) for x in comps])
    return SpectralVelocity(grid, _project(c, grid))


def transport_apply(u: SpectralVelocity, sigma) -> SpectralVelocity:
    """``(sigma . grad) u`` for a constant vector ``sigma``."""
    s1, s2 = (float(x) for x in sigma)
    mult = 1j * (s1 * u.grid.kx + s2 * u.grid.ky)
    return SpectralVelocity(u.grid, u.coeffs * mult)


def nonlinear_term(u: SpectralVelocity) -> SpectralVelocity:
    """Leray-projected convection ``P div(u x u)`` with 3/2-rule dealiasing."""
    return SpectralVelocity(u.grid, _nonlinear(u.coeffs, u.grid))


def laplacian(u):
    """Modewise multiplication by ``-|xi|^2``; accepts scalar or vector fields."""
    out = _as_array(u) * (-u.grid.k2)
    return type(u)(u.grid, out)


def inverse_laplacian(f, atol: float = 1e-14):
    """Inverse Laplacian on zero-mean fields (zero mode mapped to zero)."""
    c = _as_array(f)
    mean = np.abs(c[..., 0, 0])
    scale = max(1.0, float(np.max(np.abs(c))))
    if np.any(mean > atol * scale):
        raise ValueError("inverse_laplacian requires zero-mean input (xi = 0 mode is not invertible)")
    return type(f)(f.grid, c * (-f.grid.inv_k2))


def divergence(v: SpectralVelocity) -> ScalarField:
    g = v.grid
    return ScalarField(g, 1j * (g.kx * v.coeffs[0] + g.ky * v.coeffs[1]))


def gradient(f: ScalarField) -> SpectralVelocity:
    g = f.grid
    return SpectralVelocity(g, np.stack((1j * g.kx * f.coeffs, 1j * g.ky * f.coeffs)))


def inner(u, v) -> float:
    """Real L2 inner product of two fields of the same kind."""
    a, b = _as_array(u), _as_array(v)
    return float(TORUS_AREA * np.real(np.vdot(a, b)))


def _weighted_sq(c: np.ndarray, weight: np.ndarray | None) -> float:
    p = (c.real**2 + c.imag**2)
    if p.ndim == 3:
        p = p.sum(axis=0)
    if weight is not None:
        p = p * weight
    return float(TORUS_AREA * p.sum())


def sobolev_norm(u, l: int) -> float:
    """Squared ``W^{l,2}`` norm, ``sum_{j<=l} ||grad^j u||^2`` via Parseval."""
    if l not in (0, 1, 2, 3):
        raise ValueError(f"unsupported Sobolev index l={l!r}; expected 0..3")
    k2 = u.grid.k2
    weight = sum(k2**j for j in range(l + 1))
    return _weighted_sq(_as_array(u), weight)


def l2_norm_sq(u) -> float:
    return _weighted_sq(_as_array(u), None)


def grad_norm_sq(u) -> float:
    """Squared seminorm ``||grad u||^2``."""
    return _weighted_sq(_as_array(u), u.grid.k2)


def lap_norm_sq(u) -> float:
    """Squared seminorm ``||Laplacian u||^2``."""
    return _weighted_sq(_as_array(u), u.grid.k2**2)


def max_divergence(u: SpectralVelocity) -> float:
    g = u.grid
    return float(np.max(np.abs(g.kx * u.coeffs[0] + g.ky * u.coeffs[1])))


def hermitian_defect(c: np.ndarray, grid: GridSpec) -> float:
    neg = grid._neg_index
    mirrored = np.conj(c[..., neg, :][..., :, neg])
    return float(np.max(np.abs((c - mirrored) * grid.mask)))


# ---------------------------------------------------------------------------
# initial data


def taylor_green(grid: GridSpec, amplitude: float = 1.0) -> SpectralVelocity:
    """``(sin x1 cos x2, -cos x1 sin x2)`` scaled by ``amplitude``."""
    x1, x2 = grid.physical_coords()
    phys = amplitude * np.stack((np.sin(x1) * np.cos(x2), -np.cos(x1) * np.sin(x2)))
    return leray_project(SpectralVelocity(grid, to_spectral(phys, grid)))


def single_mode(grid: GridSpec, xi, a) -> SpectralVelocity:
    """Real field ``a cos(xi . x)``; ``a`` must be orthogonal to ``xi``."""
    xi1, xi2 = (int(v) for v in xi)
    a = np.asarray(a, dtype=float)
    if abs(a[0] * xi1 + a[1] * xi2) > 1e-14 * max(1.0, float(np.abs(a).max())):
        raise ValueError("single mode amplitude must satisfy a . xi = 0")
    h = grid.N // 2
    if (xi1, xi2) == (0, 0) or max(abs(xi1), abs(xi2)) >= h:
        raise ValueError(f"wavenumber {xi} outside the retained band for N={grid.N}")
    c = np.zeros((2, grid.N, grid.N), dtype=complex)
    c[:, xi1 % grid.N, xi2 % grid.N] += 0.5 * a
    c[:, (-xi1) % grid.N, (-xi2) % grid.N] += 0.5 * a
    return SpectralVelocity(grid, c)


def _shell_phases(grid: GridSpec, rng: np.random.Generator) -> np.ndarray:
    """Uniform phases drawn shell by shell in ``max(|xi_1|, |xi_2|)``.

    Shell ``r`` always consumes the same stretch of the stream, so the
    phases of low modes do not change when ``N`` grows.
    """
    N = grid.N
    raw = np.zeros((N, N))
    kx, ky = grid.kx.astype(int), grid.ky.astype(int)
    shell = np.maximum(np.abs(kx), np.abs(ky))
    for r in range(1, N // 2):
        idx = np.nonzero((shell == r) & grid.mask)
        # canonical order inside the shell: by (xi_1, xi_2)
        order = np.lexsort((ky[idx], kx[idx]))
        raw[idx[0][order], idx[1][order]] = rng.uniform(0.0, 2.0 * np.pi, size=order.size)
    return raw


def random_divfree_field(grid: GridSpec, seed: int, decay_exponent: float = 5.0, amplitude: float = 1.0) -> SpectralVelocity:
    """Random solenoidal field with ``|a(xi)| = amplitude * |xi|^-s`` and random phases.

    The result is real (Hermitian coefficients), divergence-free and has
    zero mean; it is a deterministic function of ``seed`` and the phases of
    a given wavenumber do not depend on ``N``.
    """
    if decay_exponent <= 4:
        raise ValueError("decay exponent must exceed 4 for W^{3,2} data")
    if amplitude <= 0:
        raise ValueError("amplitude must be positive")
    rng = np.random.default_rng(seed)
    k2 = grid.k2
    mag = amplitude * np.where(k2 > 0, k2, 1.0) ** (-decay_exponent / 2.0)
    mag[0, 0] = 0.0
    raw = _shell_phases(grid, rng)
    neg = grid._neg_index
    upper = (grid.kx > 0) | ((grid.kx == 0) & (grid.ky > 0))
    phase = np.where(upper, raw, -raw[neg, :][:, neg])
    # i * perp(xi) with an odd phase gives c(-xi) = conj(c(xi))
    kmag = np.sqrt(np.where(k2 > 0, k2, 1.0))
    perp = np.stack((-grid.ky / kmag, grid.kx / kmag))
    c = 1j * perp * (mag * np.exp(1j * phase))
    return leray_project(SpectralVelocity(grid, c * grid.mask))
