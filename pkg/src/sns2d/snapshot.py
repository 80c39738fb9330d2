"""Binary velocity snapshots.

Layout (little-endian): ``b"SNS2"``, ``u32`` format version, ``u32`` N, then
for each of the two components the ``N x N`` coefficient array as float64
``(re, im)`` pairs.  Rows run over ``xi_1`` and columns over ``xi_2``, both
in ascending order ``-N/2, ..., N/2 - 1`` (row-major).
"""
from __future__ import annotations

import struct

import numpy as np

from .field import GridSpec, SpectralVelocity

MAGIC = b"SNS2"
VERSION = 1


def encode_state(u: SpectralVelocity) -> bytes:
    N = u.grid.N
    ordered = np.fft.fftshift(u.coeffs, axes=(-2, -1))
    body = np.ascontiguousarray(ordered).astype("<c16").tobytes()
    return MAGIC + struct.pack("<II", VERSION, N) + body


def decode_state(data: bytes) -> SpectralVelocity:
    if data[:4] != MAGIC:
        raise ValueError("not an SNS2 snapshot (bad magic)")
    version, N = struct.unpack("<II", data[4:12])
    if version != VERSION:
        raise ValueError(f"unsupported snapshot version {version}")
    expected = 12 + 2 * N * N * 16
    if len(data) != expected:
        raise ValueError(f"snapshot size {len(data)} does not match N={N} (expected {expected})")
    arr = np.frombuffer(data, dtype="<c16", offset=12).reshape(2, N, N)
    coeffs = np.fft.ifftshift(arr, axes=(-2, -1)).astype(complex)
    return SpectralVelocity(GridSpec(N), coeffs)


def save_state(u: SpectralVelocity, filename) -> None:
    with open(filename, "wb") as fh:
        fh.write(encode_state(u))


def load_state(filename) -> SpectralVelocity:
    with open(filename, "rb") as fh:
        return decode_state(fh.read())
