import struct

import numpy as np
import pytest

from sns2d.field import GridSpec, random_divfree_field
from sns2d.snapshot import decode_state, encode_state, load_state, save_state


def test_round_trip(tmp_path):
    u = random_divfree_field(GridSpec(16), 3, 5.0, 1.0)
    save_state(u, tmp_path / "a.sns2")
    v = load_state(tmp_path / "a.sns2")
    assert v.grid == u.grid
    assert np.array_equal(v.coeffs, u.coeffs)


def test_layout():
    u = random_divfree_field(GridSpec(8), 1, 5.0, 1.0)
    data = encode_state(u)
    assert data[:4] == b"SNS2"
    assert struct.unpack("<II", data[4:12]) == (1, 8)
    assert len(data) == 12 + 2 * 64 * 16
    # first stored entry of component 1 is xi = (-4, -4); entry (row 5, col 4) is xi = (1, 0)
    body = np.frombuffer(data, dtype="<c16", offset=12).reshape(2, 8, 8)
    assert body[0, 5, 4] == u.coeffs[0, 1, 0]
    assert body[1, 3, 6] == u.coeffs[1, -1, 2]


@pytest.mark.parametrize(
    "mutate,msg",
    [
        (lambda d: b"XXXX" + d[4:], "magic"),
        (lambda d: d[:4] + struct.pack("<I", 2) + d[8:], "version"),
        (lambda d: d[:-16], "size"),
    ],
)
def test_rejects_corrupt(mutate, msg):
    data = encode_state(random_divfree_field(GridSpec(8), 1))
    with pytest.raises(ValueError, match=msg):
        decode_state(mutate(data))
