import struct

import numpy as np
import pytest

from resteer.errors import DimensionError, ValidationError
from resteer.tensorio import (
    as_tensor,
    ct2_bytes,
    ct2_from_bytes,
    read_ct2,
    read_pgm,
    write_ct2,
    write_pgm,
)

from conftest import random_image


def test_ct2_round_trip(tmp_path):
    x = random_image(0, (7, 13))
    path = tmp_path / "x.ct2"
    write_ct2(path, x)
    back = read_ct2(path)
    assert np.array_equal(x, back)


def test_ct2_layout_is_exactly_specified():
    x = np.array([[1.5, -2.0], [0.0, 3.25], [4.0, 5.0]])
    blob = ct2_bytes(x)
    assert blob[:4] == b"CT2\x00"
    version, h, w = struct.unpack("<III", blob[4:16])
    assert (version, h, w) == (1, 3, 2)
    assert struct.unpack("<d", blob[16:24])[0] == 1.5
    assert struct.unpack("<d", blob[24:32])[0] == -2.0
    assert len(blob) == 16 + 8 * 6


def test_ct2_rejects_bad_magic_and_truncation():
    x = random_image(1, (4, 4))
    blob = ct2_bytes(x)
    with pytest.raises(ValidationError):
        ct2_from_bytes(b"JUNK" + blob[4:])
    with pytest.raises(ValidationError):
        ct2_from_bytes(blob[:-8])


def test_ct2_rejects_nonfinite_payload():
    x = np.ones((2, 2))
    blob = bytearray(ct2_bytes(x))
    blob[16:24] = struct.pack("<d", float("nan"))
    with pytest.raises(ValidationError):
        ct2_from_bytes(bytes(blob))


def test_as_tensor_validation():
    with pytest.raises(DimensionError):
        as_tensor(np.zeros(4))
    with pytest.raises(DimensionError):
        as_tensor(np.zeros((0, 3)))
    with pytest.raises(ValidationError):
        as_tensor(np.array([[1.0, np.inf]]))


def test_pgm_round_trip_quantized(tmp_path):
    x = random_image(2, (9, 5))
    path = tmp_path / "x.pgm"
    write_pgm(path, x)
    back = read_pgm(path)
    assert back.shape == x.shape
    assert np.abs(back - x).max() <= 0.5 / 255 + 1e-12
    assert back.min() >= 0.0 and back.max() <= 1.0


def test_pgm_header(tmp_path):
    path = tmp_path / "h.pgm"
    write_pgm(path, np.zeros((3, 7)))
    raw = path.read_bytes()
    assert raw.startswith(b"P5\n7 3\n255\n")
    assert len(raw) == len(b"P5\n7 3\n255\n") + 21
