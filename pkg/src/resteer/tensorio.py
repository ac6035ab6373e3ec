"""2-D tensor validation and file I/O.

Images, latents and per-pixel maps are plain float64 numpy arrays of shape
(height, width); frequency-domain measurements are complex128 arrays of the
same shape.  The binary container (".ct2") stores one real tensor:

    magic   4 bytes   b"CT2\\x00"
    header  3 x u32   little endian: version (=1), height, width
    data    h*w f64   little endian IEEE-754, row major

Binary 8-bit PGM (P5) is supported as an interchange format; pixel values
map linearly to [0, 1].
"""

from __future__ import annotations

import os
import struct
import tempfile
from pathlib import Path

import numpy as np

from .errors import DimensionError, ValidationError

CT2_MAGIC = b"CT2\x00"
CT2_VERSION = 1


def as_tensor(x, name: str = "tensor") -> np.ndarray:
    """Validate and return ``x`` as a C-contiguous float64 2-D array.

    Raises DimensionError for anything that is not a non-empty 2-D grid and
    ValidationError when an entry is NaN or infinite.
    """
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise DimensionError(f"{name} must be a non-empty 2-D array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contains non-finite entries")
    return np.ascontiguousarray(arr)


def as_complex_tensor(x, name: str = "tensor") -> np.ndarray:
    """Validate and return ``x`` as a C-contiguous complex128 2-D array."""
    arr = np.asarray(x, dtype=np.complex128)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise DimensionError(f"{name} must be a non-empty 2-D array, got shape {arr.shape}")
    if not (np.all(np.isfinite(arr.real)) and np.all(np.isfinite(arr.imag))):
        raise ValidationError(f"{name} contains non-finite entries")
    return np.ascontiguousarray(arr)


def check_same_shape(a: np.ndarray, b: np.ndarray, what: str = "tensors") -> None:
    if a.shape != b.shape:
        raise DimensionError(f"{what} have mismatched shapes {a.shape} vs {b.shape}")


def atomic_write_bytes(path: str | os.PathLike, payload: bytes) -> None:
    """Write ``payload`` to ``path`` via a temp file + rename (no partial files)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def ct2_bytes(x: np.ndarray) -> bytes:
    """Serialize a real tensor to the .ct2 container."""
    arr = as_tensor(x)
    h, w = arr.shape
    header = CT2_MAGIC + struct.pack("<III", CT2_VERSION, h, w)
    return header + arr.astype("<f8", copy=False).tobytes(order="C")


def write_ct2(path: str | os.PathLike, x: np.ndarray) -> None:
    atomic_write_bytes(path, ct2_bytes(x))


def ct2_from_bytes(payload: bytes, name: str = "ct2 payload") -> np.ndarray:
    if len(payload) < 16 or payload[:4] != CT2_MAGIC:
        raise ValidationError(f"{name}: bad magic, not a .ct2 container")
    version, h, w = struct.unpack("<III", payload[4:16])
    if version != CT2_VERSION:
        raise ValidationError(f"{name}: unsupported version {version}")
    expect = 16 + 8 * h * w
    if h < 1 or w < 1 or len(payload) != expect:
        raise ValidationError(f"{name}: payload length {len(payload)} does not match header {h}x{w}")
    data = np.frombuffer(payload, dtype="<f8", count=h * w, offset=16)
    return as_tensor(data.reshape(h, w), name=name)


def read_ct2(path: str | os.PathLike) -> np.ndarray:
    with open(path, "rb") as fh:
        return ct2_from_bytes(fh.read(), name=str(path))


def pgm_bytes(x: np.ndarray) -> bytes:
    """Serialize to binary 8-bit PGM; intensities are clipped to [0, 1] first."""
    arr = as_tensor(x)
    h, w = arr.shape
    pixels = np.clip(np.rint(np.clip(arr, 0.0, 1.0) * 255.0), 0, 255).astype(np.uint8)
    return f"P5\n{w} {h}\n255\n".encode("ascii") + pixels.tobytes(order="C")


def write_pgm(path: str | os.PathLike, x: np.ndarray) -> None:
    atomic_write_bytes(path, pgm_bytes(x))


def read_pgm(path: str | os.PathLike) -> np.ndarray:
    """Read binary 8-bit PGM, scaling linearly to [0, 1]."""
    with open(path, "rb") as fh:
        payload = fh.read()
    if not payload.startswith(b"P5"):
        raise ValidationError(f"{path}: not a binary PGM (P5) file")

    # Header = 4 whitespace-separated tokens (magic, width, height, maxval),
    # with '#' comment lines allowed between them.
    tokens: list[bytes] = []
    pos = 2
    while len(tokens) < 3:
        while pos < len(payload) and payload[pos : pos + 1].isspace():
            pos += 1
        if pos < len(payload) and payload[pos : pos + 1] == b"#":
            while pos < len(payload) and payload[pos : pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(payload) and not payload[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ValidationError(f"{path}: truncated PGM header")
        tokens.append(payload[start:pos])
    pos += 1  # single whitespace after maxval
    try:
        w, h, maxval = (int(t) for t in tokens)
    except ValueError as exc:
        raise ValidationError(f"{path}: malformed PGM header") from exc
    if maxval != 255:
        raise ValidationError(f"{path}: only 8-bit PGM supported (maxval 255)")
    data = payload[pos : pos + h * w]
    if len(data) != h * w:
        raise ValidationError(f"{path}: PGM pixel data truncated")
    arr = np.frombuffer(data, dtype=np.uint8).reshape(h, w).astype(np.float64) / 255.0
    return arr
