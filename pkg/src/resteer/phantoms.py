"""Synthetic test images and sampling masks.

All phantoms are deterministic analytic images with intensities in [0, 1].
The Shepp-Logan phantom uses the classic ten-ellipse table (normalized
intensities), rasterized at pixel centers on the [-1, 1]^2 grid with the
y axis pointing up.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import ParameterError

PHANTOM_NAMES = ("shepp-logan", "gradient", "checkerboard", "disks")
MASK_KINDS = ("random-uniform", "center-weighted-lines", "box")

# (intensity, a, b, x0, y0, phi_degrees)
SHEPP_LOGAN_ELLIPSES = (
    (1.00, 0.6900, 0.9200, 0.00, 0.0000, 0.0),
    (-0.98, 0.6624, 0.8740, 0.00, -0.0184, 0.0),
    (-0.02, 0.1100, 0.3100, 0.22, 0.0000, -18.0),
    (-0.02, 0.1600, 0.4100, -0.22, 0.0000, 18.0),
    (0.01, 0.2100, 0.2500, 0.00, 0.3500, 0.0),
    (0.01, 0.0460, 0.0460, 0.00, 0.1000, 0.0),
    (0.01, 0.0460, 0.0460, 0.00, -0.1000, 0.0),
    (0.01, 0.0460, 0.0230, -0.08, -0.6050, 0.0),
    (0.01, 0.0230, 0.0230, 0.00, -0.6060, 0.0),
    (0.01, 0.0230, 0.0460, 0.06, -0.6050, 0.0),
)


def make_phantom(name: str, size: int) -> np.ndarray:
    """Deterministic analytic test image with values in [0, 1]."""
    if size < 16:
        raise ParameterError(f"phantom size must be >= 16, got {size}")
    if name == "shepp-logan":
        return _shepp_logan(size)
    if name == "gradient":
        j = np.arange(size, dtype=np.float64)
        return np.tile(j / (size - 1), (size, 1))
    if name == "checkerboard":
        i = np.arange(size)[:, None]
        j = np.arange(size)[None, :]
        return ((i + j) % 2 == 0).astype(np.float64)
    if name == "disks":
        return _disks(size)
    raise ParameterError(f"unknown phantom name {name!r}")


def _shepp_logan(size: int) -> np.ndarray:
    # pixel centers; x to the right, y up
    coords = (2.0 * np.arange(size) + 1.0 - size) / size
    x = coords[None, :]
    y = -coords[:, None]
    img = np.zeros((size, size))
    for value, a, b, x0, y0, phi in SHEPP_LOGAN_ELLIPSES:
        rad = math.radians(phi)
        c, s = math.cos(rad), math.sin(rad)
        xr = (x - x0) * c + (y - y0) * s
        yr = -(x - x0) * s + (y - y0) * c
        inside = (xr * xr) / (a * a) + (yr * yr) / (b * b) <= 1.0
        img[inside] += value
    return np.clip(img, 0.0, 1.0)


def _disks(size: int) -> np.ndarray:
    coords = (2.0 * np.arange(size) + 1.0 - size) / size
    x = coords[None, :]
    y = -coords[:, None]
    img = np.full((size, size), 0.1)
    for value, cx, cy, radius in (
        (0.45, -0.40, 0.35, 0.30),
        (0.70, 0.42, 0.30, 0.22),
        (1.00, 0.05, -0.40, 0.34),
        (0.25, -0.45, -0.45, 0.16),
    ):
        inside = (x - cx) ** 2 + (y - cy) ** 2 <= radius * radius
        img[inside] = value
    return img


def make_sampling_mask(kind: str, keep_fraction: float, size: int, seed: int = 0) -> np.ndarray:
    """Binary sampling mask of shape (size, size).

    random-uniform keeps exactly round(keep_fraction * size^2) entries;
    center-weighted-lines keeps whole rows with probability decaying from the
    center row plus a guaranteed central band of ceil(8% of rows); box keeps
    a centered rectangle of roughly the requested area.
    """
    if not (0.0 < keep_fraction <= 1.0):
        raise ParameterError(f"keep_fraction must be in (0, 1], got {keep_fraction}")
    if size < 1:
        raise ParameterError(f"mask size must be positive, got {size}")
    if kind == "random-uniform":
        total = size * size
        k = int(np.rint(keep_fraction * total))
        mask = np.zeros(total)
        order = np.random.default_rng(seed).permutation(total)
        mask[order[:k]] = 1.0
        return mask.reshape(size, size)
    if kind == "center-weighted-lines":
        return _center_lines(keep_fraction, size, seed)
    if kind == "box":
        side_h = max(1, int(np.rint(math.sqrt(keep_fraction) * size)))
        side_w = side_h
        mask = np.zeros((size, size))
        top = (size - side_h) // 2
        left = (size - side_w) // 2
        mask[top : top + side_h, left : left + side_w] = 1.0
        return mask
    raise ParameterError(f"unknown mask kind {kind!r}")


def center_band_rows(size: int) -> tuple[int, int]:
    """[start, stop) row range of the guaranteed central band."""
    band = math.ceil(0.08 * size)
    start = size // 2 - band // 2
    return start, start + band


def _center_lines(keep_fraction: float, size: int, seed: int) -> np.ndarray:
    """Symmetric row mask: kept rows come in conjugate pairs i <-> (size - i) % size.

    Row indices are fftshifted frequencies (DC at size // 2), so the pairing
    keeps the spectrum Hermitian and the frequency operator's null projector
    exact on real images.
    """
    center = size // 2
    band_start, band_stop = center_band_rows(size)
    half_band = max(band_stop - band_start, 1) // 2
    keep = np.zeros(size, dtype=bool)
    keep[center - half_band : center + half_band + 1] = True

    target = max(int(keep.sum()), int(np.rint(keep_fraction * size)))
    rng = np.random.default_rng(seed)
    offsets = np.arange(half_band + 1, center)
    weights = np.exp(-(offsets.astype(np.float64) ** 2) / (2.0 * (size / 6.0) ** 2))
    order = rng.choice(offsets, size=offsets.size, replace=False, p=weights / weights.sum())
    for off in order:
        if keep.sum() >= target:
            break
        keep[center - off] = True
        keep[center + off] = True
    mask = np.zeros((size, size))
    mask[keep, :] = 1.0
    return mask
