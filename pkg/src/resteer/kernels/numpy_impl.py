"""Pure numpy/scipy implementations of the hot per-pixel kernels.

All windowed statistics use clamped (edge-replicated) borders; every pixel
sees a full window, border samples repeat.  These routines are the fallback
path; resteer.kernels picks between this module and the numba twin.
"""

from __future__ import annotations

import numpy as np
from scipy import ndimage


def box_mean(x: np.ndarray, window: int) -> np.ndarray:
    """Mean over a clamped window x window neighborhood, per pixel."""
    return ndimage.uniform_filter(x, size=window, mode="nearest")


def local_mean_var(x: np.ndarray, window: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-pixel mean and population variance over the clamped window."""
    m = box_mean(x, window)
    m2 = box_mean(x * x, window)
    var = np.maximum(m2 - m * m, 0.0)
    return m, var


def local_ssim_map(a: np.ndarray, b: np.ndarray, window: int, c1: float, c2: float) -> np.ndarray:
    """Per-pixel SSIM between ``a`` and ``b`` over clamped uniform windows."""
    mu_a = box_mean(a, window)
    mu_b = box_mean(b, window)
    e_aa = box_mean(a * a, window)
    e_bb = box_mean(b * b, window)
    e_ab = box_mean(a * b, window)
    var_a = e_aa - mu_a * mu_a
    var_b = e_bb - mu_b * mu_b
    cov = e_ab - mu_a * mu_b
    num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)
    den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2)
    return num / den


def tv_chambolle(x: np.ndarray, weight: float, iters: int, tau: float = 0.25) -> np.ndarray:
    """Approximate prox of weight * isotropic TV via the dual projection iteration."""
    if weight <= 0.0 or iters <= 0:
        return x.copy()
    px = np.zeros_like(x)
    py = np.zeros_like(x)
    scaled = x / weight
    for _ in range(iters):
        d = _divergence(px, py) - scaled
        gx, gy = _forward_grad(d)
        mag = np.sqrt(gx * gx + gy * gy)
        denom = 1.0 + tau * mag
        px = (px + tau * gx) / denom
        py = (py + tau * gy) / denom
    return x - weight * _divergence(px, py)


def total_variation(x: np.ndarray) -> float:
    """Discrete isotropic TV with forward differences and Neumann boundary."""
    gx, gy = _forward_grad(x)
    return float(np.sum(np.sqrt(gx * gx + gy * gy)))


def _forward_grad(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    gx = np.zeros_like(x)
    gy = np.zeros_like(x)
    gx[:-1, :] = x[1:, :] - x[:-1, :]
    gy[:, :-1] = x[:, 1:] - x[:, :-1]
    return gx, gy


def _divergence(px: np.ndarray, py: np.ndarray) -> np.ndarray:
    d = np.zeros_like(px)
    d[:-1, :] += px[:-1, :]
    d[1:, :] -= px[:-1, :]
    d[:, :-1] += py[:, :-1]
    d[:, 1:] -= py[:, :-1]
    return d


def nlm_filter(x: np.ndarray, bandwidth: float, patch: int = 5, search: int = 11) -> np.ndarray:
    """One pass of patch-mean non-local filtering.

    Weight between pixel p and search candidate q is
    exp(-patch_mse(p, q) / bandwidth^2); candidates range over the clamped
    search x search neighborhood; patch distances are clamped-window means
    of squared differences.
    """
    if bandwidth <= 0.0:
        return x.copy()
    h, w = x.shape
    half = search // 2
    inv = 1.0 / (bandwidth * bandwidth)
    rows = np.arange(h)[:, None]
    cols = np.arange(w)[None, :]
    num = np.zeros_like(x)
    den = np.zeros_like(x)
    for dy in range(-half, half + 1):
        r = np.clip(rows + dy, 0, h - 1)
        for dx in range(-half, half + 1):
            c = np.clip(cols + dx, 0, w - 1)
            shifted = x[r, c]
            diff = x - shifted
            d2 = box_mean(diff * diff, patch)
            wgt = np.exp(-d2 * inv)
            num += wgt * shifted
            den += wgt
    return num / den


def conv2d_zero(x: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Zero-padded 2-D convolution (kernel flipped) for odd-sized kernels."""
    return ndimage.convolve(x, kernel, mode="constant", cval=0.0)


def corr2d_zero(x: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Zero-padded 2-D correlation; the adjoint of conv2d_zero."""
    return ndimage.correlate(x, kernel, mode="constant", cval=0.0)
