"""numba-compiled twins of the numpy kernels.

Same clamped-border semantics as numpy_impl; elementwise passes are written
so that per-pixel arithmetic matches the numpy path operation for operation
(window sums may differ by float rounding only).
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def _box_mean(x, window):
    h, w = x.shape
    half = window // 2
    inv = 1.0 / (window * window)
    out = np.empty_like(x)
    for i in range(h):
        for j in range(w):
            s = 0.0
            for a in range(-half, half + 1):
                ia = i + a
                if ia < 0:
                    ia = 0
                elif ia >= h:
                    ia = h - 1
                for b in range(-half, half + 1):
                    jb = j + b
                    if jb < 0:
                        jb = 0
                    elif jb >= w:
                        jb = w - 1
                    s += x[ia, jb]
            out[i, j] = s * inv
    return out


def box_mean(x: np.ndarray, window: int) -> np.ndarray:
    return _box_mean(x, window)


@njit(cache=True)
def _local_mean_var(x, window):
    h, w = x.shape
    half = window // 2
    inv = 1.0 / (window * window)
    mean = np.empty_like(x)
    var = np.empty_like(x)
    for i in range(h):
        for j in range(w):
            s = 0.0
            s2 = 0.0
            for a in range(-half, half + 1):
                ia = i + a
                if ia < 0:
                    ia = 0
                elif ia >= h:
                    ia = h - 1
                for b in range(-half, half + 1):
                    jb = j + b
                    if jb < 0:
                        jb = 0
                    elif jb >= w:
                        jb = w - 1
                    v = x[ia, jb]
                    s += v
                    s2 += v * v
            m = s * inv
            mean[i, j] = m
            v2 = s2 * inv - m * m
            var[i, j] = v2 if v2 > 0.0 else 0.0
    return mean, var


def local_mean_var(x: np.ndarray, window: int) -> tuple[np.ndarray, np.ndarray]:
    return _local_mean_var(x, window)


@njit(cache=True)
def _local_ssim_map(a, b, window, c1, c2):
    h, w = a.shape
    half = window // 2
    inv = 1.0 / (window * window)
    out = np.empty_like(a)
    for i in range(h):
        for j in range(w):
            sa = 0.0
            sb = 0.0
            saa = 0.0
            sbb = 0.0
            sab = 0.0
            for p in range(-half, half + 1):
                ip = i + p
                if ip < 0:
                    ip = 0
                elif ip >= h:
                    ip = h - 1
                for q in range(-half, half + 1):
                    jq = j + q
                    if jq < 0:
                        jq = 0
                    elif jq >= w:
                        jq = w - 1
                    va = a[ip, jq]
                    vb = b[ip, jq]
                    sa += va
                    sb += vb
                    saa += va * va
                    sbb += vb * vb
                    sab += va * vb
            mu_a = sa * inv
            mu_b = sb * inv
            var_a = saa * inv - mu_a * mu_a
            var_b = sbb * inv - mu_b * mu_b
            cov = sab * inv - mu_a * mu_b
            num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)
            den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2)
            out[i, j] = num / den
    return out


def local_ssim_map(a: np.ndarray, b: np.ndarray, window: int, c1: float, c2: float) -> np.ndarray:
    return _local_ssim_map(a, b, window, c1, c2)


@njit(cache=True)
def _tv_chambolle(x, weight, iters, tau):
    h, w = x.shape
    px = np.zeros((h, w))
    py = np.zeros((h, w))
    d = np.empty((h, w))
    for _ in range(iters):
        for i in range(h):
            for j in range(w):
                dv = 0.0
                if i < h - 1:
                    dv += px[i, j]
                if i > 0:
                    dv -= px[i - 1, j]
                if j < w - 1:
                    dv += py[i, j]
                if j > 0:
                    dv -= py[i, j - 1]
                d[i, j] = dv - x[i, j] / weight
        for i in range(h):
            for j in range(w):
                gx = d[i + 1, j] - d[i, j] if i < h - 1 else 0.0
                gy = d[i, j + 1] - d[i, j] if j < w - 1 else 0.0
                mag = np.sqrt(gx * gx + gy * gy)
                denom = 1.0 + tau * mag
                px[i, j] = (px[i, j] + tau * gx) / denom
                py[i, j] = (py[i, j] + tau * gy) / denom
    out = np.empty((h, w))
    for i in range(h):
        for j in range(w):
            dv = 0.0
            if i < h - 1:
                dv += px[i, j]
            if i > 0:
                dv -= px[i - 1, j]
            if j < w - 1:
                dv += py[i, j]
            if j > 0:
                dv -= py[i, j - 1]
            out[i, j] = x[i, j] - weight * dv
    return out


def tv_chambolle(x: np.ndarray, weight: float, iters: int, tau: float = 0.25) -> np.ndarray:
    if weight <= 0.0 or iters <= 0:
        return x.copy()
    return _tv_chambolle(x, weight, iters, tau)


@njit(cache=True)
def _total_variation(x):
    h, w = x.shape
    s = 0.0
    for i in range(h):
        for j in range(w):
            gx = x[i + 1, j] - x[i, j] if i < h - 1 else 0.0
            gy = x[i, j + 1] - x[i, j] if j < w - 1 else 0.0
            s += np.sqrt(gx * gx + gy * gy)
    return s


def total_variation(x: np.ndarray) -> float:
    return float(_total_variation(x))


@njit(cache=True)
def _nlm_filter(x, bandwidth, patch, search):
    h, w = x.shape
    half = search // 2
    phalf = patch // 2
    pinv = 1.0 / (patch * patch)
    inv = 1.0 / (bandwidth * bandwidth)
    num = np.zeros((h, w))
    den = np.zeros((h, w))
    sq = np.empty((h, w))
    d2 = np.empty((h, w))
    for dy in range(-half, half + 1):
        for dx in range(-half, half + 1):
            for i in range(h):
                ir = i + dy
                if ir < 0:
                    ir = 0
                elif ir >= h:
                    ir = h - 1
                for j in range(w):
                    jc = j + dx
                    if jc < 0:
                        jc = 0
                    elif jc >= w:
                        jc = w - 1
                    diff = x[i, j] - x[ir, jc]
                    sq[i, j] = diff * diff
            for i in range(h):
                for j in range(w):
                    s = 0.0
                    for a in range(-phalf, phalf + 1):
                        ia = i + a
                        if ia < 0:
                            ia = 0
                        elif ia >= h:
                            ia = h - 1
                        for b in range(-phalf, phalf + 1):
                            jb = j + b
                            if jb < 0:
                                jb = 0
                            elif jb >= w:
                                jb = w - 1
                            s += sq[ia, jb]
                    d2[i, j] = s * pinv
            for i in range(h):
                ir = i + dy
                if ir < 0:
                    ir = 0
                elif ir >= h:
                    ir = h - 1
                for j in range(w):
                    jc = j + dx
                    if jc < 0:
                        jc = 0
                    elif jc >= w:
                        jc = w - 1
                    wgt = np.exp(-d2[i, j] * inv)
                    num[i, j] += wgt * x[ir, jc]
                    den[i, j] += wgt
    return num / den


def nlm_filter(x: np.ndarray, bandwidth: float, patch: int = 5, search: int = 11) -> np.ndarray:
    if bandwidth <= 0.0:
        return x.copy()
    return _nlm_filter(x, bandwidth, patch, search)


@njit(cache=True)
def _conv2d_zero(x, kernel):
    h, w = x.shape
    kh, kw = kernel.shape
    ca = kh // 2
    cb = kw // 2
    out = np.zeros((h, w))
    for i in range(h):
        for j in range(w):
            s = 0.0
            for a in range(kh):
                ia = i - a + ca
                if ia < 0 or ia >= h:
                    continue
                for b in range(kw):
                    jb = j - b + cb
                    if jb < 0 or jb >= w:
                        continue
                    s += kernel[a, b] * x[ia, jb]
            out[i, j] = s
    return out


def conv2d_zero(x: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    return _conv2d_zero(x, kernel)


@njit(cache=True)
def _corr2d_zero(x, kernel):
    h, w = x.shape
    kh, kw = kernel.shape
    ca = kh // 2
    cb = kw // 2
    out = np.zeros((h, w))
    for i in range(h):
        for j in range(w):
            s = 0.0
            for a in range(kh):
                ia = i + a - ca
                if ia < 0 or ia >= h:
                    continue
                for b in range(kw):
                    jb = j + b - cb
                    if jb < 0 or jb >= w:
                        continue
                    s += kernel[a, b] * x[ia, jb]
            out[i, j] = s
    return out


def corr2d_zero(x: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    return _corr2d_zero(x, kernel)
