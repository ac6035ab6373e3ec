"""Reference image-quality metrics: PSNR, SSIM, RMSE, windowed statistics.

SSIM uses uniform windows (default 7) with the standard stabilizers
C1 = (0.01 * peak)^2 and C2 = (0.03 * peak)^2, averaged over every pixel
position with clamped (edge-replicated) borders.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ParameterError, ValidationError
from .tensorio import as_tensor, check_same_shape

DEFAULT_WINDOW = 7
DEFAULT_PEAK = 1.0


@dataclass(frozen=True)
class MetricReport:
    """PSNR (dB, math.inf when images are identical), SSIM in [-1, 1], RMSE >= 0."""

    psnr: float
    ssim: float
    rmse: float


def psnr(reference, candidate, peak: float = DEFAULT_PEAK) -> float:
    """Peak signal-to-noise ratio in dB; math.inf when the MSE is zero."""
    ref = as_tensor(reference, "reference")
    cand = as_tensor(candidate, "candidate")
    check_same_shape(ref, cand)
    if not (peak > 0.0 and math.isfinite(peak)):
        raise ValidationError(f"peak must be a positive finite real, got {peak}")
    mse = float(np.mean((ref - cand) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(peak * peak / mse)


def rmse(reference, candidate) -> float:
    """Root mean squared difference."""
    ref = as_tensor(reference, "reference")
    cand = as_tensor(candidate, "candidate")
    check_same_shape(ref, cand)
    return float(np.sqrt(np.mean((ref - cand) ** 2)))


def _check_window(window: int, shape: tuple[int, int]) -> None:
    if window < 1 or window % 2 == 0:
        raise ParameterError(f"window must be odd and positive, got {window}")
    if window > min(shape):
        raise ParameterError(f"window {window} exceeds smallest image dimension {min(shape)}")


def ssim_map(reference, candidate, peak: float = DEFAULT_PEAK, window: int = DEFAULT_WINDOW) -> np.ndarray:
    """Per-pixel SSIM map over clamped uniform windows."""
    ref = as_tensor(reference, "reference")
    cand = as_tensor(candidate, "candidate")
    check_same_shape(ref, cand)
    _check_window(window, ref.shape)
    if not (peak > 0.0 and math.isfinite(peak)):
        raise ValidationError(f"peak must be a positive finite real, got {peak}")
    c1 = (0.01 * peak) ** 2
    c2 = (0.03 * peak) ** 2
    return kernels.local_ssim_map(ref, cand, window, c1, c2)


def ssim(reference, candidate, peak: float = DEFAULT_PEAK, window: int = DEFAULT_WINDOW) -> float:
    """Mean structural similarity over all window positions."""
    return float(np.mean(ssim_map(reference, candidate, peak, window)))


def local_stats(x, window: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-pixel mean and population variance over the clamped window."""
    arr = as_tensor(x, "x")
    _check_window(window, arr.shape)
    return kernels.local_mean_var(arr, window)


def report(reference, candidate, peak: float = DEFAULT_PEAK, window: int = DEFAULT_WINDOW) -> MetricReport:
    """All three reference metrics in one pass."""
    return MetricReport(
        psnr=psnr(reference, candidate, peak),
        ssim=ssim(reference, candidate, peak, window),
        rmse=rmse(reference, candidate),
    )
