"""Hallucination-risk and structure-preservation proxies.

Hallucination risk is the normalized error energy inside the operator's
measurement null space: content of the restored image that the acquisition
could not have supported.  Structure score is SSIM computed on gradient
magnitude maps, emphasizing edge agreement over intensity agreement.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .metrics import ssim
from .operators import ForwardOperator, null_project
from .tensorio import as_tensor, check_same_shape


@dataclass(frozen=True)
class RiskReport:
    hallucination_risk: float
    structure_score: float


def gradient_magnitude(x) -> np.ndarray:
    """Central-difference gradient magnitude with replicated borders."""
    arr = as_tensor(x, "x")
    h, w = arr.shape
    up = arr[np.clip(np.arange(h) - 1, 0, h - 1), :]
    down = arr[np.clip(np.arange(h) + 1, 0, h - 1), :]
    left = arr[:, np.clip(np.arange(w) - 1, 0, w - 1)]
    right = arr[:, np.clip(np.arange(w) + 1, 0, w - 1)]
    gy = (down - up) * 0.5
    gx = (right - left) * 0.5
    return np.sqrt(gx * gx + gy * gy)


def hallucination_risk(x_hat, x_gt, op: ForwardOperator) -> float:
    """Normalized null-space error energy, clamped to [0, 1].

    Only defined for operators with an exact null-space projector
    (pixel-mask / frequency-mask); other kinds raise CapabilityError.
    """
    a = as_tensor(x_hat, "x_hat")
    b = as_tensor(x_gt, "x_gt")
    check_same_shape(a, b)
    unsupported = null_project(op, a - b)
    gt_norm = float(np.linalg.norm(b))
    err_norm = float(np.linalg.norm(unsupported))
    if gt_norm == 0.0:
        return 0.0 if err_norm == 0.0 else 1.0
    return min(1.0, err_norm / gt_norm)


def structure_score(x_hat, x_gt, window: int = 7) -> float:
    """SSIM between gradient-magnitude maps (peak 1)."""
    a = as_tensor(x_hat, "x_hat")
    b = as_tensor(x_gt, "x_gt")
    check_same_shape(a, b)
    return ssim(gradient_magnitude(b), gradient_magnitude(a), peak=1.0, window=window)


def report(x_hat, x_gt, op: ForwardOperator) -> RiskReport:
    return RiskReport(
        hallucination_risk=hallucination_risk(x_hat, x_gt, op),
        structure_score=structure_score(x_hat, x_gt),
    )
