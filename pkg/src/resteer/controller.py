"""Risk-aware fusion controller.

Per step the controller estimates a reliability map r (local structural
agreement between the two branch latents), an uncertainty map u (cross-step
change of the fused state, or ensemble spread), and combines them with the
user's mode parameter lambda through an elementwise sigmoid

    alpha = sigmoid(beta1 * r - beta2 * u + beta3 * lambda)

The fused latent is the per-pixel convex combination
alpha * z_f + (1 - alpha) * z_p.  beta3 defaults to a negative value so that
raising lambda shifts weight toward the prior branch (larger lambda = more
aggressive refinement); callers setting beta3 > 0 get a warning from the
engine because that inverts the mode semantics.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import kernels
from .branches import BranchState
from .errors import ParameterError, StateError, ValidationError
from .tensorio import as_tensor, check_same_shape

ALPHA_MODES = ("scalar", "spatial")
UNCERTAINTY_MODES = ("cross-step", "ensemble")

# same stabilizers as the reference SSIM at peak 1
_C1 = 0.01**2
_C2 = 0.03**2

UNCERTAINTY_SCALE_FLOOR = 1e-6


@dataclass(frozen=True)
class ControllerConfig:
    lam: float = 0.5
    beta1: float = 4.0
    beta2: float = 4.0
    beta3: float = -4.0
    alpha_mode: str = "spatial"
    window: int = 7
    uncertainty_mode: str = "cross-step"
    ensemble_size: int = 8
    u_init: float = 1.0

    def __post_init__(self):
        if not (0.0 <= self.lam <= 1.0):
            raise ValidationError(f"controller.lambda must be in [0, 1], got {self.lam}")
        if self.beta1 < 0 or self.beta2 < 0:
            raise ValidationError("controller.beta1 and beta2 must be >= 0")
        if self.window < 1 or self.window % 2 == 0:
            raise ParameterError(f"controller.window must be odd and positive, got {self.window}")
        if self.alpha_mode not in ALPHA_MODES:
            raise ParameterError(f"unknown alpha_mode {self.alpha_mode!r}")
        if self.uncertainty_mode not in UNCERTAINTY_MODES:
            raise ParameterError(f"unknown uncertainty_mode {self.uncertainty_mode!r}")
        if self.ensemble_size < 1:
            raise ParameterError("controller.ensemble_size must be >= 1")
        if not (0.0 <= self.u_init <= 1.0):
            raise ValidationError(f"controller.u_init must be in [0, 1], got {self.u_init}")


@dataclass(frozen=True, eq=False)
class RiskMaps:
    """Reliability, uncertainty and fusion maps for one step."""

    reliability: np.ndarray
    uncertainty: np.ndarray
    alpha: np.ndarray

    def __post_init__(self):
        check_same_shape(self.reliability, self.uncertainty)
        check_same_shape(self.reliability, self.alpha)
        for name, arr in (("reliability", self.reliability),
                          ("uncertainty", self.uncertainty),
                          ("alpha", self.alpha)):
            if arr.min() < 0.0 or arr.max() > 1.0:
                raise ValidationError(f"{name} map has entries outside [0, 1]")


def estimate_reliability(z_f, z_p, window: int = 7) -> np.ndarray:
    """Local SSIM-style agreement between the branch latents, mapped to [0, 1]."""
    a = as_tensor(z_f, "z_f")
    b = as_tensor(z_p, "z_p")
    check_same_shape(a, b, "latents")
    if window < 1 or window % 2 == 0:
        raise ParameterError(f"window must be odd and positive, got {window}")
    if window > min(a.shape):
        raise ParameterError(f"window {window} exceeds smallest latent dimension {min(a.shape)}")
    agreement = kernels.local_ssim_map(a, b, window, _C1, _C2)
    return np.clip((agreement + 1.0) * 0.5, 0.0, 1.0)


def estimate_uncertainty(
    state: BranchState,
    prev_fused: Optional[np.ndarray] = None,
    ensemble: Optional[Sequence[np.ndarray]] = None,
    cfg: ControllerConfig = ControllerConfig(),
) -> np.ndarray:
    """Per-pixel instability score in [0, 1].

    cross-step mode scales |z*_t - z*_(t-1)| by the dynamic range of the
    current fused state (floored at 1e-6); before any previous fused state
    exists (t = 0) the map is u_init everywhere.  ensemble mode uses the
    per-pixel sample standard deviation (K - 1 denominator) across the
    ensemble, scaled the same way.
    """
    z = state.z_star
    scale = max(float(z.max() - z.min()), UNCERTAINTY_SCALE_FLOOR)
    if cfg.uncertainty_mode == "cross-step":
        if state.t == 0:
            return np.full(z.shape, float(cfg.u_init))
        if prev_fused is None:
            raise StateError("cross-step uncertainty requires prev_fused when t > 0")
        prev = as_tensor(prev_fused, "prev_fused")
        check_same_shape(z, prev, "fused states")
        return np.clip(np.abs(z - prev) / scale, 0.0, 1.0)
    if ensemble is None or len(ensemble) < 2:
        raise StateError("ensemble uncertainty requires an ensemble of size >= 2")
    stack = np.stack([as_tensor(m, "ensemble member") for m in ensemble])
    std = np.std(stack, axis=0, ddof=1)
    return np.clip(std / scale, 0.0, 1.0)


def _sigmoid(v: np.ndarray) -> np.ndarray:
    out = np.empty_like(v)
    pos = v >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-v[pos]))
    ev = np.exp(v[~pos])
    out[~pos] = ev / (1.0 + ev)
    return out


def compute_alpha(r, u, cfg: ControllerConfig) -> np.ndarray:
    """Elementwise sigmoid(beta1 r - beta2 u + beta3 lambda).

    In scalar mode r and u are replaced by their spatial means first, so the
    result is a constant map.
    """
    rr = as_tensor(r, "r")
    uu = as_tensor(u, "u")
    check_same_shape(rr, uu, "risk maps")
    if cfg.alpha_mode == "scalar":
        rr = np.full(rr.shape, float(rr.mean()))
        uu = np.full(uu.shape, float(uu.mean()))
    return _sigmoid(cfg.beta1 * rr - cfg.beta2 * uu + cfg.beta3 * cfg.lam)


def fuse(z_f, z_p, alpha) -> np.ndarray:
    """Per-pixel convex combination alpha * z_f + (1 - alpha) * z_p."""
    a = as_tensor(z_f, "z_f")
    b = as_tensor(z_p, "z_p")
    w = as_tensor(alpha, "alpha")
    check_same_shape(a, b, "latents")
    check_same_shape(a, w, "latent and alpha")
    if w.min() < 0.0 or w.max() > 1.0:
        raise ValidationError("alpha entries must be in [0, 1]")
    fused = w * a + (1.0 - w) * b
    lo = np.minimum(a, b)
    hi = np.maximum(a, b)
    return np.minimum(np.maximum(fused, lo), hi)
