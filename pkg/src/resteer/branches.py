"""The two latent-update operators: data-consistency descent and prior refinement.

Latents live directly in image space.  The fidelity branch runs gradient
steps on the data term 0.5 * ||A z - y||^2; with unitary-normalized operators
the spectral norm of A^T A is at most 1, so step sizes eta <= 1 never
increase the data residual.  The prior branch applies a training-free
smoothing prior (total-variation proximal step or patch-mean non-local
filtering), optionally followed by a seeded Gaussian perturbation used by
the ensemble uncertainty mode.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from . import kernels
from .errors import ParameterError, ValidationError
from .operators import Observation, adjoint, apply
from .tensorio import as_tensor

PRIOR_KINDS = ("tv-chambolle", "nlm-lite")

NLM_PATCH = 5
NLM_SEARCH = 11

# correlation length (pixels) of the stochastic perturbation field
PERTURBATION_CORR_SIGMA = 4.0


@dataclass(frozen=True)
class FidelityConfig:
    """Step size and inner iteration count of the data-consistency descent."""

    eta: float = 0.5
    inner_iters: int = 1

    def __post_init__(self):
        if not (0.0 < self.eta <= 1.0):
            raise ValidationError(f"fidelity.eta must be in (0, 1], got {self.eta}")
        if self.inner_iters < 1:
            raise ParameterError(f"fidelity.inner_iters must be >= 1, got {self.inner_iters}")


@dataclass(frozen=True)
class PriorConfig:
    """Prior refinement operator configuration."""

    kind: str = "tv-chambolle"
    strength: float = 0.10
    inner_iters: int = 30
    noise_inject: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in PRIOR_KINDS:
            raise ParameterError(f"unknown prior kind {self.kind!r}")
        if self.strength < 0:
            raise ValidationError(f"prior.strength must be >= 0, got {self.strength}")
        if self.noise_inject < 0:
            raise ValidationError(f"prior.noise_inject must be >= 0, got {self.noise_inject}")
        if self.inner_iters < 1:
            raise ParameterError(f"prior.inner_iters must be >= 1, got {self.inner_iters}")


@dataclass(frozen=True, eq=False)
class BranchState:
    """Fidelity latent, prior latent and the fused state after step t."""

    z_f: np.ndarray
    z_p: np.ndarray
    z_star: np.ndarray
    t: int = 0

    def __post_init__(self):
        if not (self.z_f.shape == self.z_p.shape == self.z_star.shape):
            raise ValidationError("branch latents must share one shape")
        if self.t < 0:
            raise ValidationError("step index must be >= 0")


def fidelity_step(z, obs: Observation, cfg: FidelityConfig) -> np.ndarray:
    """inner_iters gradient steps z <- z - eta * A^T (A z - y)."""
    out = as_tensor(z, "z")
    op = obs.operator
    for _ in range(cfg.inner_iters):
        out = out - cfg.eta * adjoint(op, apply(op, out) - obs.measured)
    return out


def perturbation_field(shape: tuple[int, int], std: float, seed: int, step: int) -> np.ndarray:
    """Spatially correlated Gaussian field with per-pixel std ``std``.

    White noise sharpens into salt-and-pepper texture that a smoothing prior
    immediately removes; hallucinated content is structured, so the
    perturbation is white noise blurred to a few-pixel correlation length
    and rescaled.  Deterministic given (seed, step).
    """
    rng = np.random.default_rng([seed, step])
    white = rng.normal(0.0, 1.0, shape)
    smooth = ndimage.gaussian_filter(white, sigma=PERTURBATION_CORR_SIGMA, mode="nearest")
    spread = float(smooth.std())
    if spread == 0.0:
        return np.zeros(shape)
    return smooth * (std / spread)


def prior_step(z, cfg: PriorConfig, step: int = 0) -> np.ndarray:
    """One prior refinement pass; deterministic given (z, cfg, step)."""
    arr = as_tensor(z, "z")
    if cfg.kind == "tv-chambolle":
        out = kernels.tv_chambolle(arr, cfg.strength, cfg.inner_iters)
    else:
        out = kernels.nlm_filter(arr, cfg.strength, NLM_PATCH, NLM_SEARCH)
    if cfg.noise_inject > 0.0:
        out = out + perturbation_field(arr.shape, cfg.noise_inject, cfg.seed, step)
    return out


def total_variation(x) -> float:
    """Discrete isotropic total variation (forward differences)."""
    return kernels.total_variation(as_tensor(x, "x"))


def init_latents(obs: Observation, prior_cfg: PriorConfig | None = None) -> BranchState:
    """Backproject the measurement and derive the initial branch latents.

    z_f is the adjoint backprojection of the measured data (masked image with
    unobserved pixels zero, or the zero-filled reconstruction for frequency
    masks); z_p is z_f after one noiseless prior pass; the fused state starts
    at z_f.
    """
    cfg = prior_cfg if prior_cfg is not None else PriorConfig()
    if cfg.noise_inject != 0.0:
        cfg = PriorConfig(kind=cfg.kind, strength=cfg.strength,
                          inner_iters=cfg.inner_iters, noise_inject=0.0, seed=cfg.seed)
    z_f = adjoint(obs.operator, obs.measured)
    z_p = prior_step(z_f, cfg, step=0)
    return BranchState(z_f=z_f, z_p=z_p, z_star=z_f.copy(), t=0)
