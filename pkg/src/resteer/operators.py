"""Linear degradation operators with exact adjoints and null-space projectors.

Four kinds are supported:

* ``identity-plus-noise``  -- identity map; noise enters only in degrade().
* ``pixel-mask``           -- elementwise binary mask (inpainting-style).
* ``frequency-mask``       -- centered unitary 2-D DFT followed by a binary
                              mask on the shifted spectrum (DC at the array
                              center); measurements are complex.
* ``blur``                 -- zero-padded convolution with a normalized
                              odd-sized kernel.

The DFT is unitary (1/sqrt(N) per transform) so every adjoint equals the
corresponding inverse restricted to the measured subspace, and the spectral
norm of A^T A is at most 1 for all kinds with averaging kernels.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from . import kernels
from .errors import CapabilityError, DimensionError, ParameterError, ValidationError
from .tensorio import as_complex_tensor, as_tensor

KINDS = ("identity-plus-noise", "pixel-mask", "frequency-mask", "blur")
MASK_KINDS = ("pixel-mask", "frequency-mask")


@dataclass(frozen=True, eq=False)
class ForwardOperator:
    """Immutable description of a linear degradation A plus its noise model."""

    kind: str
    shape: tuple[int, int]
    mask: Optional[np.ndarray] = None
    kernel: Optional[np.ndarray] = None
    noise_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ParameterError(f"unknown operator kind {self.kind!r}")
        h, w = self.shape
        if h < 1 or w < 1:
            raise DimensionError(f"operator shape must be positive, got {self.shape}")
        if self.noise_sigma < 0:
            raise ValidationError("noise_sigma must be >= 0")
        if self.kind in MASK_KINDS:
            if self.mask is None:
                raise ParameterError(f"{self.kind} operator requires a mask")
            mask = as_tensor(self.mask, "mask")
            if mask.shape != self.shape:
                raise DimensionError(f"mask shape {mask.shape} != operator shape {self.shape}")
            if not np.all((mask == 0.0) | (mask == 1.0)):
                raise ValidationError("mask entries must be exactly 0 or 1")
            if self.kind == "frequency-mask":
                mirrored = np.roll(mask[::-1, ::-1], (1, 1), axis=(0, 1))
                if not np.array_equal(mask, mirrored):
                    raise ValidationError(
                        "frequency mask must be conjugate-symmetric: "
                        "mask[i, j] == mask[(n - i) % n, (m - j) % m] in shifted coordinates"
                    )
            object.__setattr__(self, "mask", mask)
        if self.kind == "blur":
            if self.kernel is None:
                raise ParameterError("blur operator requires a kernel")
            kernel = as_tensor(self.kernel, "kernel")
            kh, kw = kernel.shape
            if kh % 2 == 0 or kw % 2 == 0:
                raise ParameterError("blur kernel must have odd dimensions")
            if abs(float(kernel.sum()) - 1.0) > 1e-12:
                raise ValidationError("blur kernel must sum to 1 (within 1e-12)")
            object.__setattr__(self, "kernel", kernel)

    @property
    def complex_codomain(self) -> bool:
        return self.kind == "frequency-mask"


@dataclass(frozen=True, eq=False)
class Observation:
    """Measured data plus the operator that produced it."""

    measured: np.ndarray
    operator: ForwardOperator
    ground_truth: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.measured.shape != self.operator.shape:
            raise DimensionError(
                f"measured shape {self.measured.shape} != operator shape {self.operator.shape}"
            )


def dft2(x: np.ndarray) -> np.ndarray:
    """Centered unitary 2-D DFT (DC at the array center)."""
    return np.fft.fftshift(np.fft.fft2(x, norm="ortho"))


def idft2(spectrum: np.ndarray) -> np.ndarray:
    """Inverse of dft2; returns the complex image."""
    return np.fft.ifft2(np.fft.ifftshift(spectrum), norm="ortho")


def _check_domain(op: ForwardOperator, x: np.ndarray) -> np.ndarray:
    arr = as_tensor(x, "x")
    if arr.shape != op.shape:
        raise DimensionError(f"input shape {arr.shape} != operator shape {op.shape}")
    return arr


def apply(op: ForwardOperator, x) -> np.ndarray:
    """Deterministic linear action of the operator (never adds noise)."""
    arr = _check_domain(op, x)
    if op.kind == "identity-plus-noise":
        return arr.copy()
    if op.kind == "pixel-mask":
        return op.mask * arr
    if op.kind == "frequency-mask":
        return op.mask * dft2(arr)
    return kernels.conv2d_zero(arr, op.kernel)


def adjoint(op: ForwardOperator, m) -> np.ndarray:
    """Exact adjoint of apply under the real / complex-as-real inner product."""
    if op.kind == "frequency-mask":
        spec = as_complex_tensor(m, "measured")
        if spec.shape != op.shape:
            raise DimensionError(f"measured shape {spec.shape} != operator shape {op.shape}")
        return idft2(op.mask * spec).real.copy()
    arr = _check_domain(op, m)
    if op.kind == "identity-plus-noise":
        return arr.copy()
    if op.kind == "pixel-mask":
        return op.mask * arr
    return kernels.corr2d_zero(arr, op.kernel)


def null_project(op: ForwardOperator, x) -> np.ndarray:
    """Component of x invisible to the operator (mask kinds only)."""
    arr = _check_domain(op, x)
    if op.kind == "pixel-mask":
        return (1.0 - op.mask) * arr
    if op.kind == "frequency-mask":
        return idft2((1.0 - op.mask) * dft2(arr)).real.copy()
    raise CapabilityError(f"{op.kind} operator has no exact null-space projector")


def residual_norm(op: ForwardOperator, x, measured) -> float:
    """L2 norm of apply(op, x) - measured (complex aware)."""
    diff = apply(op, x) - measured
    return float(np.linalg.norm(diff.ravel()))


def degrade(op: ForwardOperator, x) -> Observation:
    """Apply the operator and add seeded Gaussian observation noise.

    Real codomains receive N(0, sigma^2) noise; the complex codomain receives
    circular Gaussian noise with total std sigma (sigma/sqrt(2) per part).
    """
    arr = _check_domain(op, x)
    clean = apply(op, arr)
    if op.noise_sigma > 0.0:
        rng = np.random.default_rng(op.seed)
        if op.complex_codomain:
            s = op.noise_sigma / np.sqrt(2.0)
            noise = rng.normal(0.0, s, op.shape) + 1j * rng.normal(0.0, s, op.shape)
        else:
            noise = rng.normal(0.0, op.noise_sigma, op.shape)
        measured = clean + noise
    else:
        measured = clean
    return Observation(measured=measured, operator=op, ground_truth=arr.copy())


# ---------------------------------------------------------------------------
# constructors

def identity_operator(shape: tuple[int, int], noise_sigma: float = 0.0, seed: int = 0) -> ForwardOperator:
    return ForwardOperator("identity-plus-noise", tuple(shape), noise_sigma=noise_sigma, seed=seed)


def pixel_mask_operator(mask, noise_sigma: float = 0.0, seed: int = 0) -> ForwardOperator:
    mask = as_tensor(mask, "mask")
    return ForwardOperator("pixel-mask", mask.shape, mask=mask, noise_sigma=noise_sigma, seed=seed)


def frequency_mask_operator(mask, noise_sigma: float = 0.0, seed: int = 0) -> ForwardOperator:
    mask = as_tensor(mask, "mask")
    return ForwardOperator("frequency-mask", mask.shape, mask=mask, noise_sigma=noise_sigma, seed=seed)


def blur_operator(shape: tuple[int, int], kernel, noise_sigma: float = 0.0, seed: int = 0) -> ForwardOperator:
    return ForwardOperator("blur", tuple(shape), kernel=as_tensor(kernel, "kernel"),
                           noise_sigma=noise_sigma, seed=seed)


def box_kernel(size: int) -> np.ndarray:
    """size x size averaging kernel (odd size)."""
    if size < 1 or size % 2 == 0:
        raise ParameterError(f"kernel size must be odd and positive, got {size}")
    return np.full((size, size), 1.0 / (size * size))


def gaussian_kernel(size: int, sigma: float) -> np.ndarray:
    """Normalized odd-sized Gaussian kernel."""
    if size < 1 or size % 2 == 0:
        raise ParameterError(f"kernel size must be odd and positive, got {size}")
    if sigma <= 0:
        raise ParameterError("sigma must be positive")
    half = size // 2
    ax = np.arange(-half, half + 1, dtype=np.float64)
    g = np.exp(-(ax**2) / (2.0 * sigma * sigma))
    k = np.outer(g, g)
    return k / k.sum()


def with_seed(op: ForwardOperator, seed: int) -> ForwardOperator:
    """Same operator with a different observation-noise seed."""
    return replace(op, seed=seed)
