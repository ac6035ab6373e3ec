from pathlib import Path

import numpy as np
import pytest

from resteer.operators import (
    blur_operator,
    degrade,
    frequency_mask_operator,
    gaussian_kernel,
    identity_operator,
    pixel_mask_operator,
)
from resteer.phantoms import make_phantom, make_sampling_mask

DATA_DIR = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def shepp64():
    return make_phantom("shepp-logan", 64)


@pytest.fixture(scope="session")
def golden_shepp_path():
    return DATA_DIR / "shepp_logan_64.ct2"


def random_image(seed: int, shape=(16, 16), lo=0.0, hi=1.0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return rng.uniform(lo, hi, shape)


def operator_zoo(size: int = 16, noise_sigma: float = 0.0, seed: int = 0):
    """One operator of each kind on a size x size grid."""
    pix = make_sampling_mask("random-uniform", 0.5, size, seed=11)
    freq = make_sampling_mask("center-weighted-lines", 0.4, size, seed=12)
    return {
        "identity-plus-noise": identity_operator((size, size), noise_sigma, seed),
        "pixel-mask": pixel_mask_operator(pix, noise_sigma, seed),
        "frequency-mask": frequency_mask_operator(freq, noise_sigma, seed),
        "blur": blur_operator((size, size), gaussian_kernel(5, 1.2), noise_sigma, seed),
    }


def noisy_observation(size=32, noise_sigma=0.1, seed=5):
    img = make_phantom("shepp-logan", size)
    return degrade(identity_operator((size, size), noise_sigma, seed), img)
