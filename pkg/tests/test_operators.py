import numpy as np
import pytest

from resteer.errors import CapabilityError, DimensionError, ParameterError, ValidationError
from resteer.operators import (
    ForwardOperator,
    adjoint,
    apply,
    blur_operator,
    box_kernel,
    degrade,
    dft2,
    frequency_mask_operator,
    gaussian_kernel,
    identity_operator,
    null_project,
    pixel_mask_operator,
    with_seed,
)

from conftest import operator_zoo, random_image

KINDS = ("identity-plus-noise", "pixel-mask", "frequency-mask", "blur")


def complex_as_real_inner(u, v):
    return float(np.sum(u.conj() * v).real)


@pytest.mark.parametrize("kind", KINDS)
def test_adjoint_identity_20_random_pairs(kind):
    op = operator_zoo(16)[kind]
    for trial in range(20):
        x = random_image(100 + trial, (16, 16), -1.0, 1.0)
        if op.complex_codomain:
            rng = np.random.default_rng(200 + trial)
            m = rng.normal(size=(16, 16)) + 1j * rng.normal(size=(16, 16))
        else:
            m = random_image(200 + trial, (16, 16), -1.0, 1.0)
        lhs = complex_as_real_inner(apply(op, x), m)
        rhs = float(np.sum(x * adjoint(op, m)))
        scale = max(abs(lhs), abs(rhs), 1e-30)
        assert abs(lhs - rhs) / scale < 1e-10


@pytest.mark.parametrize("kind", KINDS)
def test_apply_is_linear(kind):
    op = operator_zoo(16)[kind]
    x = random_image(1, (16, 16))
    z = random_image(2, (16, 16))
    a, b = 0.7, -1.3
    combo = apply(op, a * x + b * z)
    parts = a * apply(op, x) + b * apply(op, z)
    np.testing.assert_allclose(combo, parts, atol=1e-12)


def test_pixel_mask_all_ones_is_identity():
    op = pixel_mask_operator(np.ones((8, 8)))
    x = random_image(3, (8, 8))
    assert np.array_equal(apply(op, x), x)


def test_pixel_mask_adjoint_equals_apply():
    op = operator_zoo(16)["pixel-mask"]
    x = random_image(4, (16, 16))
    assert np.array_equal(apply(op, x), adjoint(op, x))


def test_identity_adjoint_is_identity():
    op = identity_operator((8, 8))
    x = random_image(5, (8, 8))
    assert np.array_equal(adjoint(op, x), x)


def test_frequency_dc_only_mask_on_constant():
    n = 8
    mask = np.zeros((n, n))
    mask[n // 2, n // 2] = 1.0  # DC sits at the center after the shift
    op = frequency_mask_operator(mask)
    c = 0.37
    out = apply(op, np.full((n, n), c))
    nonzero = np.argwhere(np.abs(out) > 1e-12)
    assert nonzero.tolist() == [[n // 2, n // 2]]
    # unitary normalization: the DC coefficient is c * sqrt(N)
    assert out[n // 2, n // 2] == pytest.approx(c * n, abs=1e-12)


def test_blur_matches_brute_force():
    op = blur_operator((5, 5), box_kernel(3))
    x = random_image(6, (5, 5))
    out = apply(op, x)
    oracle = np.zeros_like(x)
    for i in range(5):
        for j in range(5):
            s = 0.0
            for a in range(3):
                for b in range(3):
                    ia, jb = i - (a - 1), j - (b - 1)
                    if 0 <= ia < 5 and 0 <= jb < 5:
                        s += x[ia, jb] / 9.0
            oracle[i, j] = s
    np.testing.assert_allclose(out, oracle, atol=1e-14)


def test_null_project_examples():
    x = random_image(7, (16, 16))
    all_ones = pixel_mask_operator(np.ones((16, 16)))
    np.testing.assert_allclose(null_project(all_ones, x), 0.0, atol=1e-15)

    for kind in ("pixel-mask", "frequency-mask"):
        op = operator_zoo(16)[kind]
        null = null_project(op, x)
        # decomposition identity: exact for diagonal masks, rounded through DFTs
        if kind == "pixel-mask":
            assert np.array_equal(null + (x - null), x)
        else:
            np.testing.assert_allclose(null + (x - null), x, atol=1e-12)
        # idempotence
        np.testing.assert_allclose(null_project(op, null), null, atol=1e-12)
        # null component is invisible to the operator
        norm = np.linalg.norm(apply(op, null))
        assert norm <= 1e-10 * np.linalg.norm(x)


def test_null_project_unsupported_kinds():
    x = random_image(8, (16, 16))
    for kind in ("identity-plus-noise", "blur"):
        with pytest.raises(CapabilityError):
            null_project(operator_zoo(16)[kind], x)


def test_degrade_zero_noise_is_exact():
    op = operator_zoo(16, noise_sigma=0.0)["blur"]
    x = random_image(9, (16, 16))
    obs = degrade(op, x)
    assert np.array_equal(obs.measured, apply(op, x))
    assert np.array_equal(obs.ground_truth, x)


def test_degrade_noise_statistics():
    op = identity_operator((64, 64), noise_sigma=0.1, seed=42)
    obs = degrade(op, np.zeros((64, 64)))
    sample_std = obs.measured.std()
    assert 0.09 <= sample_std <= 0.11


def test_degrade_complex_noise_statistics():
    mask = np.ones((64, 64))
    op = frequency_mask_operator(mask, noise_sigma=0.1, seed=7)
    obs = degrade(op, np.zeros((64, 64)))
    total_std = np.sqrt(np.mean(np.abs(obs.measured) ** 2))
    assert 0.09 <= total_std <= 0.11


def test_degrade_is_bitwise_reproducible():
    op = operator_zoo(16, noise_sigma=0.05, seed=3)["frequency-mask"]
    x = random_image(10, (16, 16))
    a = degrade(op, x)
    b = degrade(op, x)
    assert np.array_equal(a.measured, b.measured)
    c = degrade(with_seed(op, 4), x)
    assert not np.array_equal(a.measured, c.measured)


def test_operator_validation():
    with pytest.raises(ParameterError):
        ForwardOperator("warp", (8, 8))
    with pytest.raises(ParameterError):
        ForwardOperator("pixel-mask", (8, 8))
    with pytest.raises(ValidationError):
        pixel_mask_operator(np.full((8, 8), 0.5))
    with pytest.raises(ParameterError):
        blur_operator((8, 8), np.full((2, 2), 0.25))
    with pytest.raises(ValidationError):
        blur_operator((8, 8), np.full((3, 3), 1.0))
    with pytest.raises(DimensionError):
        apply(identity_operator((8, 8)), np.zeros((4, 4)))


def test_unitary_dft_preserves_norm():
    x = random_image(11, (16, 16))
    assert np.linalg.norm(dft2(x)) == pytest.approx(np.linalg.norm(x), rel=1e-12)


def test_gaussian_kernel_normalized():
    k = gaussian_kernel(5, 1.0)
    assert abs(k.sum() - 1.0) < 1e-12
    assert k.shape == (5, 5)
