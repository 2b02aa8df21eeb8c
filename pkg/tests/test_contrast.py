import numpy as np
import pytest

from riglht.core.contrast import (
    LINEAR_COMBINATION_CONTRAST,
    ContrastInput,
    ExponentMode,
    build_contrast,
    manova_contrast,
    pairwise_contrast,
    sym_matrix_power,
)
from riglht.core.errors import (
    InvalidDimensionError,
    InvalidInputError,
    RankDeficiencyError,
    SampleTooSmallError,
)


def test_power_of_identity():
    np.testing.assert_allclose(sym_matrix_power(np.eye(3), 0.5), np.eye(3), atol=1e-15)


def test_inverse_root_of_diagonal():
    np.testing.assert_allclose(
        sym_matrix_power(np.diag([4.0, 9.0]), -0.5), np.diag([0.5, 1 / 3]), rtol=1e-14
    )


@pytest.mark.parametrize("exponent", [0.5, -0.5])
def test_multiply_back(rng, exponent):
    x = rng.standard_normal((4, 6))
    m = x @ x.T
    root = sym_matrix_power(m, exponent)
    np.testing.assert_allclose(root, root.T, atol=0)
    back = np.linalg.inv(root @ root) if exponent < 0 else root @ root
    np.testing.assert_allclose(back, m, rtol=1e-10, atol=1e-10 * np.abs(m).max())


def test_power_rejects_bad_matrices():
    with pytest.raises(InvalidInputError):
        sym_matrix_power(np.array([[1.0, 2.0], [0.0, 1.0]]), 0.5)
    with pytest.raises(InvalidInputError):
        sym_matrix_power(np.diag([1.0, -1.0]), 0.5)
    with pytest.raises(RankDeficiencyError):
        sym_matrix_power(np.diag([1.0, 0.0]), -0.5)


def test_semidefinite_square_root_clamps():
    root = sym_matrix_power(np.diag([4.0, 0.0]), 0.5)
    np.testing.assert_allclose(root, np.diag([2.0, 0.0]), atol=1e-15)


def test_linear_combination_contrast():
    n_sizes = (20, 30, 45, 50)
    contrast = build_contrast(ContrastInput(LINEAR_COMBINATION_CONTRAST), n_sizes)
    m = 4 * 145 / 20 + 4 * 145 / 30 + 145 / 45 + 9 * 145 / 50

    assert contrast.n_total == 145
    np.testing.assert_allclose(
        np.diag(contrast.scaling), [7.25, 145 / 30, 145 / 45, 2.9], rtol=1e-14
    )
    assert m == pytest.approx(77.6556, abs=1e-4)
    np.testing.assert_allclose(contrast.g, np.sqrt(m) * LINEAR_COMBINATION_CONTRAST, rtol=1e-12)
    assert contrast.d[0, 0] == pytest.approx(4 * m, rel=1e-12)
    assert contrast.d[0, 0] == pytest.approx(310.622, abs=1e-3)


def test_two_group_contrast():
    contrast = build_contrast(ContrastInput([[1.0, -1.0]]), (10, 10))
    np.testing.assert_allclose(contrast.scaling, np.diag([2.0, 2.0]))
    np.testing.assert_allclose(contrast.g, [[2.0, -2.0]], rtol=1e-14)
    np.testing.assert_allclose(contrast.d, [[4.0, -4.0], [-4.0, 4.0]], rtol=1e-14)


@pytest.mark.parametrize("mode", list(ExponentMode))
def test_manova_d_is_symmetric_psd(mode):
    contrast = build_contrast(ContrastInput(manova_contrast(4), mode), (15, 15, 15, 15))
    np.testing.assert_array_equal(contrast.d, contrast.d.T)
    assert np.linalg.eigvalsh(contrast.d).min() > -1e-10 * np.abs(contrast.d).max()
    # every contrast row sums to zero, so d annihilates the all-ones vector
    np.testing.assert_allclose(contrast.d @ np.ones(4), 0.0, atol=1e-10)


def test_inverse_root_is_invariant_to_row_mixing(rng):
    n_sizes = (8, 11, 9, 14)
    g_tilde = manova_contrast(4)
    mixing = rng.standard_normal((3, 3)) + 3 * np.eye(3)
    base = build_contrast(ContrastInput(g_tilde, ExponentMode.INVERSE_ROOT), n_sizes)
    mixed = build_contrast(ContrastInput(mixing @ g_tilde, ExponentMode.INVERSE_ROOT), n_sizes)
    np.testing.assert_allclose(mixed.d, base.d, rtol=1e-9, atol=1e-12)


def test_contrast_validation():
    with pytest.raises(InvalidDimensionError):
        ContrastInput(np.eye(3))
    with pytest.raises(RankDeficiencyError):
        build_contrast(ContrastInput([[1.0, -1.0, 0.0], [2.0, -2.0, 0.0]]), (5, 5, 5))
    with pytest.raises(InvalidDimensionError):
        build_contrast(ContrastInput([[1.0, -1.0]]), (5, 5, 5))
    with pytest.raises(SampleTooSmallError, match="group '2' has 3 observations"):
        build_contrast(ContrastInput([[1.0, -1.0]]), (5, 3))


@pytest.mark.parametrize("mode", list(ExponentMode))
@pytest.mark.parametrize("g_tilde", [[[0.0, 0.0]], [[0.0, 0.0, 0.0], [0.0, 0.0, 0.0]]])
def test_zero_contrast_is_rank_deficient(mode, g_tilde):
    with pytest.raises(RankDeficiencyError):
        build_contrast(ContrastInput(g_tilde, mode), (5,) * len(g_tilde[0]))


def test_pairwise_contrast():
    np.testing.assert_array_equal(pairwise_contrast(4, 1, 3), [[0.0, 1.0, 0.0, -1.0]])
    with pytest.raises(InvalidInputError):
        pairwise_contrast(3, 1, 1)
