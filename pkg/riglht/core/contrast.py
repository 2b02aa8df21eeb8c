"""Contrast transformation for the general linear hypothesis G~ M = 0.

A user contrast G~ (q x K, rank q < K) is rescaled by D = diag(n / n_alpha)
into G = (G~ D G~^T)^e G~, and the statistic is driven by the K x K
coefficient matrix d = G^T G.
"""

from collections.abc import Sequence
from dataclasses import dataclass
from enum import Enum

import numpy as np

from riglht.core.errors import (
    InvalidDimensionError,
    InvalidInputError,
    RankDeficiencyError,
    SampleTooSmallError,
)

MIN_GROUP_SIZE = 4

_SYMMETRY_TOL = 1e-10
_EIGEN_CLAMP_TOL = 1e-12
_RANK_TOL = 1e-10


class ExponentMode(str, Enum):
    """Exponent applied to G~ D G~^T when forming G.

    ``SQUARE_ROOT`` uses +1/2. ``INVERSE_ROOT`` uses -1/2, which makes the
    statistic invariant under G~ -> P G~ for any nonsingular P.
    """

    SQUARE_ROOT = "square_root"
    INVERSE_ROOT = "inverse_root"

    @property
    def exponent(self) -> float:
        return 0.5 if self is ExponentMode.SQUARE_ROOT else -0.5


@dataclass(frozen=True, eq=False)
class ContrastInput:
    g_tilde: np.ndarray
    exponent_mode: ExponentMode = ExponentMode.SQUARE_ROOT

    def __post_init__(self):
        g = np.atleast_2d(np.array(self.g_tilde, dtype=np.float64))
        if g.ndim != 2:
            raise InvalidDimensionError("contrast must be a q x K matrix")
        q, k = g.shape
        if not 1 <= q < k:
            raise InvalidDimensionError(f"contrast must satisfy 1 <= q < K, got q={q}, K={k}")
        if not np.all(np.isfinite(g)):
            raise InvalidInputError("contrast coefficients must be finite")
        g.setflags(write=False)
        object.__setattr__(self, "g_tilde", g)
        object.__setattr__(self, "exponent_mode", ExponentMode(self.exponent_mode))

    @property
    def q(self) -> int:
        return self.g_tilde.shape[0]

    @property
    def k(self) -> int:
        return self.g_tilde.shape[1]


@dataclass(frozen=True, eq=False)
class Contrast:
    g: np.ndarray
    d: np.ndarray
    scaling: np.ndarray
    n_total: int
    n_sizes: tuple[int, ...]

    @property
    def k(self) -> int:
        return self.d.shape[0]


def sym_matrix_power(m: np.ndarray, exponent: float) -> np.ndarray:
    """V diag(lambda^exponent) V^T for a symmetric PSD ``m``, exponent in {+1/2, -1/2}."""
    m = np.atleast_2d(np.asarray(m, dtype=np.float64))
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise InvalidInputError(f"matrix must be square, got shape {m.shape}")
    if exponent not in (0.5, -0.5):
        raise InvalidInputError(f"exponent must be +1/2 or -1/2, got {exponent}")

    scale = np.linalg.norm(m)
    if np.linalg.norm(m - m.T) > _SYMMETRY_TOL * max(scale, np.finfo(float).tiny):
        raise InvalidInputError("matrix is not symmetric")

    eigvals, eigvecs = np.linalg.eigh((m + m.T) / 2.0)
    if eigvals.min() < -_EIGEN_CLAMP_TOL * scale:
        raise InvalidInputError(
            f"matrix is not positive semidefinite (min eigenvalue {eigvals.min()})"
        )

    cutoff = _EIGEN_CLAMP_TOL * max(eigvals.max(), 0.0)
    if exponent < 0:
        if eigvals.min() <= cutoff:
            raise RankDeficiencyError("matrix is singular; inverse square root is undefined")
        powered = eigvals**exponent
    else:
        powered = np.sqrt(np.where(eigvals <= cutoff, 0.0, eigvals))

    out = (eigvecs * powered) @ eigvecs.T
    return (out + out.T) / 2.0


def build_contrast(contrast_input: ContrastInput, n_sizes: Sequence[int]) -> Contrast:
    n_sizes = tuple(int(n) for n in n_sizes)
    if len(n_sizes) != contrast_input.k:
        raise InvalidDimensionError(
            f"contrast has {contrast_input.k} columns but {len(n_sizes)} group sizes were given"
        )
    for index, n in enumerate(n_sizes):
        if n < MIN_GROUP_SIZE:
            raise SampleTooSmallError(index + 1, n, MIN_GROUP_SIZE)

    n_total = sum(n_sizes)
    scaling = np.diag([n_total / n for n in n_sizes])
    g_tilde = contrast_input.g_tilde

    m = g_tilde @ scaling @ g_tilde.T
    m = (m + m.T) / 2.0
    eigvals = np.linalg.eigvalsh(m)
    if eigvals.max() <= 0.0 or eigvals.min() < _RANK_TOL * eigvals.max():
        raise RankDeficiencyError(
            f"contrast has rank < {contrast_input.q}: G~ D G~^T is numerically singular"
        )

    g = sym_matrix_power(m, contrast_input.exponent_mode.exponent) @ g_tilde
    d = g.T @ g
    d = (d + d.T) / 2.0

    for array in (g, d, scaling):
        array.setflags(write=False)
    return Contrast(g=g, d=d, scaling=scaling, n_total=n_total, n_sizes=n_sizes)


def manova_contrast(k: int) -> np.ndarray:
    """(I_{K-1}, -1_{K-1}): equality of all K mean vectors."""
    if k < 2:
        raise InvalidDimensionError(f"MANOVA needs at least two groups, got {k}")
    return np.hstack([np.eye(k - 1), -np.ones((k - 1, 1))])


def pairwise_contrast(k: int, first: int, second: int) -> np.ndarray:
    """Row e_first - e_second (0-based group indexes)."""
    if not (0 <= first < k and 0 <= second < k) or first == second:
        raise InvalidInputError(f"pairwise contrast needs two distinct groups in [0, {k})")
    row = np.zeros((1, k))
    row[0, first] = 1.0
    row[0, second] = -1.0
    return row


# 2 mu_1 - 2 mu_2 - mu_3 + 3 mu_4 = 0
LINEAR_COMBINATION_CONTRAST = np.array([[2.0, -2.0, -1.0, 3.0]])
# 9 mu_1 - 8 mu_2 + mu_3 - mu_4 = 0
DATA_ANALYSIS_CONTRAST = np.array([[9.0, -8.0, 1.0, -1.0]])

NAMED_CONTRASTS = {
    "linear_combination": LINEAR_COMBINATION_CONTRAST,
    "data_analysis": DATA_ANALYSIS_CONTRAST,
}
