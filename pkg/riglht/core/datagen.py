"""Synthetic grouped samples from the factor model Y = Gamma Z + mu.

Factors are square (m = p). Innovations are i.i.d. standardized scalars from
one of three laws; covariances are scaled identities or scaled AR(1)
correlations; alternatives put a common value on the leading coordinates of
one group's mean.
"""

import math
from collections.abc import Sequence
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import signal

from riglht.core.errors import InvalidDimensionError, InvalidInputError
from riglht.core.statistic import GroupedSample
from riglht.utils.logging import get_logger

logger = get_logger(__name__)


class DistributionKind(str, Enum):
    STANDARD_NORMAL = "standard_normal"
    STANDARDIZED_T4 = "standardized_t4"
    STANDARDIZED_CHISQ1 = "standardized_chisq1"


@dataclass(frozen=True)
class DistributionModel:
    kind: DistributionKind

    @property
    def excess_kurtosis(self) -> float:
        """Delta in E z^4 = 3 + Delta. Infinite for t4, which has no fourth moment."""
        return {
            DistributionKind.STANDARD_NORMAL: 0.0,
            DistributionKind.STANDARDIZED_T4: math.inf,
            DistributionKind.STANDARDIZED_CHISQ1: 12.0,
        }[self.kind]


def draw_innovations(model: DistributionModel, rng: np.random.Generator, size) -> np.ndarray:
    """Mean-zero, unit-variance i.i.d. draws of the given shape."""
    if model.kind is DistributionKind.STANDARD_NORMAL:
        return rng.standard_normal(size)
    if model.kind is DistributionKind.STANDARDIZED_T4:
        normal = rng.standard_normal(size)
        chi2 = rng.chisquare(4.0, size)
        return normal / np.sqrt(chi2 / 4.0) / math.sqrt(2.0)
    normal = rng.standard_normal(size)
    return (normal * normal - 1.0) / math.sqrt(2.0)


def draw_innovation(model: DistributionModel, rng: np.random.Generator) -> float:
    return float(draw_innovations(model, rng, 1)[0])


class CovarianceKind(str, Enum):
    SCALED_IDENTITY = "scaled_identity"
    SCALED_AR = "scaled_ar"


@dataclass(frozen=True)
class CovarianceModel:
    """c I or c (rho^|i-j|), with an O(p) factor Gamma such that Gamma Gamma^T = Sigma."""

    kind: CovarianceKind
    scale: float
    rho: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", CovarianceKind(self.kind))
        if not (math.isfinite(self.scale) and self.scale >= 0):
            raise InvalidInputError(f"covariance scale must be finite and >= 0, got {self.scale}")
        if not -1.0 < self.rho < 1.0:
            raise InvalidInputError(f"AR correlation must lie in (-1, 1), got {self.rho}")

    @property
    def identity_scale(self) -> float | None:
        return self.scale if self.kind is CovarianceKind.SCALED_IDENTITY else None

    def dense(self, p: int) -> np.ndarray:
        if self.kind is CovarianceKind.SCALED_IDENTITY:
            return self.scale * np.eye(p)
        idx = np.arange(p)
        return self.scale * self.rho ** np.abs(idx[:, None] - idx[None, :])

    def factor(self, p: int) -> np.ndarray:
        """Dense Gamma. For AR this is the closed-form lower-triangular Cholesky factor."""
        if self.kind is CovarianceKind.SCALED_IDENTITY:
            return math.sqrt(self.scale) * np.eye(p)
        idx = np.arange(p)
        lag = idx[:, None] - idx[None, :]
        lower = np.where(lag >= 0, self.rho ** np.maximum(lag, 0), 0.0)
        lower[:, 1:] *= math.sqrt(1.0 - self.rho**2)
        return math.sqrt(self.scale) * lower

    def apply_factor(self, z: np.ndarray) -> np.ndarray:
        """Rows of ``z`` mapped to rows of (Gamma z^T)^T."""
        root = math.sqrt(self.scale)
        if self.kind is CovarianceKind.SCALED_IDENTITY:
            return root * z
        # x_0 = z_0, x_i = rho x_{i-1} + sqrt(1 - rho^2) z_i
        shocks = z.copy()
        shocks[:, 1:] *= math.sqrt(1.0 - self.rho**2)
        return root * signal.lfilter([1.0], [1.0, -self.rho], shocks, axis=1)

    def quadratic(self, u: np.ndarray) -> float:
        """u^T Sigma u = |Gamma^T u|^2."""
        u = np.asarray(u, dtype=np.float64)
        if self.kind is CovarianceKind.SCALED_IDENTITY:
            return float(self.scale * (u @ u))
        tail_sums = signal.lfilter([1.0], [1.0, -self.rho], u[::-1])[::-1]
        tail_sums[1:] *= math.sqrt(1.0 - self.rho**2)
        return float(self.scale * (tail_sums @ tail_sums))


@dataclass(frozen=True, eq=False)
class DenseCovariance:
    """User-supplied Sigma for small p."""

    matrix: np.ndarray

    def __post_init__(self):
        matrix = np.asarray(self.matrix, dtype=np.float64)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise InvalidDimensionError(f"covariance must be square, got shape {matrix.shape}")
        if not np.allclose(matrix, matrix.T):
            raise InvalidInputError("covariance must be symmetric")
        try:
            lower = np.linalg.cholesky(matrix)
        except np.linalg.LinAlgError:
            raise InvalidInputError("covariance must be positive definite") from None
        object.__setattr__(self, "matrix", matrix)
        object.__setattr__(self, "_lower", lower)

    identity_scale = None

    def dense(self, p: int) -> np.ndarray:
        if self.matrix.shape[0] != p:
            raise InvalidDimensionError(
                f"covariance has dimension {self.matrix.shape[0]}, expected {p}"
            )
        return self.matrix

    def factor(self, p: int) -> np.ndarray:
        self.dense(p)
        return self._lower

    def apply_factor(self, z: np.ndarray) -> np.ndarray:
        return z @ self._lower.T

    def quadratic(self, u: np.ndarray) -> float:
        return float(u @ self.matrix @ u)


def scaled_identity(scale: float) -> CovarianceModel:
    return CovarianceModel(CovarianceKind.SCALED_IDENTITY, scale)


def scaled_ar(rho: float, scale: float) -> CovarianceModel:
    return CovarianceModel(CovarianceKind.SCALED_AR, scale, rho)


COVARIANCE_PRESETS: dict[str, tuple[CovarianceModel, ...]] = {
    "case1": tuple(scaled_identity(3.0) for _ in range(4)),
    "case2": tuple(scaled_ar(0.4, c) for c in (1.0, 2.0, 1.5, 4.0)),
    "case3": tuple(scaled_identity(4.0) for _ in range(4)),
    "case4": tuple(scaled_ar(0.5, c) for c in (1.0, 1.5, 2.5, 3.0)),
}

DISTRIBUTION_PRESETS: dict[str, DistributionModel] = {
    "model1": DistributionModel(DistributionKind.STANDARD_NORMAL),
    "model2": DistributionModel(DistributionKind.STANDARDIZED_T4),
    "model3": DistributionModel(DistributionKind.STANDARDIZED_CHISQ1),
}

SAMPLE_SIZES = ((20, 30, 45, 50), (35, 60, 80, 90), (40, 70, 100, 120))
P_VALUES = (100, 200, 300, 400, 500)
R_VALUES = (0.03, 0.06, 0.09, 0.12)
T_VALUES = (0.1, 0.15, 0.2, 0.25)


def covariance_preset(name: str) -> tuple[CovarianceModel, ...]:
    try:
        return COVARIANCE_PRESETS[name.lower()]
    except KeyError:
        raise InvalidInputError(
            f"unknown covariance preset '{name}' (expected one of {sorted(COVARIANCE_PRESETS)})"
        ) from None


def distribution_preset(name: str) -> DistributionModel:
    try:
        return DISTRIBUTION_PRESETS[name.lower()]
    except KeyError:
        raise InvalidInputError(
            f"unknown distribution preset '{name}' "
            f"(expected one of {sorted(DISTRIBUTION_PRESETS)})"
        ) from None


@dataclass(frozen=True)
class MeanAlternative:
    r: float
    t: float
    target_group: int = 3

    def __post_init__(self):
        if self.r < 0:
            raise InvalidInputError(f"signal strength r must be >= 0, got {self.r}")
        if not 0.0 <= self.t <= 1.0:
            raise InvalidInputError(f"sparsity t must lie in [0, 1], got {self.t}")
        if self.target_group < 0:
            raise InvalidInputError("target group index must be >= 0")


def signal_count(p: int, t: float) -> int:
    """Integer part of p^(1 - t), guarded against p^x landing just below an integer."""
    return min(p, math.floor(p ** (1.0 - t) * (1.0 + 1e-12)))


def mean_alternative_vector(p: int, alt: MeanAlternative, n_sizes: Sequence[int]) -> np.ndarray:
    if p < 1:
        raise InvalidDimensionError(f"dimension p must be >= 1, got {p}")
    mu = np.zeros(p)
    if alt.r == 0.0:
        return mu
    harmonic = sum(1.0 / n for n in n_sizes)
    value = math.sqrt(2.0 * alt.r * harmonic * math.log10(p))
    mu[: signal_count(p, alt.t)] = value
    return mu


def group_means(
    p: int, n_sizes: Sequence[int], alt: MeanAlternative | None = None
) -> np.ndarray:
    """K x p mean matrix: zero everywhere except the alternative's target group."""
    k = len(n_sizes)
    means = np.zeros((k, p))
    if alt is not None:
        if alt.target_group >= k:
            raise InvalidInputError(f"target group {alt.target_group} does not exist (K={k})")
        means[alt.target_group] = mean_alternative_vector(p, alt, n_sizes)
    return means


def replicate_stream(seed: int, replicate_id: int, group: int) -> np.random.Generator:
    """Independent PCG64 stream keyed by (seed, replicate_id, group)."""
    sequence = np.random.SeedSequence(entropy=seed, spawn_key=(replicate_id, group))
    return np.random.Generator(np.random.PCG64(sequence))


def gen_sample(
    p: int,
    n_sizes: Sequence[int],
    cov_models: Sequence,
    dist: DistributionModel,
    means,
    seed: int,
    replicate_id: int,
    labels: Sequence[str] = (),
) -> GroupedSample:
    k = len(n_sizes)
    means = np.atleast_2d(np.asarray(means, dtype=np.float64))
    if len(cov_models) != k or means.shape != (k, p):
        raise InvalidDimensionError(
            f"expected {k} covariances and a ({k}, {p}) mean matrix, got "
            f"{len(cov_models)} and {means.shape}"
        )

    groups = []
    for alpha, (n, cov, mu) in enumerate(zip(n_sizes, cov_models, means, strict=True)):
        rng = replicate_stream(seed, replicate_id, alpha)
        z = draw_innovations(dist, rng, (n, p))
        groups.append(cov.apply_factor(z) + mu)

    logger.debug("generated replicate %d (seed %d): n=%s, p=%d", replicate_id, seed, n_sizes, p)
    return GroupedSample(groups=tuple(groups), labels=tuple(labels))
