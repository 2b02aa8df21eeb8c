"""The random-integration test statistic and its unbiased variance estimator.

Every trace functional reduces to pairwise weighted inner products of
centred rows (Gram matrices), so the cost is O(n^2 p) per group pair and
nothing p x p is ever formed.
"""

import math
from collections.abc import Sequence
from dataclasses import dataclass
from typing import Protocol, runtime_checkable

import numpy as np
from scipy import special

from riglht.core.contrast import MIN_GROUP_SIZE, Contrast
from riglht.core.errors import (
    InvalidDimensionError,
    InvalidInputError,
    SampleTooSmallError,
)
from riglht.core.weights import (
    WeightSpec,
    w_gram,
    w_quadratic,
    w_row_norms_sq,
)


@runtime_checkable
class CovarianceLike(Protocol):
    """Structured covariance representation (see ``riglht.core.datagen``)."""

    identity_scale: float | None

    def dense(self, p: int) -> np.ndarray: ...

    def quadratic(self, u: np.ndarray) -> float: ...


@dataclass(frozen=True, eq=False)
class GroupedSample:
    groups: tuple[np.ndarray, ...]
    labels: tuple[str, ...] = ()

    def __post_init__(self):
        groups = tuple(np.atleast_2d(np.asarray(g, dtype=np.float64)) for g in self.groups)
        if not groups:
            raise InvalidDimensionError("a sample needs at least one group")
        labels = tuple(str(label) for label in self.labels) or tuple(
            str(i + 1) for i in range(len(groups))
        )
        if len(labels) != len(groups):
            raise InvalidDimensionError(
                f"{len(labels)} labels given for {len(groups)} groups"
            )

        p = groups[0].shape[1]
        for label, group in zip(labels, groups, strict=True):
            if group.ndim != 2 or group.shape[1] != p or p < 1:
                raise InvalidDimensionError(
                    f"group '{label}' has shape {group.shape}; expected (n, {p})"
                )
            if group.shape[0] < MIN_GROUP_SIZE:
                raise SampleTooSmallError(label, group.shape[0], MIN_GROUP_SIZE)
            group.setflags(write=False)

        object.__setattr__(self, "groups", groups)
        object.__setattr__(self, "labels", labels)

    @property
    def k(self) -> int:
        return len(self.groups)

    @property
    def p(self) -> int:
        return self.groups[0].shape[1]

    @property
    def n_sizes(self) -> tuple[int, ...]:
        return tuple(g.shape[0] for g in self.groups)


@dataclass(frozen=True, eq=False)
class GroupSummary:
    mean: np.ndarray
    centered: np.ndarray
    label: str = ""

    @property
    def n(self) -> int:
        return self.centered.shape[0]


@dataclass(frozen=True, eq=False)
class TestResult:
    t_n: float
    sigma_hat_sq: float
    z: float | None
    p_value: float | None
    trace_w_sigma: tuple[float, ...]
    trace_w_sigma_sq: tuple[float, ...]
    trace_cross: np.ndarray
    labels: tuple[str, ...] = ()
    n_sizes: tuple[int, ...] = ()
    degenerate_variance: bool = False

    __test__ = False  # not a pytest class

    def to_dict(self) -> dict:
        return {
            "statistic": self.t_n,
            "sigma_hat_sq": self.sigma_hat_sq,
            "z": self.z,
            "p_value": self.p_value,
            "groups": [
                {
                    "label": label,
                    "n": n,
                    "trace_w_sigma": tr,
                    "trace_w_sigma_sq": tr_sq,
                }
                for label, n, tr, tr_sq in zip(
                    self.labels, self.n_sizes, self.trace_w_sigma, self.trace_w_sigma_sq,
                    strict=True,
                )
            ],
            "trace_cross": self.trace_cross.tolist(),
            "flags": {"degenerate_variance": self.degenerate_variance},
        }


@dataclass(frozen=True)
class StatisticDecomposition:
    """T_n = t_n0 + 2 s_n + signal."""

    t_n0: float
    s_n: float
    signal: float
    t_n: float


def summarize(sample: GroupedSample) -> list[GroupSummary]:
    summaries = []
    for label, group in zip(sample.labels, sample.groups, strict=True):
        mean = group.mean(axis=0)
        summaries.append(GroupSummary(mean=mean, centered=group - mean, label=label))
    return summaries


def _check_consistent(
    k: int, p: int, n_sizes: Sequence[int], contrast: Contrast, w: WeightSpec
):
    if contrast.k != k:
        raise InvalidDimensionError(f"contrast covers {contrast.k} groups, sample has {k}")
    if tuple(n_sizes) != tuple(contrast.n_sizes):
        raise InvalidDimensionError(
            f"contrast was built for group sizes {contrast.n_sizes}, sample has {tuple(n_sizes)}"
        )
    if w.p != p:
        raise InvalidDimensionError(f"weights have dimension {w.p}, sample has {p}")


def trace_w_sigma_hat(summary: GroupSummary, w: WeightSpec) -> float:
    """tr(W Sigma_hat) = (n - 1)^-1 sum_i q_ii."""
    return float(w_row_norms_sq(summary.centered, w).sum() / (summary.n - 1))


def t_statistic(sample: GroupedSample, contrast: Contrast, w: WeightSpec) -> float:
    _check_consistent(sample.k, sample.p, sample.n_sizes, contrast, w)
    summaries = summarize(sample)

    means = np.vstack([s.mean for s in summaries])
    between = float(np.sum(contrast.d * w_gram(means, means, w)))
    within = sum(
        contrast.d[i, i] * trace_w_sigma_hat(s, w) / s.n for i, s in enumerate(summaries)
    )
    return between - within


def t_statistic_oracle(sample: GroupedSample, contrast: Contrast, w: WeightSpec) -> float:
    """Brute-force U-statistic form; double loops over observation pairs."""
    _check_consistent(sample.k, sample.p, sample.n_sizes, contrast, w)
    groups = sample.groups
    total = 0.0
    for alpha, ya in enumerate(groups):
        for beta, yb in enumerate(groups):
            acc = 0.0
            if alpha == beta:
                n = ya.shape[0]
                for i in range(n):
                    for j in range(n):
                        if i != j:
                            acc += w_quadratic(ya[i], ya[j], w)
                s = acc / (n * (n - 1))
            else:
                for xi in ya:
                    for xj in yb:
                        acc += w_quadratic(xi, xj, w)
                s = acc / (ya.shape[0] * yb.shape[0])
            total += contrast.d[alpha, beta] * s
    return total


def trace_w_sigma_sq_hat(summary: GroupSummary, w: WeightSpec) -> float:
    """Unbiased estimate of tr((W Sigma)^2) with the fourth-moment correction Q."""
    n = summary.n
    if n < MIN_GROUP_SIZE:
        raise SampleTooSmallError(summary.label or "?", n, MIN_GROUP_SIZE)

    q = w_gram(summary.centered, summary.centered, w)
    q_diag = np.diag(q)
    tr_w_sigma = q_diag.sum() / (n - 1)
    tr_w_sigma_sq = np.sum(q * q) / (n - 1) ** 2
    q_alpha = np.sum(q_diag * q_diag) / (n - 1)

    factor = (n - 1) / (n * (n - 2) * (n - 3))
    return float(
        factor * ((n - 1) * (n - 2) * tr_w_sigma_sq + tr_w_sigma**2 - n * q_alpha)
    )


def trace_cross_hat(summary_a: GroupSummary, summary_b: GroupSummary, w: WeightSpec) -> float:
    """tr(W Sigma_hat_a W Sigma_hat_b) from the cross Gram matrix."""
    if summary_a.centered.shape[1] != summary_b.centered.shape[1]:
        raise InvalidDimensionError("groups have different dimensions")
    q = w_gram(summary_a.centered, summary_b.centered, w)
    return float(np.sum(q * q) / ((summary_a.n - 1) * (summary_b.n - 1)))


def _variance_parts(summaries: Sequence[GroupSummary], contrast: Contrast, w: WeightSpec):
    k = len(summaries)
    d = contrast.d
    tr_sq = [trace_w_sigma_sq_hat(s, w) for s in summaries]
    cross = np.zeros((k, k))
    for alpha in range(k):
        for beta in range(alpha + 1, k):
            cross[alpha, beta] = cross[beta, alpha] = trace_cross_hat(
                summaries[alpha], summaries[beta], w
            )

    within = sum(
        d[a, a] ** 2 * tr_sq[a] / (s.n * (s.n - 1)) for a, s in enumerate(summaries)
    )
    between = sum(
        d[a, b] ** 2 * cross[a, b] / (summaries[a].n * summaries[b].n)
        for a in range(k)
        for b in range(k)
        if a != b
    )
    return 2.0 * (within + between), tr_sq, cross


def variance_hat(summaries: Sequence[GroupSummary], contrast: Contrast, w: WeightSpec) -> float:
    variance, _, _ = _variance_parts(summaries, contrast, w)
    return float(variance)


def _trace_w_cov_pair(cov_a, cov_b, p: int, w: WeightSpec) -> float:
    """Exact tr(W Sigma_a W Sigma_b)."""
    scale_a = getattr(cov_a, "identity_scale", None)
    scale_b = getattr(cov_b, "identity_scale", None)
    if scale_a is not None and scale_b is not None:
        return scale_a * scale_b * w.trace_sq()

    def w_times(cov) -> np.ndarray:
        sigma = _dense_cov(cov, p)
        return sigma * w.beta_sq[:, None] + np.outer(w.a, w.a @ sigma)

    return float(np.sum(w_times(cov_a) * w_times(cov_b).T))


def _dense_cov(cov, p: int) -> np.ndarray:
    if isinstance(cov, np.ndarray):
        if cov.shape != (p, p):
            raise InvalidDimensionError(f"covariance has shape {cov.shape}, expected ({p}, {p})")
        return cov
    if isinstance(cov, CovarianceLike):
        return cov.dense(p)
    raise InvalidInputError(f"unsupported covariance representation: {type(cov).__name__}")


def _cov_quadratic(cov, u: np.ndarray) -> float:
    if isinstance(cov, np.ndarray):
        return float(u @ cov @ u)
    if isinstance(cov, CovarianceLike):
        return float(cov.quadratic(u))
    raise InvalidInputError(f"unsupported covariance representation: {type(cov).__name__}")


def null_variance_exact(sigmas: Sequence, contrast: Contrast, w: WeightSpec) -> float:
    """sigma^2(T_n0) from true covariances."""
    k = contrast.k
    if len(sigmas) != k:
        raise InvalidDimensionError(f"{len(sigmas)} covariances given for {k} groups")
    n = contrast.n_sizes
    d = contrast.d
    p = w.p

    within = sum(
        d[a, a] ** 2 * _trace_w_cov_pair(sigmas[a], sigmas[a], p, w) / (n[a] * (n[a] - 1))
        for a in range(k)
    )
    between = 0.0
    for a in range(k):
        for b in range(a + 1, k):
            if d[a, b] == 0.0:
                continue
            between += 2.0 * d[a, b] ** 2 * _trace_w_cov_pair(sigmas[a], sigmas[b], p, w) / (
                n[a] * n[b]
            )
    return float(2.0 * (within + between))


def normal_sf(z: float) -> float:
    """1 - Phi(z)."""
    return float(0.5 * special.erfc(z / math.sqrt(2.0)))


def normal_isf(level: float) -> float:
    """Upper-tail quantile z with normal_sf(z) = level."""
    if not 0.0 < level < 1.0:
        raise InvalidInputError(f"level must lie in (0, 1), got {level}")
    return float(-special.ndtri(level))


def run_test(sample: GroupedSample, contrast: Contrast, w: WeightSpec) -> TestResult:
    _check_consistent(sample.k, sample.p, sample.n_sizes, contrast, w)
    summaries = summarize(sample)

    t_n = t_statistic(sample, contrast, w)
    sigma_hat_sq, tr_sq, cross = _variance_parts(summaries, contrast, w)
    sigma_hat_sq = float(sigma_hat_sq)

    degenerate = not (np.isfinite(sigma_hat_sq) and sigma_hat_sq > 0.0)
    z = p_value = None
    if not degenerate:
        z = t_n / math.sqrt(sigma_hat_sq)
        p_value = normal_sf(z)

    cross.setflags(write=False)
    return TestResult(
        t_n=t_n,
        sigma_hat_sq=sigma_hat_sq,
        z=z,
        p_value=p_value,
        trace_w_sigma=tuple(trace_w_sigma_hat(s, w) for s in summaries),
        trace_w_sigma_sq=tuple(tr_sq),
        trace_cross=cross,
        labels=sample.labels,
        n_sizes=sample.n_sizes,
        degenerate_variance=degenerate,
    )


def _mean_matrix(mus, k: int, p: int) -> np.ndarray:
    mus = np.atleast_2d(np.asarray(mus, dtype=np.float64))
    if mus.shape != (k, p):
        raise InvalidDimensionError(f"mean vectors have shape {mus.shape}, expected ({k}, {p})")
    return mus


def signal_norm(mus, contrast: Contrast, w: WeightSpec) -> float:
    """sum_{alpha,beta} d_ab mu_a^T W mu_b, zero exactly when the hypothesis holds."""
    mus = _mean_matrix(mus, contrast.k, w.p)
    return float(np.sum(contrast.d * w_gram(mus, mus, w)))


def statistic_decomposition(
    sample: GroupedSample, mus, contrast: Contrast, w: WeightSpec
) -> StatisticDecomposition:
    _check_consistent(sample.k, sample.p, sample.n_sizes, contrast, w)
    mus = _mean_matrix(mus, sample.k, sample.p)

    centred = GroupedSample(
        groups=tuple(g - mu for g, mu in zip(sample.groups, mus, strict=True)),
        labels=sample.labels,
    )
    t_n0 = t_statistic(centred, contrast, w)
    deviations = np.vstack([g.mean(axis=0) for g in centred.groups])
    s_n = float(np.sum(contrast.d * w_gram(mus, deviations, w)))
    signal = signal_norm(mus, contrast, w)
    return StatisticDecomposition(
        t_n0=t_n0, s_n=s_n, signal=signal, t_n=t_statistic(sample, contrast, w)
    )


def alternative_variance(mus, sigmas: Sequence, contrast: Contrast, w: WeightSpec) -> float:
    """Var(S_n) = sum_beta n_beta^-1 u_beta^T Sigma_beta u_beta, u_beta = W sum_a d_ab mu_a."""
    mus = _mean_matrix(mus, contrast.k, w.p)
    if len(sigmas) != contrast.k:
        raise InvalidDimensionError(f"{len(sigmas)} covariances given for {contrast.k} groups")

    v = contrast.d @ mus
    u = v * w.beta_sq + np.outer(v @ w.a, w.a)
    return float(
        sum(
            _cov_quadratic(sigma, u[b]) / n
            for b, (sigma, n) in enumerate(zip(sigmas, contrast.n_sizes, strict=True))
        )
    )


def power_prediction(signal: float, sigma0: float, level: float) -> float:
    """Phi(-z_level + signal / sigma0)."""
    if not sigma0 > 0:
        raise InvalidInputError(f"null standard deviation must be positive, got {sigma0}")
    return normal_sf(normal_isf(level) - signal / sigma0)
