"""Replicated size/power experiments and calibration diagnostics."""

import math
from collections.abc import Sequence
from dataclasses import dataclass, field, replace

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from scipy import stats

from riglht.core.contrast import (
    LINEAR_COMBINATION_CONTRAST,
    Contrast,
    ContrastInput,
    ExponentMode,
    build_contrast,
    manova_contrast,
)
from riglht.core.datagen import (
    DISTRIBUTION_PRESETS,
    DistributionModel,
    MeanAlternative,
    covariance_preset,
    distribution_preset,
    gen_sample,
    group_means,
)
from riglht.core.errors import ConfigError, RiglhtError
from riglht.core.statistic import (
    alternative_variance,
    normal_isf,
    null_variance_exact,
    power_prediction,
    run_test,
    signal_norm,
)
from riglht.core.weights import WeightSpec, default_weights
from riglht.utils.logging import get_logger

logger = get_logger(__name__)


@dataclass(frozen=True, eq=False)
class SimulationConfig:
    p: int
    n_sizes: tuple[int, ...]
    contrast: ContrastInput
    covariances: tuple
    distribution: DistributionModel
    alternative: MeanAlternative | None = None
    weights: WeightSpec | None = None
    replicates: int = 2000
    level: float = 0.05
    seed: int = 0
    threads: int = 1
    keep_records: bool = False
    case_name: str = ""
    model_name: str = ""

    def validate(self):
        """Raise ConfigError before any replicate runs."""
        if self.replicates < 1:
            raise ConfigError(f"replicates must be >= 1, got {self.replicates}")
        if not 0.0 < self.level < 1.0:
            raise ConfigError(f"level must lie in (0, 1), got {self.level}")
        if self.p < 1:
            raise ConfigError(f"dimension p must be >= 1, got {self.p}")
        if self.seed < 0:
            raise ConfigError(f"seed must be >= 0, got {self.seed}")
        if self.threads < 1:
            raise ConfigError(f"thread budget must be >= 1, got {self.threads}")
        k = len(self.n_sizes)
        if len(self.covariances) != k:
            raise ConfigError(f"{len(self.covariances)} covariances given for {k} groups")
        if self.weights is not None and self.weights.p != self.p:
            raise ConfigError(f"weights have dimension {self.weights.p}, config has p={self.p}")
        if self.alternative is not None and self.alternative.target_group >= k:
            raise ConfigError(
                f"alternative targets group {self.alternative.target_group + 1}, "
                f"but there are only {k} groups"
            )
        try:
            build_contrast(self.contrast, self.n_sizes)
        except RiglhtError as e:
            raise ConfigError(str(e)) from None

    def resolved_weights(self) -> WeightSpec:
        return self.weights if self.weights is not None else default_weights(self.p)

    def means(self) -> np.ndarray:
        return group_means(self.p, self.n_sizes, self.alternative)


@dataclass(frozen=True)
class ReplicateRecord:
    replicate_id: int
    t_n: float
    sigma_hat_sq: float
    z: float | None
    rejected: bool
    degenerate: bool


@dataclass(frozen=True)
class CalibrationReport:
    replicates: int
    valid_replicates: int
    rejections: int
    rejection_rate: float
    standard_error: float
    degenerate_count: int
    z_mean: float | None
    z_variance: float | None
    ks_distance: float | None
    null_variance: float
    empirical_variance: float | None
    variance_ratio: float | None
    signal: float
    predicted_power: float | None = None
    local_variance_ratio: float | None = None
    records: tuple[ReplicateRecord, ...] = field(default=(), repr=False)

    @property
    def variance_degenerate(self) -> bool:
        return self.null_variance <= 0.0

    def to_dict(self) -> dict:
        return {
            "replicates": self.replicates,
            "valid_replicates": self.valid_replicates,
            "rejections": self.rejections,
            "rejection_rate": self.rejection_rate,
            "standard_error": self.standard_error,
            "degenerate_count": self.degenerate_count,
            "z_mean": self.z_mean,
            "z_variance": self.z_variance,
            "ks_distance": self.ks_distance,
            "null_variance": self.null_variance,
            "empirical_variance": self.empirical_variance,
            "variance_ratio": self.variance_ratio,
            "signal": self.signal,
            "predicted_power": self.predicted_power,
            "local_variance_ratio": self.local_variance_ratio,
            "flags": {"variance_degenerate": self.variance_degenerate},
        }


def _run_replicate(
    config: SimulationConfig,
    contrast: Contrast,
    w: WeightSpec,
    means: np.ndarray,
    threshold: float,
    replicate_id: int,
) -> ReplicateRecord:
    sample = gen_sample(
        config.p,
        config.n_sizes,
        config.covariances,
        config.distribution,
        means,
        config.seed,
        replicate_id,
    )
    result = run_test(sample, contrast, w)
    rejected = not result.degenerate_variance and result.z >= threshold
    return ReplicateRecord(
        replicate_id=replicate_id,
        t_n=result.t_n,
        sigma_hat_sq=result.sigma_hat_sq,
        z=result.z,
        rejected=rejected,
        degenerate=result.degenerate_variance,
    )


def run_replicates(config: SimulationConfig) -> CalibrationReport:
    config.validate()
    contrast = build_contrast(config.contrast, config.n_sizes)
    w = config.resolved_weights()
    means = config.means()
    threshold = normal_isf(config.level)

    logger.debug(
        "running %d replicates (p=%d, n=%s, threads=%d)",
        config.replicates, config.p, config.n_sizes, config.threads,
    )
    # results come back in replicate order whatever the schedule
    records = Parallel(n_jobs=config.threads)(
        delayed(_run_replicate)(config, contrast, w, means, threshold, rid)
        for rid in range(1, config.replicates + 1)
    )
    return _aggregate(config, contrast, w, means, records)


def _aggregate(config, contrast, w, means, records) -> CalibrationReport:
    valid = [r for r in records if not r.degenerate]
    degenerate_count = len(records) - len(valid)
    rejections = sum(r.rejected for r in valid)
    rate = rejections / len(valid) if valid else 0.0
    standard_error = math.sqrt(rate * (1.0 - rate) / len(valid)) if valid else 0.0

    zs = np.array([r.z for r in valid])
    z_mean = float(zs.mean()) if zs.size else None
    z_variance = float(zs.var(ddof=1)) if zs.size > 1 else None
    ks_distance = float(stats.kstest(zs, "norm").statistic) if zs.size else None

    t_values = np.array([r.t_n for r in records])
    empirical_variance = float(t_values.var(ddof=1)) if t_values.size > 1 else None
    null_variance = null_variance_exact(config.covariances, contrast, w)
    variance_ratio = None
    if empirical_variance is not None and null_variance > 0.0:
        variance_ratio = empirical_variance / null_variance

    signal = signal_norm(means, contrast, w)
    predicted_power = local_ratio = None
    if config.alternative is not None and null_variance > 0.0:
        predicted_power = power_prediction(signal, math.sqrt(null_variance), config.level)
        local_ratio = alternative_variance(means, config.covariances, contrast, w) / null_variance

    if degenerate_count:
        logger.info("%d of %d replicates had a nonpositive variance estimate",
                    degenerate_count, len(records))

    return CalibrationReport(
        replicates=len(records),
        valid_replicates=len(valid),
        rejections=rejections,
        rejection_rate=rate,
        standard_error=standard_error,
        degenerate_count=degenerate_count,
        z_mean=z_mean,
        z_variance=z_variance,
        ks_distance=ks_distance,
        null_variance=null_variance,
        empirical_variance=empirical_variance,
        variance_ratio=variance_ratio,
        signal=signal,
        predicted_power=predicted_power,
        local_variance_ratio=local_ratio,
        records=tuple(records) if config.keep_records else (),
    )


def variance_diagnostic(config: SimulationConfig) -> float | None:
    """Empirical Var(T_n) over the replicates divided by the exact null variance.

    None when the exact null variance is zero (degenerate, e.g. constant data).
    """
    if config.alternative is not None and config.alternative.r > 0:
        raise ConfigError("the variance diagnostic needs a null configuration")
    return run_replicates(config).variance_ratio


def default_contrast(case_name: str, k: int) -> ContrastInput:
    """MANOVA for the homogeneous-structure cases 1-2, the linear combination for cases 3-4."""
    if case_name.lower() in ("case3", "case4"):
        return ContrastInput(LINEAR_COMBINATION_CONTRAST)
    return ContrastInput(manova_contrast(k))


def size_grid(
    p_values: Sequence[int],
    models: Sequence[str],
    cases: Sequence[str],
    n_sizes: Sequence[int],
    replicates: int = 2000,
    level: float = 0.05,
    seed: int = 0,
    threads: int = 1,
    contrast: ContrastInput | None = None,
    exponent_mode: ExponentMode = ExponentMode.SQUARE_ROOT,
) -> list[SimulationConfig]:
    configs = []
    for case in cases:
        covariances = covariance_preset(case)
        if len(covariances) != len(n_sizes):
            raise ConfigError(f"preset {case} has {len(covariances)} groups, n has {len(n_sizes)}")
        case_contrast = contrast or default_contrast(case, len(n_sizes))
        case_contrast = ContrastInput(case_contrast.g_tilde, exponent_mode)
        for model in models:
            for p in p_values:
                configs.append(
                    SimulationConfig(
                        p=p,
                        n_sizes=tuple(n_sizes),
                        contrast=case_contrast,
                        covariances=covariances,
                        distribution=distribution_preset(model),
                        replicates=replicates,
                        level=level,
                        seed=seed,
                        threads=threads,
                        case_name=case,
                        model_name=model,
                    )
                )
    return configs


_SIZE_COLUMNS = [
    "case", "model", "p", "n_sizes", "replicates",
    "rejection_rate", "standard_error", "degenerate",
]


def _model_label(config: SimulationConfig) -> str:
    if config.model_name:
        return config.model_name
    for name, model in DISTRIBUTION_PRESETS.items():
        if model == config.distribution:
            return name
    return config.distribution.kind.value


def size_table(configs: Sequence[SimulationConfig]) -> pd.DataFrame:
    """Empirical size per grid cell, one row per (case, model, p)."""
    rows = []
    for config in configs:
        report = run_replicates(config)
        rows.append({
            "case": config.case_name,
            "model": _model_label(config),
            "p": config.p,
            "n_sizes": "-".join(str(n) for n in config.n_sizes),
            "replicates": report.replicates,
            "rejection_rate": report.rejection_rate,
            "standard_error": report.standard_error,
            "degenerate": report.degenerate_count,
        })
        logger.info("size %s/%s p=%d: %.4f", config.case_name, rows[-1]["model"],
                    config.p, report.rejection_rate)
    return pd.DataFrame(rows, columns=_SIZE_COLUMNS)


_POWER_COLUMNS = [
    "r", "t", "p", "empirical_power", "standard_error",
    "predicted_power", "local_variance_ratio",
]


def power_curve(
    base: SimulationConfig,
    r_values: Sequence[float],
    t_values: Sequence[float],
    p_values: Sequence[int] | None = None,
) -> pd.DataFrame:
    """Empirical power over the (r, t, p) grid next to the asymptotic prediction."""
    p_values = tuple(p_values) if p_values else (base.p,)
    if base.weights is not None and any(p != base.weights.p for p in p_values):
        raise ConfigError("explicit weights fix p; use default weights to vary the dimension")

    target = len(base.n_sizes) - 1
    if base.alternative is not None:
        target = base.alternative.target_group
    rows = []
    for p in p_values:
        for t in t_values:
            for r in r_values:
                config = replace(base, p=p, alternative=MeanAlternative(r, t, target))
                report = run_replicates(config)
                rows.append({
                    "r": r,
                    "t": t,
                    "p": p,
                    "empirical_power": report.rejection_rate,
                    "standard_error": report.standard_error,
                    "predicted_power": report.predicted_power,
                    "local_variance_ratio": report.local_variance_ratio,
                })
                logger.info("power r=%s t=%s p=%d: %.4f (predicted %.4f)", r, t, p,
                            report.rejection_rate, report.predicted_power or math.nan)
    return pd.DataFrame(rows, columns=_POWER_COLUMNS)


def records_table(report: CalibrationReport) -> pd.DataFrame:
    return pd.DataFrame(
        [
            {
                "replicate_id": r.replicate_id,
                "t_n": r.t_n,
                "sigma_hat_sq": r.sigma_hat_sq,
                "z": r.z,
                "rejected": r.rejected,
                "degenerate": r.degenerate,
            }
            for r in report.records
        ],
        columns=["replicate_id", "t_n", "sigma_hat_sq", "z", "rejected", "degenerate"],
    )


def ri_integration_estimate(
    mus, contrast: Contrast, w: WeightSpec, draws: int, seed: int = 0, chunk: int = 100_000
) -> tuple[float, float]:
    """Monte Carlo estimate (and its standard error) of the weighted integral of the
    squared contrasted mean projection, with delta_i ~ N(a_i, beta_i^2) independently."""
    mus = np.atleast_2d(np.asarray(mus, dtype=np.float64))
    rng = np.random.default_rng(seed)
    sd = np.sqrt(w.beta_sq)

    total = total_sq = 0.0
    remaining = draws
    while remaining > 0:
        m = min(chunk, remaining)
        delta = w.a + sd * rng.standard_normal((m, w.p))
        values = np.sum((delta @ mus.T @ contrast.g.T) ** 2, axis=1)
        total += float(values.sum())
        total_sq += float(values @ values)
        remaining -= m

    mean = total / draws
    variance = max(total_sq / draws - mean * mean, 0.0)
    return mean, math.sqrt(variance / draws)


def ri_integration_check(
    mus, contrast: Contrast, w: WeightSpec, draws: int, seed: int = 0
) -> tuple[float, float]:
    """(Monte Carlo integral, closed form sum d_ab mu_a^T W mu_b)."""
    estimate, _ = ri_integration_estimate(mus, contrast, w, draws, seed)
    return estimate, signal_norm(mus, contrast, w)
