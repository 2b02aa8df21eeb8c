import json
import os
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd
from dotenv import load_dotenv

from riglht.core.contrast import (
    NAMED_CONTRASTS,
    ContrastInput,
    ExponentMode,
    manova_contrast,
    pairwise_contrast,
)
from riglht.core.datagen import (
    P_VALUES,
    R_VALUES,
    SAMPLE_SIZES,
    T_VALUES,
    CovarianceKind,
    CovarianceModel,
    MeanAlternative,
    covariance_preset,
    distribution_preset,
)
from riglht.core.errors import ConfigError, RiglhtError
from riglht.core.montecarlo import SimulationConfig
from riglht.core.weights import WeightSpec, default_weights
from riglht.utils.logging import get_logger

logger = get_logger(__name__)

THREADS_ENV = "RIGLHT_THREADS"


@dataclass(frozen=True)
class SizeGridSpec:
    p: tuple[int, ...] = P_VALUES
    models: tuple[str, ...] = ("model1",)
    cases: tuple[str, ...] = ("case1",)


@dataclass(frozen=True)
class PowerGridSpec:
    r: tuple[float, ...] = R_VALUES
    t: tuple[float, ...] = T_VALUES
    p: tuple[int, ...] | None = None


@dataclass(frozen=True)
class RunConfig:
    """Parsed run configuration file. Every key is optional."""

    contrast: Any = None
    exponent_mode: ExponentMode = ExponentMode.SQUARE_ROOT
    level: float | None = None
    weights: Any = "default"
    p: int = 100
    n_sizes: tuple[int, ...] = SAMPLE_SIZES[0]
    covariance: Any = "case1"
    distribution: str = "model1"
    alternative: dict | None = None
    replicates: int = 2000
    seed: int | None = None
    threads: int | None = None
    records: bool = False
    size_grid: SizeGridSpec | None = None
    power_grid: PowerGridSpec | None = None
    source: Path | None = field(default=None, compare=False)


_KNOWN_KEYS = {f.name for f in fields(RunConfig)} - {"source"}


def _expect(value, kind, key: str):
    # bool is an int subclass; a flag is never a valid count
    if isinstance(value, bool) and kind is not bool:
        raise ConfigError(f"'{key}' must be {kind.__name__}, got a boolean")
    if kind is float and isinstance(value, int):
        return float(value)
    if not isinstance(value, kind):
        raise ConfigError(f"'{key}' must be {kind.__name__}, got {type(value).__name__}")
    return value


def _expect_list(value, kind, key: str) -> tuple:
    if not isinstance(value, list) or not value:
        raise ConfigError(f"'{key}' must be a non-empty list")
    return tuple(_expect(v, kind, key) for v in value)


def _reject_unknown(section: dict, allowed: set[str], where: str):
    unknown = sorted(set(section) - allowed)
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(unknown)}")


class ConfigManager:
    def __init__(self, out_dir: Path | None = None):
        self.out_dir = out_dir or Path.cwd() / "riglht-out"
        load_dotenv()

    def ensure_out_dir(self) -> Path:
        """Create the output directory if it doesn't exist."""
        self.out_dir.mkdir(parents=True, exist_ok=True)
        return self.out_dir

    def write_json(self, name: str, payload: dict[str, Any]) -> Path:
        path = self.ensure_out_dir() / name
        path.write_text(json.dumps(payload, indent=2) + "\n")
        logger.info("wrote %s", path)
        return path

    def write_table(self, name: str, table: pd.DataFrame) -> Path:
        path = self.ensure_out_dir() / name
        table.to_csv(path, index=False)
        logger.info("wrote %s", path)
        return path

    def default_threads(self) -> int:
        """Thread budget from RIGLHT_THREADS, 1 when unset."""
        raw = os.environ.get(THREADS_ENV, "").strip()
        if not raw:
            return 1
        try:
            threads = int(raw)
        except ValueError:
            raise ConfigError(f"{THREADS_ENV} must be an integer, got '{raw}'") from None
        if threads < 1:
            raise ConfigError(f"{THREADS_ENV} must be >= 1, got {threads}")
        return threads

    def load_run_config(self, path: Path | None) -> RunConfig:
        """Read and schema-check a JSON run configuration; no path means all defaults."""
        if path is None:
            return RunConfig()
        try:
            raw = json.loads(Path(path).read_text())
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}") from None
        except json.JSONDecodeError as e:
            raise ConfigError(f"config file is not valid JSON: {e}") from None
        if not isinstance(raw, dict):
            raise ConfigError("config file must contain a JSON object")
        _reject_unknown(raw, _KNOWN_KEYS, "config")

        values: dict[str, Any] = {"source": Path(path)}
        if "contrast" in raw:
            values["contrast"] = raw["contrast"]
        if "exponent_mode" in raw:
            try:
                values["exponent_mode"] = ExponentMode(raw["exponent_mode"])
            except ValueError:
                raise ConfigError(
                    f"exponent_mode must be one of {[m.value for m in ExponentMode]}"
                ) from None
        if "level" in raw:
            values["level"] = _expect(raw["level"], float, "level")
        if "weights" in raw:
            values["weights"] = raw["weights"]
        if "p" in raw:
            values["p"] = _expect(raw["p"], int, "p")
        if "n_sizes" in raw:
            values["n_sizes"] = _expect_list(raw["n_sizes"], int, "n_sizes")
        if "covariance" in raw:
            values["covariance"] = raw["covariance"]
        if "distribution" in raw:
            values["distribution"] = _expect(raw["distribution"], str, "distribution")
        if raw.get("alternative") is not None:
            alternative = _expect(raw["alternative"], dict, "alternative")
            _reject_unknown(alternative, {"r", "t", "target_group"}, "alternative")
            values["alternative"] = alternative
        for key in ("replicates", "seed", "threads"):
            if raw.get(key) is not None:
                values[key] = _expect(raw[key], int, key)
        if "records" in raw:
            values["records"] = _expect(raw["records"], bool, "records")
        if raw.get("size_grid") is not None:
            values["size_grid"] = self._parse_size_grid(raw["size_grid"])
        if raw.get("power_grid") is not None:
            values["power_grid"] = self._parse_power_grid(raw["power_grid"])

        run = RunConfig(**values)
        if run.level is not None and not 0.0 < run.level < 1.0:
            raise ConfigError(f"level must lie in (0, 1), got {run.level}")
        logger.debug("loaded run config from %s", path)
        return run

    def _parse_size_grid(self, section) -> SizeGridSpec:
        section = _expect(section, dict, "size_grid")
        _reject_unknown(section, {"p", "models", "cases"}, "size_grid")
        spec = SizeGridSpec(
            p=_expect_list(section["p"], int, "size_grid.p") if "p" in section else P_VALUES,
            models=_expect_list(section.get("models", ["model1"]), str, "size_grid.models"),
            cases=_expect_list(section.get("cases", ["case1"]), str, "size_grid.cases"),
        )
        for model in spec.models:
            self._distribution(model)
        for case in spec.cases:
            self._covariances(case)
        return spec

    def _parse_power_grid(self, section) -> PowerGridSpec:
        section = _expect(section, dict, "power_grid")
        _reject_unknown(section, {"r", "t", "p"}, "power_grid")
        return PowerGridSpec(
            r=_expect_list(section["r"], float, "power_grid.r") if "r" in section else R_VALUES,
            t=_expect_list(section["t"], float, "power_grid.t") if "t" in section else T_VALUES,
            p=_expect_list(section["p"], int, "power_grid.p") if "p" in section else None,
        )

    def resolve_contrast(self, run: RunConfig, labels: tuple[str, ...]) -> ContrastInput:
        """Contrast over groups in ``labels`` order.

        Accepts "manova", "pairwise:<a>,<b>" (group labels), a named four-group row
        ("linear_combination", "data_analysis"), a single row or a q x K matrix.
        """
        spec = run.contrast if run.contrast is not None else "manova"
        k = len(labels)
        try:
            if isinstance(spec, str):
                if spec == "manova":
                    matrix = manova_contrast(k)
                elif spec.startswith("pairwise:"):
                    first, _, second = spec.removeprefix("pairwise:").partition(",")
                    index = {label: i for i, label in enumerate(labels)}
                    missing = [g for g in (first, second) if g.strip() not in index]
                    if missing:
                        raise ConfigError(
                            f"pairwise contrast names unknown group(s) {missing}; "
                            f"groups are {list(labels)}"
                        )
                    matrix = pairwise_contrast(k, index[first.strip()], index[second.strip()])
                elif spec in NAMED_CONTRASTS:
                    matrix = NAMED_CONTRASTS[spec].copy()
                else:
                    raise ConfigError(f"unknown contrast preset '{spec}'")
            elif isinstance(spec, list) and spec:
                matrix = np.atleast_2d(np.array(spec, dtype=np.float64))
            else:
                raise ConfigError("contrast must be a preset name, a row or a matrix")
            if matrix.ndim != 2 or matrix.shape[1] != k:
                raise ConfigError(
                    f"contrast has {matrix.shape[-1]} columns but the data has {k} groups"
                )
            return ContrastInput(matrix, run.exponent_mode)
        except ConfigError:
            raise
        except (RiglhtError, ValueError, TypeError) as e:
            raise ConfigError(f"invalid contrast: {e}") from None

    def resolve_weights(self, run: RunConfig, p: int) -> WeightSpec:
        spec = run.weights
        if spec == "default":
            return default_weights(p)
        if not isinstance(spec, dict):
            raise ConfigError('weights must be "default" or an object with "a" and "beta_sq"')
        _reject_unknown(spec, {"a", "beta_sq"}, "weights")
        try:
            weights = WeightSpec(a=spec["a"], beta_sq=spec["beta_sq"])
        except KeyError as e:
            raise ConfigError(f"weights is missing {e}") from None
        except (RiglhtError, ValueError, TypeError) as e:
            raise ConfigError(f"invalid weights: {e}") from None
        if weights.p != p:
            raise ConfigError(f"weights have dimension {weights.p}, data has p={p}")
        return weights

    def _covariances(self, spec) -> tuple:
        try:
            if isinstance(spec, str):
                return covariance_preset(spec)
            if isinstance(spec, list) and spec:
                models = []
                for entry in spec:
                    entry = _expect(entry, dict, "covariance[]")
                    _reject_unknown(entry, {"kind", "scale", "rho"}, "covariance entry")
                    models.append(
                        CovarianceModel(
                            CovarianceKind(entry.get("kind", "scaled_identity")),
                            _expect(entry.get("scale", 1.0), float, "covariance.scale"),
                            _expect(entry.get("rho", 0.0), float, "covariance.rho"),
                        )
                    )
                return tuple(models)
        except ConfigError:
            raise
        except (RiglhtError, ValueError) as e:
            raise ConfigError(f"invalid covariance: {e}") from None
        raise ConfigError("covariance must be a preset name or a list of {kind, scale, rho}")

    def _distribution(self, name: str):
        try:
            return distribution_preset(name)
        except RiglhtError as e:
            raise ConfigError(str(e)) from None

    def _alternative(self, spec: dict | None, k: int) -> MeanAlternative | None:
        if spec is None:
            return None
        try:
            return MeanAlternative(
                r=_expect(spec.get("r", 0.0), float, "alternative.r"),
                t=_expect(spec.get("t", 0.0), float, "alternative.t"),
                target_group=_expect(spec.get("target_group", k), int, "alternative.target_group")
                - 1,
            )
        except RiglhtError as e:
            raise ConfigError(f"invalid alternative: {e}") from None

    def simulation_config(
        self,
        run: RunConfig,
        seed: int | None = None,
        threads: int | None = None,
        level: float | None = None,
    ) -> SimulationConfig:
        """Typed simulation config. CLI overrides beat the file, which beats the environment."""
        labels = tuple(str(i + 1) for i in range(len(run.n_sizes)))
        config = SimulationConfig(
            p=run.p,
            n_sizes=run.n_sizes,
            contrast=self.resolve_contrast(run, labels),
            covariances=self._covariances(run.covariance),
            distribution=self._distribution(run.distribution),
            alternative=self._alternative(run.alternative, len(run.n_sizes)),
            weights=None if run.weights == "default" else self.resolve_weights(run, run.p),
            replicates=run.replicates,
            level=level if level is not None else run.level if run.level is not None else 0.05,
            seed=seed if seed is not None else run.seed if run.seed is not None else 0,
            threads=threads if threads is not None else self._file_threads(run),
            keep_records=run.records,
            case_name=run.covariance if isinstance(run.covariance, str) else "",
            model_name=run.distribution,
        )
        config.validate()
        return config

    def _file_threads(self, run: RunConfig) -> int:
        return run.threads if run.threads is not None else self.default_threads()
