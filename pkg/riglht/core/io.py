"""Grouped CSV datasets: first column is the group label, the rest are features."""

import re
from pathlib import Path

import numpy as np
import pandas as pd

from riglht.core.contrast import MIN_GROUP_SIZE
from riglht.core.errors import DatasetError, SampleTooSmallError
from riglht.core.statistic import GroupedSample
from riglht.utils.logging import get_logger

logger = get_logger(__name__)

# header is line 1, the first data row is line 2
_FIRST_DATA_LINE = 2


def _parse_feature(value) -> float:
    # short rows come back as NaN rather than ""
    if not isinstance(value, str) or not value.strip():
        raise ValueError("missing value")
    return float(value)


def _check_feature_column(frame: pd.DataFrame, position: int, name: str):
    """Raise for the first cell of a column that does not parse as a number."""
    for row, value in enumerate(frame.iloc[:, position]):
        try:
            _parse_feature(value)
        except ValueError as e:
            reason = str(e) if str(e) == "missing value" else f"non-numeric value {value!r}"
            raise DatasetError(
                f"{reason} in column '{name}'", line=row + _FIRST_DATA_LINE
            ) from None


def read_grouped_csv(path: str | Path) -> GroupedSample:
    """Load a dataset; groups keep their order of first appearance."""
    path = Path(path)
    # header is row 0 of the raw frame; every row must match its field count
    try:
        raw = pd.read_csv(
            path,
            header=None,
            index_col=False,
            dtype=str,
            keep_default_na=False,
            skipinitialspace=True,
        )
    except FileNotFoundError:
        raise DatasetError(f"dataset not found: {path}") from None
    except pd.errors.EmptyDataError:
        raise DatasetError("dataset is empty") from None
    except pd.errors.ParserError as e:
        match = re.search(r"line (\d+)", str(e))
        line = int(match.group(1)) if match else None
        raise DatasetError(f"malformed row: {e}", line=line) from None

    if raw.shape[1] < 2:
        raise DatasetError("expected a label column followed by at least one feature column")

    names = [str(name).strip() for name in raw.iloc[0]]
    frame = raw.iloc[1:].reset_index(drop=True)
    features = list(range(1, len(names)))

    labels = frame.iloc[:, 0].astype(str).str.strip()
    for row, label in enumerate(labels):
        if not label:
            raise DatasetError("missing group label", line=row + _FIRST_DATA_LINE)

    for position in features:
        _check_feature_column(frame, position, names[position])

    # str -> float64 is correctly rounded, so 17-digit text round-trips exactly
    values = (
        frame.iloc[:, features].apply(lambda col: col.str.strip()).astype(np.float64).to_numpy()
    )
    if not np.all(np.isfinite(values)):
        row = int(np.flatnonzero(~np.isfinite(values).all(axis=1))[0])
        raise DatasetError("non-finite feature value", line=row + _FIRST_DATA_LINE)

    order = list(pd.unique(labels))
    if len(order) < 2:
        raise DatasetError(f"at least 2 distinct group labels are required, found {len(order)}")

    groups = []
    for label in order:
        rows = values[(labels == label).to_numpy()]
        if rows.shape[0] < MIN_GROUP_SIZE:
            raise SampleTooSmallError(label, rows.shape[0], MIN_GROUP_SIZE)
        groups.append(rows)

    logger.debug("read %s: %d groups, p=%d", path, len(order), len(features))
    return GroupedSample(groups=tuple(groups), labels=tuple(order))


def sample_frame(sample: GroupedSample, feature_names=None) -> pd.DataFrame:
    names = list(feature_names) if feature_names else [f"x{i}" for i in range(1, sample.p + 1)]
    if len(names) != sample.p:
        raise DatasetError(f"{len(names)} feature names given for p={sample.p}")
    blocks = []
    for label, group in zip(sample.labels, sample.groups, strict=True):
        block = pd.DataFrame(group, columns=names)
        block.insert(0, "group", label)
        blocks.append(block)
    return pd.concat(blocks, ignore_index=True)


def write_grouped_csv(sample: GroupedSample, path: str | Path, feature_names=None) -> Path:
    """Write the sample as a grouped CSV. Floats use the shortest round-trip repr."""
    path = Path(path)
    sample_frame(sample, feature_names).to_csv(path, index=False)
    logger.info("wrote %s", path)
    return path
