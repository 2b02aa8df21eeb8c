from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from riglht.core.contrast import ContrastInput, build_contrast, manova_contrast
from riglht.core.statistic import GroupedSample
from riglht.core.weights import default_weights

GOLDEN_DIR = Path(__file__).parent / "golden"


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_sample(rng, n_sizes, p, scale=1.0) -> GroupedSample:
    return GroupedSample(groups=tuple(scale * rng.standard_normal((n, p)) for n in n_sizes))


def manova(n_sizes, **kwargs):
    return build_contrast(ContrastInput(manova_contrast(len(n_sizes)), **kwargs), n_sizes)


def write_dataset(path: Path, groups: dict[str, np.ndarray]) -> Path:
    """Grouped CSV with a ``group`` column followed by x1..xp."""
    frames = []
    for label, rows in groups.items():
        rows = np.atleast_2d(rows)
        frame = pd.DataFrame(rows, columns=[f"x{i}" for i in range(1, rows.shape[1] + 1)])
        frame.insert(0, "group", label)
        frames.append(frame)
    pd.concat(frames, ignore_index=True).to_csv(path, index=False)
    return path


@pytest.fixture
def small_problem(rng):
    n_sizes = (5, 6, 7)
    p = 12
    return random_sample(rng, n_sizes, p), manova(n_sizes), default_weights(p)
