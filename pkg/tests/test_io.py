import numpy as np
import pytest
from conftest import random_sample, write_dataset

from riglht.core.errors import DatasetError, SampleTooSmallError
from riglht.core.io import read_grouped_csv, write_grouped_csv
from riglht.core.statistic import GroupedSample


def test_round_trip_is_exact(tmp_path, rng):
    sample = random_sample(rng, (4, 7, 5), 6, scale=1e3)
    sample = GroupedSample(groups=sample.groups, labels=("ctrl", "low", "high"))
    path = write_grouped_csv(sample, tmp_path / "data.csv")

    loaded = read_grouped_csv(path)
    assert loaded.labels == ("ctrl", "low", "high")
    for written, read in zip(sample.groups, loaded.groups):
        np.testing.assert_array_equal(read, written)


def test_groups_keep_first_appearance_order(tmp_path):
    path = tmp_path / "data.csv"
    rows = ["group,x1"] + [f"{label},{i}" for i, label in enumerate("bbbbaaaabc")]
    rows += [f"c,{i}" for i in range(3)]
    path.write_text("\n".join(rows) + "\n")
    sample = read_grouped_csv(path)
    assert sample.labels == ("b", "a", "c")
    assert sample.n_sizes == (5, 4, 4)


def test_missing_value_reports_line(tmp_path):
    path = tmp_path / "data.csv"
    path.write_text("group,x1,x2\na,1,2\na,3,\n")
    with pytest.raises(DatasetError, match="line 3: missing value in column 'x2'"):
        read_grouped_csv(path)


def test_non_numeric_value_reports_line(tmp_path):
    path = tmp_path / "data.csv"
    path.write_text("group,x1\na,1\na,2\na,oops\n")
    with pytest.raises(DatasetError, match="line 4: non-numeric value 'oops'"):
        read_grouped_csv(path)


def test_extra_field_reports_line(tmp_path):
    path = tmp_path / "data.csv"
    path.write_text("group,x1\na,1\na,2,3\n")
    with pytest.raises(DatasetError, match="line 3"):
        read_grouped_csv(path)


@pytest.mark.parametrize(
    "body",
    [
        "a,1,1\na,2,4\na,3,9\na,4,16\nb,1,1\nb,2,4\nb,3,9\nb,4,16\n",
        "a,1,\na,2,\na,3,\na,4,\nb,5,\nb,6,\nb,7,\nb,8,\n",
    ],
    ids=["extra-field-every-row", "trailing-commas"],
)
def test_uniform_extra_field_is_rejected(tmp_path, body):
    path = tmp_path / "data.csv"
    path.write_text("group,x1\n" + body)
    with pytest.raises(DatasetError, match="^line 2: malformed row") as excinfo:
        read_grouped_csv(path)
    assert excinfo.value.line == 2


def test_single_group_is_rejected(tmp_path):
    path = write_dataset(tmp_path / "data.csv", {"only": np.ones((5, 2))})
    with pytest.raises(DatasetError, match="at least 2 distinct group labels"):
        read_grouped_csv(path)


def test_small_group_is_named(tmp_path):
    path = write_dataset(tmp_path / "data.csv", {"a": np.ones((5, 2)), "tiny": np.ones((3, 2))})
    with pytest.raises(SampleTooSmallError, match="group 'tiny' has 3 observations"):
        read_grouped_csv(path)


def test_missing_file(tmp_path):
    with pytest.raises(DatasetError, match="dataset not found"):
        read_grouped_csv(tmp_path / "absent.csv")
