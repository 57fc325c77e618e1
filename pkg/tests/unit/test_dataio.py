"""Tests for CSV loading, validation and synthetic data."""

import json

import numpy as np
import pytest

from coreset_qaoa.dataio import (
    DataSet,
    SyntheticSpec,
    generate_synthetic,
    load_csv,
    read_json,
    require,
    validate_csv,
    write_csv,
    write_json,
)
from coreset_qaoa.errors import (
    DataFileError,
    EmptyFileError,
    InvalidArgumentError,
    NonFiniteValueError,
    NonNumericCellError,
    OutputError,
    RaggedRowError,
    SchemaError,
)


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return path


class TestLoadCsv:
    """load_csv reads one point per row and reports bad input precisely."""

    def test_basic(self, tmp_path):
        path = write(tmp_path, "points.csv", "1,2\n3,4\n5,6\n")
        data = load_csv(path)
        assert data.n == 3
        assert data.dim == 2
        assert data.name == "points"
        assert np.array_equal(data.points, [[1, 2], [3, 4], [5, 6]])

    def test_header_skipped(self, tmp_path):
        path = write(tmp_path, "h.csv", "x,y\n1,2\n")
        assert load_csv(path, has_header=True).n == 1

    def test_header_without_flag_is_non_numeric(self, tmp_path):
        path = write(tmp_path, "h.csv", "x,y\n1,2\n")
        with pytest.raises(NonNumericCellError) as info:
            load_csv(path)
        assert info.value.row == 1
        assert info.value.column == 1

    def test_blank_lines_skipped(self, tmp_path):
        path = write(tmp_path, "b.csv", "1,2\n\n3,4\n")
        assert load_csv(path).n == 2

    def test_ragged_row_reports_line(self, tmp_path):
        path = write(tmp_path, "r.csv", "1,2\n3,4\n5\n")
        with pytest.raises(RaggedRowError) as info:
            load_csv(path)
        assert info.value.row == 3
        assert info.value.expected == 2
        assert info.value.found == 1
        assert "row 3" in str(info.value)

    def test_non_numeric_cell(self, tmp_path):
        path = write(tmp_path, "n.csv", "1,2\n3,abc\n")
        with pytest.raises(NonNumericCellError) as info:
            load_csv(path)
        assert (info.value.row, info.value.column) == (2, 2)

    @pytest.mark.parametrize("cell", ["nan", "inf", "-inf"])
    def test_non_finite_cell(self, tmp_path, cell):
        path = write(tmp_path, "f.csv", f"1,2\n{cell},4\n")
        with pytest.raises(NonFiniteValueError) as info:
            load_csv(path)
        assert (info.value.row, info.value.column) == (2, 1)

    def test_empty_file(self, tmp_path):
        with pytest.raises(EmptyFileError):
            load_csv(write(tmp_path, "e.csv", ""))

    def test_header_only(self, tmp_path):
        with pytest.raises(EmptyFileError):
            load_csv(write(tmp_path, "e.csv", "x,y\n"), has_header=True)

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataFileError) as info:
            load_csv(tmp_path / "missing.csv")
        assert info.value.exit_code == 65

    def test_invalid_utf8(self, tmp_path):
        path = tmp_path / "latin.csv"
        path.write_bytes(b"1,2\n\xff\xfe,3\n")
        with pytest.raises(DataFileError) as info:
            load_csv(path)
        assert info.value.exit_code == 65
        assert "UTF-8" in str(info.value)

    @pytest.mark.parametrize("cell", ["1_000", " 2", "2 ", " 2 ", "0x10", "1e", "--1", "1.2.3", ""])
    def test_cells_must_be_plain_numbers(self, tmp_path, cell):
        path = write(tmp_path, "s.csv", f"5,6\n{cell},4\n")
        with pytest.raises(NonNumericCellError) as info:
            load_csv(path)
        assert (info.value.row, info.value.column) == (2, 1)

    def test_decimal_and_scientific_cells(self, tmp_path):
        path = write(tmp_path, "sci.csv", "1e3,-.5\n+2.,1E-2\n")
        assert np.array_equal(load_csv(path).points, [[1000.0, -0.5], [2.0, 0.01]])

    def test_bundled_fixtures(self, two_blobs_csv, imbalanced_csv):
        assert load_csv(two_blobs_csv).points.shape == (30, 2)
        assert load_csv(imbalanced_csv, has_header=True).points.shape == (60, 3)


class TestWriteCsv:
    """write_csv keeps full precision."""

    def test_reload_is_exact(self, tmp_path):
        points = np.random.default_rng(1).normal(size=(20, 3)) * 1e6
        path = tmp_path / "out.csv"
        write_csv(DataSet(points), path)
        assert np.array_equal(load_csv(path).points, points)

    def test_unwritable_path(self, tmp_path):
        with pytest.raises(OutputError) as info:
            write_csv(DataSet([[1.0]]), tmp_path / "missing" / "out.csv")
        assert info.value.exit_code == 67


class TestValidateCsv:
    def test_summary(self, two_blobs_csv):
        summary = validate_csv(two_blobs_csv)
        assert summary["n"] == 30
        assert summary["dim"] == 2
        assert summary["min"] < -5 < 5 < summary["max"]


class TestDataSet:
    """DataSet validates its arrays."""

    def test_rejects_non_finite(self):
        with pytest.raises(InvalidArgumentError):
            DataSet([[1.0, float("nan")]])

    def test_rejects_empty(self):
        with pytest.raises(InvalidArgumentError):
            DataSet(np.zeros((0, 2)))

    def test_rejects_bad_weights(self):
        with pytest.raises(InvalidArgumentError):
            DataSet([[1.0], [2.0]], weights=[1.0, 0.0])

    def test_unit_weights_by_default(self):
        assert np.array_equal(DataSet([[1.0], [2.0]]).point_weights(), [1.0, 1.0])

    def test_points_are_read_only(self):
        data = DataSet([[1.0, 2.0]])
        with pytest.raises(ValueError):
            data.points[0, 0] = 5.0


class TestSyntheticSpec:
    """SyntheticSpec validation and JSON mapping."""

    def test_defaults(self):
        spec = SyntheticSpec()
        assert spec.n_total == 4000
        assert spec.n_rare_points == 50
        assert spec.n_majority == 3950

    def test_majority_must_be_non_empty(self):
        with pytest.raises(InvalidArgumentError):
            SyntheticSpec(n_total=50, n_rare_clusters=10, points_per_rare_cluster=5)

    def test_no_rare_clusters_allowed(self):
        assert SyntheticSpec(n_total=10, n_rare_clusters=0, points_per_rare_cluster=0).n_majority == 10

    def test_unknown_field(self):
        with pytest.raises(SchemaError):
            SyntheticSpec.from_dict({"n_total": 100, "colour": "red"})

    def test_from_dict(self):
        spec = SyntheticSpec.from_dict({"n_total": 100, "dim": 3, "seed": 4})
        assert spec == SyntheticSpec(n_total=100, dim=3, seed=4)
        assert SyntheticSpec.from_dict(spec.to_dict()) == spec

    @pytest.mark.parametrize("field,value", [
        ("n_total", 100.0), ("dim", True), ("seed", "3"), ("n_rare_clusters", 2.5),
        ("points_per_rare_cluster", None), ("cluster_spread", "1"), ("center_scale", False),
    ])
    def test_field_types(self, field, value):
        with pytest.raises(SchemaError) as info:
            SyntheticSpec.from_dict({"n_total": 100, field: value})
        assert field in str(info.value)

    def test_integer_spread_accepted(self):
        assert SyntheticSpec.from_dict({"n_total": 100, "cluster_spread": 2}).cluster_spread == 2


class TestGenerateSynthetic:
    """Rare-cluster data generation."""

    def test_shape_and_labels(self):
        spec = SyntheticSpec(n_total=100, dim=3, n_rare_clusters=4, points_per_rare_cluster=5, seed=2)
        data = generate_synthetic(spec)
        assert data.points.shape == (100, 3)
        assert np.count_nonzero(data.labels == 0) == 80
        for label in range(1, 5):
            assert np.count_nonzero(data.labels == label) == 5
        assert list(data.labels[:80]) == [0] * 80

    def test_deterministic(self):
        spec = SyntheticSpec(n_total=60, dim=2, n_rare_clusters=2, points_per_rare_cluster=3, seed=9)
        assert generate_synthetic(spec).equals(generate_synthetic(spec))

    def test_seed_changes_data(self):
        a = generate_synthetic(SyntheticSpec(n_total=60, seed=1))
        b = generate_synthetic(SyntheticSpec(n_total=60, seed=2))
        assert not a.equals(b)

    def test_clusters_are_tight(self):
        data = generate_synthetic(
            SyntheticSpec(n_total=500, dim=4, n_rare_clusters=1, points_per_rare_cluster=100, seed=5)
        )
        majority = data.points[data.labels == 0]
        spread = majority.std(axis=0)
        assert np.all(spread < 1.3) and np.all(spread > 0.7)


class TestJson:
    def test_roundtrip(self, tmp_path):
        write_json({"a": [1, 2]}, tmp_path / "d.json")
        assert read_json(tmp_path / "d.json") == {"a": [1, 2]}

    def test_invalid_json(self, tmp_path):
        path = write(tmp_path, "bad.json", "{not json")
        with pytest.raises(SchemaError):
            read_json(path)

    def test_invalid_utf8(self, tmp_path):
        path = tmp_path / "latin.json"
        path.write_bytes(b'{"a": "\xff"}')
        with pytest.raises(SchemaError) as info:
            read_json(path)
        assert info.value.exit_code == 65

    def test_require(self):
        assert require({"k": 1}, "k", int) == 1
        with pytest.raises(SchemaError):
            require({"k": "1"}, "k", int)
        with pytest.raises(SchemaError):
            require({}, "k")
        assert json.dumps(require({"k": [1]}, "k", list)) == "[1]"
