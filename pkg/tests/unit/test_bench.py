"""Tests for the benchmark grid, QAOA experiments and result files."""

import csv
import json
import math

import numpy as np
import pytest

from coreset_qaoa.bench import (
    CORESET,
    CSV_COLUMNS,
    FULL_KMEANS,
    QAOA,
    QAOA_BOUND,
    REPORT_MEAN,
    UNIFORM,
    WORKERS_ENV,
    DataSource,
    ExperimentConfig,
    QaoaExperimentConfig,
    ResultRecord,
    best_coreset,
    default_workers,
    run_pipeline,
    run_qaoa_experiment,
    summarize,
    write_results,
)
from coreset_qaoa.dataio import DataSet, SyntheticSpec, load_csv
from coreset_qaoa.errors import InvalidArgumentError, OutputError, SchemaError


@pytest.fixture
def small_config():
    return ExperimentConfig(m_list=(5, 10), orders=(0, math.inf), order_m=(5,), repeats=2, seed=4)


@pytest.fixture
def pairs_data(separated_pairs):
    return DataSet(separated_pairs.points, name="pairs")


def baseline_holds(records):
    full = {r.m: r.full_data_cost for r in records if r.method == FULL_KMEANS}
    return all(
        full[r.m] <= r.full_data_cost * (1 + 1e-9) for r in records if r.method != FULL_KMEANS
    )


class TestExperimentConfig:
    """Validation and JSON mapping of the benchmark grid."""

    def test_defaults(self):
        cfg = ExperimentConfig()
        assert cfg.m_list == (5, 10, 15, 20)
        assert cfg.repeats == 10
        assert cfg.report == "best"
        assert cfg.bound_sizes == (5, 10)
        assert cfg.expected_records() == 3 * 4 + 4 * 2

    @pytest.mark.parametrize("changes", [
        {"m_list": ()},
        {"m_list": (1,)},
        {"repeats": 0},
        {"methods": ("qaoa",)},
        {"report": "median"},
        {"coreset_variant": "xyz"},
        {"orders": (-1,)},
    ])
    def test_invalid(self, changes):
        with pytest.raises(InvalidArgumentError):
            ExperimentConfig(**changes)

    def test_json_document(self, two_blobs_csv):
        cfg = ExperimentConfig(
            data=DataSource(csv=str(two_blobs_csv)), m_list=(5,), orders=(1, math.inf), report=REPORT_MEAN
        )
        document = json.loads(json.dumps(cfg.to_dict()))
        assert document["orders"] == ["1", "inf"]
        assert ExperimentConfig.from_dict(document) == cfg

    def test_unknown_field(self):
        with pytest.raises(SchemaError):
            ExperimentConfig.from_dict({"m_list": [5], "colour": "red"})

    def test_bad_list(self):
        with pytest.raises(SchemaError):
            ExperimentConfig.from_dict({"m_list": 5})
        with pytest.raises(SchemaError):
            ExperimentConfig.from_dict({"orders": ["x"]})

    def test_no_orders_means_no_bounds(self):
        cfg = ExperimentConfig(orders=())
        assert cfg.bound_sizes == ()
        assert cfg.expected_records() == 12

    def test_data_source(self, two_blobs_csv):
        with pytest.raises(InvalidArgumentError):
            DataSource(csv="x.csv", synthetic=SyntheticSpec())
        assert DataSource(csv=str(two_blobs_csv)).load().n == 30
        assert DataSource(synthetic=SyntheticSpec(n_total=100)).load().n == 100
        with pytest.raises(SchemaError):
            DataSource.from_dict({"path": "x.csv"})


class TestQaoaExperimentConfig:
    def test_defaults(self):
        cfg = QaoaExperimentConfig()
        assert (cfg.m, cfg.order, cfg.p, cfg.shots, cfg.restarts) == (5, 0, 1, 8192, 20)

    @pytest.mark.parametrize("changes", [{"order": 2}, {"order": "inf"}, {"m": 1}, {"m": 25}, {"shots": 0}])
    def test_invalid(self, changes):
        with pytest.raises(InvalidArgumentError):
            QaoaExperimentConfig(**changes)

    def test_json_document(self, two_blobs_csv):
        cfg = QaoaExperimentConfig(data=DataSource(csv=str(two_blobs_csv)), order=1, p=2, seed=3)
        assert QaoaExperimentConfig.from_dict(json.loads(json.dumps(cfg.to_dict()))) == cfg

    def test_unknown_field(self):
        with pytest.raises(SchemaError):
            QaoaExperimentConfig.from_dict({"qubits": 5})


class TestResultRecord:
    def test_negative_cost(self):
        with pytest.raises(InvalidArgumentError):
            ResultRecord(method=UNIFORM, m=5, full_data_cost=-1.0, seed=0)

    def test_row_and_document(self):
        record = ResultRecord(method=QAOA_BOUND, m=5, full_data_cost=2.5, seed=1, order=math.inf,
                              energy=-3.0, partition="00111", repeat=4)
        row = record.to_row()
        assert list(row) == list(CSV_COLUMNS)
        assert row["order"] == "inf"
        assert row["coreset_cost"] == ""
        document = record.to_dict()
        assert document["order"] == "inf"
        assert "coreset_cost" not in document

    def test_sort_key(self):
        a = ResultRecord(method=QAOA_BOUND, m=5, full_data_cost=1.0, seed=0, order=math.inf)
        b = ResultRecord(method=QAOA_BOUND, m=5, full_data_cost=1.0, seed=0, order=1)
        c = ResultRecord(method=CORESET, m=10, full_data_cost=1.0, seed=0)
        assert sorted([a, b, c], key=ResultRecord.sort_key) == [c, b, a]


class TestRunPipeline:
    """The (method, m) grid plus brute-force bounds."""

    def test_record_count(self, small_synthetic, small_config):
        records = run_pipeline(small_config, data=small_synthetic, workers=1)
        assert len(records) == small_config.expected_records() == 8
        methods = [(r.method, r.m) for r in records if r.method != QAOA_BOUND]
        assert sorted(methods) == sorted((method, m) for method in (FULL_KMEANS, UNIFORM, CORESET) for m in (5, 10))
        bounds = [r for r in records if r.method == QAOA_BOUND]
        assert {r.order for r in bounds} == {0, math.inf}
        assert all(r.m == 5 and len(r.partition) == 5 for r in bounds)

    def test_records_are_canonically_sorted(self, small_synthetic, small_config):
        records = run_pipeline(small_config, data=small_synthetic, workers=1)
        assert records == sorted(records, key=ResultRecord.sort_key)

    def test_deterministic(self, small_synthetic, small_config):
        first = run_pipeline(small_config, data=small_synthetic, workers=1)
        second = run_pipeline(small_config, data=small_synthetic, workers=1)
        assert [r.without_timing() for r in first] == [r.without_timing() for r in second]

    def test_thread_count_does_not_change_records(self, small_synthetic, small_config):
        single = run_pipeline(small_config, data=small_synthetic, workers=1)
        threaded = run_pipeline(small_config, data=small_synthetic, workers=2)
        assert [r.without_timing() for r in single] == [r.without_timing() for r in threaded]

    def test_full_sample_matches_full_kmeans(self, pairs_data):
        cfg = ExperimentConfig(m_list=(4,), methods=(FULL_KMEANS, UNIFORM), orders=(), repeats=2)
        records = {r.method: r for r in run_pipeline(cfg, data=pairs_data, workers=1)}
        assert records[UNIFORM].full_data_cost == pytest.approx(records[FULL_KMEANS].full_data_cost)
        assert records[FULL_KMEANS].full_data_cost == pytest.approx(1.0)

    def test_mean_report_spread(self, small_synthetic):
        cfg = ExperimentConfig(m_list=(5,), methods=(UNIFORM,), orders=(), repeats=4, report=REPORT_MEAN)
        (record,) = run_pipeline(cfg, data=small_synthetic, workers=1)
        assert record.n_repeats == 4
        assert record.repeat is None
        assert record.cost_min <= record.full_data_cost <= record.cost_max

    def test_bounds_without_coreset_records(self, small_synthetic):
        cfg = ExperimentConfig(m_list=(5,), methods=(UNIFORM,), orders=(0,), order_m=(5,), repeats=2)
        seen = []
        records = run_pipeline(cfg, data=small_synthetic, workers=1, on_record=seen.append)
        assert [r.method for r in records] == [QAOA_BOUND, UNIFORM]
        assert {r.method for r in seen} == {UNIFORM, QAOA_BOUND}

    def test_on_record_sees_every_repeat(self, small_synthetic, small_config):
        seen = []
        run_pipeline(small_config, data=small_synthetic, workers=1, on_record=seen.append)
        assert len([r for r in seen if r.method == CORESET]) == 2 * 2
        assert len([r for r in seen if r.method == FULL_KMEANS]) == 2
        assert len([r for r in seen if r.method == QAOA_BOUND]) == 2

    def test_summary_larger_than_data(self, pairs_data):
        cfg = ExperimentConfig(m_list=(5,), orders=(), repeats=1)
        with pytest.raises(InvalidArgumentError):
            run_pipeline(cfg, data=pairs_data, workers=1)

    def test_coreset_beats_uniform_on_rare_clusters(self, desk_synthetic):
        cfg = ExperimentConfig(
            m_list=(10,), methods=(UNIFORM, CORESET), orders=(), repeats=10, report=REPORT_MEAN, seed=0
        )
        records = {r.method: r for r in run_pipeline(cfg, data=desk_synthetic, workers=1)}
        assert records[CORESET].full_data_cost < records[UNIFORM].full_data_cost

    @pytest.mark.parametrize("source", ["desk", "two_blobs", "imbalanced"])
    def test_full_data_baseline(self, source, desk_synthetic, two_blobs_csv, imbalanced_csv):
        data = {
            "desk": lambda: desk_synthetic,
            "two_blobs": lambda: load_csv(two_blobs_csv),
            "imbalanced": lambda: load_csv(imbalanced_csv, has_header=True),
        }[source]()
        held = 0
        for seed in range(10):
            cfg = ExperimentConfig(m_list=(5, 10), orders=(0, math.inf), order_m=(5,), repeats=2, seed=seed)
            held += baseline_holds(run_pipeline(cfg, data=data, workers=1))
        assert held >= 9


class TestQaoaExperiment:
    """QAOA on the best coreset of separable data."""

    @pytest.fixture
    def record(self, two_blobs_csv):
        cfg = QaoaExperimentConfig(m=5, restarts=10, repeats=3, seed=2)
        return run_qaoa_experiment(cfg, data=load_csv(two_blobs_csv))

    def test_modal_bitstring_is_optimal(self, record):
        assert record.method == QAOA
        assert record.modal_in_argmax
        assert record.argmax_mass > 2 / 32

    def test_gate_counts(self, record):
        assert record.cnot_count == 28
        assert record.cnot_direct == 20

    def test_shots(self, record):
        assert sum(record.histogram.values()) == 8192
        assert all(len(bits) == 5 for bits in record.histogram)

    def test_best_coreset_is_deterministic(self, two_blobs_csv):
        data = load_csv(two_blobs_csv)
        a, cost_a = best_coreset(data, 5, 3, seed=2)
        b, cost_b = best_coreset(data, 5, 3, seed=2)
        assert np.array_equal(a.points, b.points)
        assert cost_a == cost_b

    def test_summary_larger_than_data(self, pairs_data):
        with pytest.raises(InvalidArgumentError):
            run_qaoa_experiment(QaoaExperimentConfig(m=5), data=pairs_data)


class TestOutputs:
    """summary rows, result files and the worker setting."""

    def test_summarize(self):
        records = [
            ResultRecord(method=CORESET, m=5, full_data_cost=10.0, seed=0, cost_min=8.0),
            ResultRecord(method=QAOA_BOUND, m=5, full_data_cost=7.0, seed=0, order=0),
            ResultRecord(method=QAOA_BOUND, m=5, full_data_cost=9.0, seed=0, order=1),
        ]
        rows = {row["order"]: row for row in summarize(records)}
        assert rows["0"]["beats_coreset"] is True
        assert rows["1"]["beats_coreset"] is False
        assert "beats_coreset" not in rows[""]
        assert rows[""]["mean"] == 10.0

    def test_write_results(self, tmp_path, small_synthetic, small_config):
        raw = []
        records = run_pipeline(small_config, data=small_synthetic, workers=1, on_record=raw.append)
        out = write_results(tmp_path / "results", small_config, records, raw)
        with open(out / "summary.csv", newline="") as handle:
            rows = list(csv.DictReader(handle))
        assert tuple(rows[0]) == CSV_COLUMNS
        assert len(rows) == len(records)
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["complete"] is True
        assert manifest["records"] == manifest["expected_records"] == 8
        assert manifest["raw_records"] == len(raw)

    def test_unwritable_directory(self, tmp_path, small_config):
        blocker = tmp_path / "file"
        blocker.write_text("")
        with pytest.raises(OutputError):
            write_results(blocker, small_config, [], [], partial=True)

    def test_default_workers(self, monkeypatch):
        monkeypatch.delenv(WORKERS_ENV, raising=False)
        assert default_workers() == 1
        monkeypatch.setenv(WORKERS_ENV, "3")
        assert default_workers() == 3
        for bad in ("0", "many"):
            monkeypatch.setenv(WORKERS_ENV, bad)
            with pytest.raises(InvalidArgumentError):
                default_workers()
