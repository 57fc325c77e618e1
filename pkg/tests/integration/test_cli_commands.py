"""
Integration tests for the coreset-qaoa command line.

Each test drives the CLI as a subprocess and checks exit codes and the files
or JSON it produces:
- data gen / data validate
- coreset build, cluster run, ham build, solve
- qaoa run and circuit compile
- bench run / bench qaoa
"""

import csv
import json

import pytest

from cli_test_framework import CliWorkspace

EXIT_INVALID = 2
EXIT_INPUT = 65
EXIT_OUTPUT = 67


@pytest.fixture
def ws():
    with CliWorkspace() as workspace:
        yield workspace


@pytest.fixture
def blobs(ws):
    return str(ws.fixture("two_blobs.csv"))


@pytest.fixture
def coreset_json(ws, blobs):
    rc, _, stderr = ws.run("coreset", "build", "--data", blobs, "--m", "5", "--seed", "1", "--out", "c.json")
    assert rc == 0, stderr
    return "c.json"


@pytest.fixture
def ham_json(ws, coreset_json):
    rc, _, stderr = ws.run("ham", "build", "--coreset", coreset_json, "--order", "0", "--out", "h.json")
    assert rc == 0, stderr
    return "h.json"


def summary_rows(ws, out_dir):
    with open(ws.path(f"{out_dir}/summary.csv"), newline="") as handle:
        return [{k: v for k, v in row.items() if k != "wall_time"} for row in csv.DictReader(handle)]


def swap_network_cnots(m, p=1):
    return (3 * m * (m - 1) // 2 - m // 2) * p


class TestGeneral:
    def test_version(self, ws):
        rc, stdout, _ = ws.run("--version")
        assert rc == 0
        assert "0.1.0" in stdout

    def test_missing_command(self, ws):
        rc, _, stderr = ws.run("coreset")
        assert rc == EXIT_INVALID
        assert "usage" in stderr

    def test_unknown_option(self, ws, blobs):
        rc, _, _ = ws.run("coreset", "build", "--data", blobs, "--m", "5", "--colour", "red")
        assert rc == EXIT_INVALID


class TestData:
    """data gen and data validate."""

    def test_generate_and_validate(self, ws):
        rc, _, stderr = ws.run(
            "data", "gen", "--n", "300", "--dim", "3", "--n-rare", "2", "--per-rare", "5", "--out", "gen.csv"
        )
        assert rc == 0, stderr
        rc, stdout, stderr = ws.run("data", "validate", "gen.csv")
        assert rc == 0, stderr
        summary = json.loads(stdout)
        assert (summary["n"], summary["dim"]) == (300, 3)

    def test_generation_is_deterministic(self, ws):
        for name in ("a.csv", "b.csv"):
            rc, _, stderr = ws.run("data", "gen", "--n", "120", "--dim", "2", "--seed", "9", "--out", name)
            assert rc == 0, stderr
        assert ws.path("a.csv").read_text() == ws.path("b.csv").read_text()

    def test_header_fixture(self, ws):
        rc, stdout, _ = ws.run("data", "validate", str(ws.fixture("imbalanced_3d.csv")), "--header")
        assert rc == 0
        assert json.loads(stdout)["dim"] == 3

    def test_ragged_file(self, ws):
        ws.path("bad.csv").write_text("1,2\n3\n")
        rc, _, stderr = ws.run("data", "validate", "bad.csv")
        assert rc == EXIT_INPUT
        assert "error:" in stderr

    def test_missing_file(self, ws):
        rc, _, _ = ws.run("data", "validate", "nowhere.csv")
        assert rc == EXIT_INPUT

    def test_non_numeric_cell(self, ws):
        ws.path("words.csv").write_text("1,2\nthree,4\n")
        rc, _, _ = ws.run("data", "validate", "words.csv")
        assert rc == EXIT_INPUT

    def test_invalid_utf8(self, ws):
        ws.path("latin.csv").write_bytes(b"1,2\n\xff\xfe,3\n")
        rc, _, stderr = ws.run("data", "validate", "latin.csv")
        assert rc == EXIT_INPUT
        assert "UTF-8" in stderr
        assert "Traceback" not in stderr


class TestSummaries:
    """coreset build and cluster run."""

    def test_coreset_document(self, ws, coreset_json):
        document = ws.read_json(coreset_json)
        assert len(document["points"]) == len(document["weights"]) == 5
        assert document["source_n"] == 30

    def test_uniform_to_stdout(self, ws, blobs):
        rc, stdout, _ = ws.run("coreset", "build", "--data", blobs, "--m", "6", "--method", "uniform")
        assert rc == 0
        document = json.loads(stdout)
        assert document["weights"] == [5.0] * 6

    def test_sample_larger_than_data(self, ws, blobs):
        rc, _, stderr = ws.run("coreset", "build", "--data", blobs, "--m", "31", "--method", "uniform")
        assert rc == EXIT_INVALID
        assert "error:" in stderr

    def test_unwritable_output(self, ws, blobs):
        rc, _, _ = ws.run("coreset", "build", "--data", blobs, "--m", "5", "--out", "missing/dir/c.json")
        assert rc == EXIT_OUTPUT

    def test_cluster_coreset_scored_on_data(self, ws, blobs, coreset_json):
        rc, stdout, stderr = ws.run("cluster", "run", "--data", blobs, "--coreset", coreset_json, "--trials", "3")
        assert rc == 0, stderr
        document = json.loads(stdout)
        assert document["full_cost"] >= 0
        assert len(document["centers"]["mu_minus"]) == 2

    def test_cluster_needs_input(self, ws):
        rc, _, _ = ws.run("cluster", "run")
        assert rc == EXIT_INVALID


class TestSolve:
    """ham build and brute-force solve."""

    def test_polynomial_document(self, ws, ham_json):
        document = ws.read_json(ham_json)
        assert document["m"] == 5
        assert all(len(term["support"]) == 2 for term in document["terms"])

    def test_higher_orders_are_not_polynomials(self, ws, coreset_json):
        rc, _, _ = ws.run("ham", "build", "--coreset", coreset_json, "--order", "2")
        assert rc == EXIT_INVALID

    def test_solve_polynomial(self, ws, ham_json):
        rc, stdout, _ = ws.run("solve", "--ham", ham_json)
        assert rc == 0
        document = json.loads(stdout)
        assert document["maximizers"]
        assert all(len(bits) == 5 for bits in document["maximizers"])

    @pytest.mark.parametrize("order", ["0", "1", "2", "inf"])
    def test_solve_with_bound(self, ws, blobs, coreset_json, order):
        rc, _, stderr = ws.run(
            "solve", "--coreset", coreset_json, "--order", order, "--data", blobs, "--out", "s.json"
        )
        assert rc == 0, stderr
        document = ws.read_json("s.json")
        assert document["order"] == order
        assert document["bound"]["partition"] in document["maximizers"]
        assert document["bound"]["full_cost"] >= 0

    def test_malformed_coreset(self, ws):
        ws.write_json("broken.json", {"points": [[0.0]]})
        rc, _, _ = ws.run("solve", "--coreset", "broken.json")
        assert rc == EXIT_INPUT


class TestQaoaAndCircuit:
    """qaoa run feeding circuit compile."""

    @pytest.fixture
    def qaoa_json(self, ws, ham_json):
        rc, _, stderr = ws.run("qaoa", "run", "--ham", ham_json, "--restarts", "5", "--seed", "2", "--out", "q.json")
        assert rc == 0, stderr
        return "q.json"

    def test_qaoa_result(self, ws, qaoa_json):
        document = ws.read_json(qaoa_json)
        assert sum(document["histogram"].values()) == 8192
        assert document["params"]["p"] == 1
        assert 0.0 <= document["argmax_mass"] <= 1.0
        assert len(document["modal"]) == 5

    def test_qaoa_is_reproducible(self, ws, ham_json):
        outputs = [ws.run("qaoa", "run", "--ham", ham_json, "--restarts", "3", "--seed", "4")[1] for _ in range(2)]
        assert outputs[0] == outputs[1]

    def test_compile_and_verify(self, ws, ham_json, qaoa_json):
        rc, _, stderr = ws.run(
            "circuit", "compile", "--ham", ham_json, "--params", qaoa_json,
            "--out", "c.qasm", "--counts", "counts.json", "--verify",
        )
        assert rc == 0, stderr
        qasm = ws.path("c.qasm").read_text().splitlines()
        assert qasm[0] == "OPENQASM 2.0;"
        counts = ws.read_json("counts.json")
        assert counts["cnot"] == swap_network_cnots(5) == 28
        assert sorted(counts["final_bit_permutation"]) == list(range(5))
        assert counts["max_amplitude_error"] < 1e-9

    def test_direct_compilation(self, ws, ham_json, qaoa_json):
        rc, stdout, _ = ws.run(
            "circuit", "compile", "--ham", ham_json, "--params", qaoa_json, "--direct", "--counts", "counts.json"
        )
        assert rc == 0
        assert stdout.startswith("OPENQASM 2.0;")
        assert ws.read_json("counts.json")["cnot"] == 20

    def test_plain_params_file(self, ws, ham_json):
        ws.write_json("params.json", {"gammas": [0.1, 0.2], "betas": [0.3, 0.4]})
        rc, _, _ = ws.run("circuit", "compile", "--ham", ham_json, "--params", "params.json",
                          "--counts", "counts.json")
        assert rc == 0
        assert ws.read_json("counts.json")["cnot"] == swap_network_cnots(5, 2)

    def test_mismatched_params(self, ws, ham_json):
        ws.write_json("params.json", {"p": 2, "gammas": [0.1], "betas": [0.3]})
        rc, _, _ = ws.run("circuit", "compile", "--ham", ham_json, "--params", "params.json")
        assert rc == EXIT_INPUT


class TestBench:
    """bench run and bench qaoa with small configurations."""

    @pytest.fixture
    def config(self, ws, blobs):
        return {
            "data": {"csv": blobs},
            "m_list": [5, 8],
            "orders": ["0", "inf"],
            "order_m": [5],
            "repeats": 2,
            "seed": 3,
        }

    def test_run_writes_results(self, ws, config):
        ws.write_json("config.json", config)
        rc, _, stderr = ws.run("bench", "run", "--config", "config.json", "--out", "results")
        assert rc == 0, stderr
        manifest = ws.read_json("results/manifest.json")
        assert manifest["complete"] is True
        assert manifest["records"] == manifest["expected_records"] == 3 * 2 + 2
        header = ws.path("results/summary.csv").read_text().splitlines()[0]
        assert header.startswith("method,m,order,repeat,full_data_cost")
        assert ws.path("results/records.csv").exists()

    def test_workers_give_same_summary(self, ws, config, monkeypatch):
        ws.write_json("config.json", config)
        assert ws.run("bench", "run", "--config", "config.json", "--out", "one", "--workers", "1")[0] == 0
        monkeypatch.setenv("CORESET_QAOA_WORKERS", "2")
        assert ws.run("bench", "run", "--config", "config.json", "--out", "two")[0] == 0
        assert summary_rows(ws, "one") == summary_rows(ws, "two")

    def test_bad_worker_setting(self, ws, config, monkeypatch):
        ws.write_json("config.json", config)
        monkeypatch.setenv("CORESET_QAOA_WORKERS", "lots")
        rc, _, _ = ws.run("bench", "run", "--config", "config.json", "--out", "results")
        assert rc == EXIT_INVALID

    def test_unknown_config_field(self, ws, config):
        config["colour"] = "red"
        ws.write_json("config.json", config)
        rc, _, stderr = ws.run("bench", "run", "--config", "config.json", "--out", "results")
        assert rc == EXIT_INPUT
        assert "colour" in stderr

    def test_summary_larger_than_data(self, ws, config):
        config["m_list"] = [40]
        ws.write_json("config.json", config)
        rc, _, _ = ws.run("bench", "run", "--config", "config.json", "--out", "results")
        assert rc == EXIT_INVALID
        assert not ws.path("results").exists()

    def test_qaoa_experiment(self, ws, blobs):
        ws.write_json("qaoa.json", {"data": {"csv": blobs}, "m": 5, "restarts": 5, "repeats": 2, "shots": 1000})
        rc, stdout, stderr = ws.run("bench", "qaoa", "--config", "qaoa.json")
        assert rc == 0, stderr
        record = json.loads(stdout)["record"]
        assert record["method"] == "qaoa"
        assert record["cnot_count"] == 28
        assert record["cnot_direct"] == 20
        assert sum(record["histogram"].values()) == 1000
