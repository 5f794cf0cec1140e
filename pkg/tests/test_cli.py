import json
import shutil
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from aperture_lab.cli import main
from aperture_lab.config import ConfigError, load_config
from aperture_lab.runs import RUNNERS, RunReport, run_record
from aperture_lab.serialization import dumps, loads, matrix_from_json, matrix_to_json

TESTS_DIR = Path(__file__).parent
FAST = {
    "search": {"max_disc": 64, "max_summands": 6},
    "boundary": {"invariance_trials": 50, "noncentral_projections": 5},
    "record": {},
    "bell": {"scan_configs": 500, "channels": 5, "states_per_channel": 4},
    "trace": {"tests_dir": str(TESTS_DIR)},
}


def run_cli(tmp_path, command, config=None, *extra):
    args = [command]
    if config is not None:
        path = tmp_path / f"{command}.json"
        path.write_text(json.dumps(config))
        args += ["--config", str(path)]
    out = tmp_path / f"{command}.out"
    code = main(args + ["--out", str(out), *extra])
    return code, out.read_text() if out.exists() else None


def test_default_search_report(tmp_path, capsys):
    code, text = run_cli(tmp_path, "search", None, "--check")
    assert code == 0
    report = json.loads(text)
    assert report["schema_version"] == 1
    assert report["results"]["certificate"]["minimal_solution"] == "M1(C) + M3(C) + M1(H)"
    assert "[PASS] search" in capsys.readouterr().err


def test_small_search_is_empty_and_fails_check(tmp_path, capsys):
    code, text = run_cli(tmp_path, "search", {"max_disc": 10}, "--check")
    assert code == 1
    assert json.loads(text)["results"]["certificate"]["solutions"] == []
    assert "[FAIL]" in capsys.readouterr().err
    code, _ = run_cli(tmp_path, "search", {"max_disc": 10})
    assert code == 0


def test_malformed_config_reports_field_path(tmp_path, capsys):
    code, _ = run_cli(tmp_path, "search", {"max_disc": "lots"})
    assert code == 2
    assert "max_disc" in capsys.readouterr().err
    code, _ = run_cli(tmp_path, "record", {"unitaries": [{"kind": "sector_swap", "sectors": [1]}]})
    assert code == 2
    assert "unitaries.0" in capsys.readouterr().err
    code, _ = run_cli(tmp_path, "bell", {"bogus": 1})
    assert code == 2
    assert "bogus" in capsys.readouterr().err
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["search", "--config", str(bad)]) == 2
    with pytest.raises(ConfigError):
        load_config("boundary", {"schema_version": 2})


def test_operation_error_exit_code(tmp_path, capsys):
    # no integer H_b for n_b = 2
    code, _ = run_cli(tmp_path, "boundary", {"n_b": 2, **FAST["boundary"]})
    assert code == 2
    assert "error" in capsys.readouterr().err
    assert main(["search", "--seed", str(2**64)]) == 2


def test_boundary_report(tmp_path):
    code, text = run_cli(tmp_path, "boundary", FAST["boundary"], "--check")
    assert code == 0
    r = json.loads(text)["results"]
    assert r["boundary_profile"]["H_b"] == 12 and r["boundary_profile"]["xi"] == "1/4"
    by_sectors = {tuple(c["sectors"]): c["invariant"] for c in r["context_free_central"]}
    assert by_sectors[(0, 2)]
    assert all(not c["invariant"] for c in r["context_free_noncentral"])


def test_record_identity_is_markovian(tmp_path):
    cfg = {"unitaries": [{"kind": "identity"}], "steps": 3}
    code, text = run_cli(tmp_path, "record", cfg, "--check")
    assert code == 0
    r = json.loads(text)["results"]
    assert r["markov"]["markovian"] and r["witness"] is None


def test_record_sample_mode_within_binomial_bounds():
    exact = run_record(load_config("record", {"seed": 2})).results
    sampled = run_record(load_config("record", {"seed": 2, "mode": "sample"})).results
    n = sampled["num_samples"]
    assert n == 100_000
    freq = {row["history"]: row["frequency"] for row in sampled["frequencies"]}
    for row in exact["distribution"]:
        p = row["probability"]
        assert abs(freq.get(row["history"], 0.0) - p) <= 3 * np.sqrt(max(p * (1 - p), 1e-12) / n) + 1e-12
    assert sampled["max_z"] <= 3


def test_matrix_unitary_in_config(tmp_path):
    h = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    cfg = {
        "sector_dims": [1, 1],
        "steps": 3,
        "unitaries": [{"kind": "matrix", "matrix": matrix_to_json(h)}],
        "initial_state": {"kind": "pure_sector", "sector": 0},
    }
    code, text = run_cli(tmp_path, "record", cfg)
    assert code == 0
    dist = {row["history"]: row["probability"] for row in json.loads(text)["results"]["distribution"]}
    assert all(abs(p - 1 / 8) < 1e-12 for p in dist.values())


def test_bell_report(tmp_path):
    code, text = run_cli(tmp_path, "bell", FAST["bell"], "--check")
    assert code == 0
    r = json.loads(text)["results"]
    assert abs(r["chsh_canonical"] - 2 * np.sqrt(2)) < 1e-12
    assert abs(r["interference"]["balanced"]["deviation"] - 0.5) < 1e-12
    assert r["interference"]["diagonal_max_deviation"] <= 1e-15


@pytest.mark.parametrize("command", sorted(RUNNERS))
def test_payload_is_reproducible(command):
    cfg = load_config(command, {**FAST[command], "seed": 5})
    a, b = RUNNERS[command](cfg), RUNNERS[command](cfg)
    assert a.payload_json() == b.payload_json()


@pytest.mark.parametrize("command", sorted(RUNNERS))
def test_report_round_trip(command):
    report = RUNNERS[command](load_config(command, FAST[command]))
    text = dumps(report.to_dict())
    again = RunReport.from_dict(loads(text))
    assert dumps(again.to_dict()) == text
    assert again.payload_json() == report.payload_json()


def test_seed_flag_overrides_config(tmp_path):
    _, a = run_cli(tmp_path, "record", {"seed": 1}, "--seed", "9")
    _, b = run_cli(tmp_path, "record", {"seed": 9})
    assert json.loads(a)["results"] == json.loads(b)["results"]
    assert json.loads(a)["seed"] == 9


def test_csv_output(tmp_path):
    code, text = run_cli(tmp_path, "record", {}, "--format", "csv")
    assert code == 0
    lines = text.strip().splitlines()
    assert lines[0].startswith("history")
    assert len(lines) == 1 + 27
    code, text = run_cli(tmp_path, "search", FAST["search"], "--format", "csv")
    assert code == 0 and "," in text.splitlines()[0]


def test_trace_lists_claims_and_flags_missing(tmp_path):
    code, text = run_cli(tmp_path, "trace", FAST["trace"], "--check")
    assert code == 0
    rows = json.loads(text)["results"]["rows"]
    assert rows and all(r["status"] != "missing" for r in rows)
    # drop one test function from a copy of the tests
    copy = tmp_path / "tests"
    copy.mkdir()
    for f in TESTS_DIR.glob("test_*.py"):
        shutil.copy(f, copy / f.name)
    src = (copy / "test_bell.py").read_text().replace("def test_canonical_chsh(", "def _removed(")
    (copy / "test_bell.py").write_text(src)
    code, text = run_cli(tmp_path, "trace", {"tests_dir": str(copy)}, "--check")
    assert code == 1
    missing = json.loads(text)["results"]["missing"]
    assert any("CHSH" in claim for claim in missing)


def test_trace_reads_junit(tmp_path):
    junit = tmp_path / "junit.xml"
    junit.write_text(
        '<testsuite><testcase classname="tests.test_bell" name="test_canonical_chsh">'
        "<failure/></testcase></testsuite>"
    )
    _, text = run_cli(tmp_path, "trace", {"tests_dir": str(TESTS_DIR), "junit_path": str(junit)})
    rows = {r["claim"]: r["status"] for r in json.loads(text)["results"]["rows"]}
    assert rows["CHSH value reaches 2 sqrt2 and never exceeds it"] == "failed"


def test_matrix_exchange_round_trip():
    rng = np.random.default_rng(0)
    m = rng.normal(size=(3, 4)) + 1j * rng.normal(size=(3, 4))
    obj = matrix_to_json(m)
    assert obj["shape"] == [3, 4] and len(obj["data"]) == 12
    back = matrix_from_json(loads(dumps(obj)))
    assert np.array_equal(back, m)
    with pytest.raises(ValueError):
        matrix_from_json({"shape": [2, 2], "data": [[1, 0]]})


def test_float_serialization_is_exact():
    xs = [0.1, 1 / 3, 2 * np.sqrt(2), 1e-300, -0.0]
    assert loads(dumps(xs)) == xs


def test_console_script_entry_point(tmp_path):
    out = tmp_path / "bell.json"
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps(FAST["bell"]))
    proc = subprocess.run(
        [sys.executable, "-m", "aperture_lab.cli", "bell", "--config", str(cfg), "--out", str(out), "--check"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert json.loads(out.read_text())["command"] == "bell"
