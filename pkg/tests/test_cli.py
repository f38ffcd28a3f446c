import csv
import json

import numpy as np
import pytest

from rvpp.cli import EXIT_FAILED, EXIT_INPUT, EXIT_OK, InputError, main, parse_budgets, parse_unit_map
from rvpp.io import save_instance
from rvpp.synthetic import random_instance


@pytest.fixture(scope="module")
def nine_periods(tmp_path_factory):
    path = tmp_path_factory.mktemp("inst") / "t9.json"
    save_instance(random_instance(np.random.default_rng(11), 9, 1, 0, budgets="zero"), path)
    return path


def test_parse_budgets():
    assert parse_budgets("0..3") == (0, 1, 2, 3)
    assert parse_budgets("0,2,5") == (0, 2, 5)
    for bad in ("3..1", "a", "-1"):
        with pytest.raises(InputError):
            parse_budgets(bad)


def test_parse_unit_map():
    assert parse_unit_map("pv1=2,wind=3") == {"pv1": 2, "wind": 3}
    with pytest.raises(InputError):
        parse_unit_map("pv1")


def test_solve_toy(tmp_path):
    assert main(["solve", "--instance", "toy", "--out", str(tmp_path)]) == EXIT_OK
    sol = json.loads((tmp_path / "solution.json").read_text())
    assert sol["objective"] == pytest.approx(450.0)
    assert sol["decomposition"]["dam"] == pytest.approx(500.0)
    assert sol["decomposition"]["ndres_cost"] == pytest.approx(50.0)
    assert "objective" in (tmp_path / "report.txt").read_text()
    rows = list(csv.reader((tmp_path / "series.csv").open()))
    assert len(rows) == 2


def test_solve_bit_reproducible(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert main(["solve", "--instance", "illustrative", "--out", str(out)]) == EXIT_OK
    for name in ("solution.json", "series.csv", "report.txt"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_certify_pass(tmp_path):
    assert main(["certify", "--instance", "toy2", "--out", str(tmp_path)]) == EXIT_OK
    cert = json.loads((tmp_path / "certification.json").read_text())
    assert cert["passed"] and cert["oracle_value"] == pytest.approx(668.6)
    assert "PASS" in (tmp_path / "report.txt").read_text()


def test_budget_overrides(tmp_path):
    assert main(["solve", "--instance", "toy2", "--out", str(tmp_path), "--gamma-dam", "0",
                 "--gamma-sr-up", "0", "--gamma-ndres", "r1=0"]) == EXIT_OK
    sol = json.loads((tmp_path / "solution.json").read_text())
    assert sol["flags"]["dam"] == [0, 0] and sol["flags"]["ndres"]["r1"] == [0, 0]


def test_sweep_twenty_rows(tmp_path, nine_periods):
    args = ["sweep", "--instance", str(nine_periods), "--budgets", "0..9", "--scenarios", "10", "--seed", "4"]
    assert main(args + ["--out", str(tmp_path / "a")]) == EXIT_OK
    rows = list(csv.reader((tmp_path / "a" / "sweep.csv").open()))
    assert rows[0] == ["budget", "method", "pi_av", "k_av", "net"]
    assert len(rows) == 21
    assert rows[1][2:] == rows[2][2:]
    assert main(args + ["--out", str(tmp_path / "b")]) == EXIT_OK
    assert (tmp_path / "a" / "sweep.csv").read_bytes() == (tmp_path / "b" / "sweep.csv").read_bytes()


def test_assess(tmp_path):
    assert main(["assess", "--instance", "toy2", "--out", str(tmp_path), "--scenarios", "5"]) == EXIT_OK
    out = json.loads((tmp_path / "assessment.json").read_text())
    for method in ("profit_robust", "energy_robust"):
        assert out[method]["net"] == pytest.approx(out[method]["pi_av"] - out[method]["k_av"])


def test_baseline_and_export(tmp_path):
    assert main(["baseline", "--instance", "illustrative", "--out", str(tmp_path)]) == EXIT_OK
    assert "energy-robust" in (tmp_path / "report.txt").read_text()
    assert main(["export-mps", "--instance", "toy2", "--out", str(tmp_path)]) == EXIT_OK
    assert (tmp_path / "model.mps").read_text().rstrip().endswith("ENDATA")


@pytest.mark.parametrize("args", [
    ["solve", "--instance", "nowhere.json"],
    ["solve", "--instance", "toy2", "--gamma-dam", "7"],
    ["solve", "--instance", "toy2", "--gamma-ndres", "ghost=1"],
    ["solve", "--instance", "toy", "--rel-gap", "0"],
    ["sweep", "--instance", "toy2", "--budgets", "0..5"],
    ["levitate", "--instance", "toy"],
    ["solve"],
])
def test_bad_input_exit_code(tmp_path, args):
    assert main(args + ["--out", str(tmp_path)]) == EXIT_INPUT


def test_bad_json_exit_code(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"periods": 2}')
    assert main(["solve", "--instance", str(bad), "--out", str(tmp_path)]) == EXIT_INPUT


def test_unknown_backend_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("RVPP_SOLVER", "gurobi")
    assert main(["solve", "--instance", "toy", "--out", str(tmp_path)]) == EXIT_INPUT


def test_failed_solve_exit_code(tmp_path, monkeypatch):
    import rvpp.cli as cli
    from rvpp.solvers import INFEASIBLE, SolveResult

    dead = SolveResult(INFEASIBLE, float("nan"), None, 0.0, "highs")
    monkeypatch.setattr(cli, "_solve", lambda inst, cfg: (None, dead, None))
    assert main(["solve", "--instance", "toy", "--out", str(tmp_path)]) == EXIT_FAILED
    assert "infeasible" in (tmp_path / "report.txt").read_text()
    assert main(["certify", "--instance", "toy", "--out", str(tmp_path)]) == EXIT_FAILED
