import sys
from pathlib import Path

import pytest

from rvpp.builder import assemble
from rvpp.io import load_instance
from rvpp.model import BINARY, MilpModel
from rvpp.mps import export_lp, export_mps, fmt_num, lp_text, mps_text, read_mps, short_names
from rvpp.solution import solve_instance
from rvpp.solvers import SolveOptions, solve

FIXTURES = Path(__file__).parent / "fixtures"
sys.path.insert(0, str(FIXTURES))
from regen import fixture_instances, one_var_model  # noqa: E402

GOLDEN = """\
* model onevar: 1 columns, 1 rows
* name map (kind short original)
NAME          onevar
OBJSENSE
    MAX
ROWS
 N  OBJ
 L  cap
COLUMNS
    x         OBJ       3
    x         cap       2
RHS
    RHS       cap       5
RANGES
BOUNDS
 UP BND       x         4
ENDATA
"""


def test_one_variable_golden(tmp_path):
    model = one_var_model()
    assert mps_text(model) == GOLDEN
    assert (FIXTURES / "one_var.mps").read_text() == GOLDEN
    path = export_mps(model, tmp_path / "m.mps")
    assert path.read_bytes() == GOLDEN.encode("ascii")
    back = read_mps(path)
    assert solve(back).objective == pytest.approx(7.5)


def test_short_names_unique_and_bounded():
    names = ["p_da[1]", "pq_r[pv1,10]", "pq_r[pv1,11]", "pq_r[pv1,12]", "x", "pq_r[pv1"]
    short = short_names(names)
    assert len(set(short)) == len(short)
    assert all(len(s) <= 8 for s in short)
    assert short[0] == "p_da[1]" and short[4] == "x"
    assert short[1] != short[2]


def test_long_row_and_column_names_roundtrip(tmp_path):
    m = MilpModel("longnames")
    xs = [m.add_var("a_very_long_symbol", (i,), lb=0, ub=1.0 + i) for i in range(12)]
    for i in range(12):
        m.add_constr("another_long_constraint", (i,), {xs[i]: 1.0, xs[(i + 1) % 12]: 1.0}, "<=", 1.5)
    m.add_objective_terms({x: 1.0 + 0.1 * i for i, x in enumerate(xs)})
    m.freeze()
    text = mps_text(m)
    body = [ln for ln in text.splitlines() if not ln.startswith("*")]
    for ln in body:
        if ln.startswith("    ") and not ln.strip().startswith(("MAX", "RHS")):
            assert len(ln[4:12].strip()) <= 8
    path = export_mps(m, tmp_path / "long.mps")
    back = read_mps(path)
    assert [v.name for v in back.variables] == [v.name for v in m.variables]
    assert solve(back).objective == pytest.approx(solve(m).objective, rel=1e-9)


@pytest.mark.parametrize("v,text", [(3.0, "3"), (-0.5, "-0.5"), (1e-12, "1e-12"), (123456789012.0, "123456789012"),
                                    (0.1 + 0.2, "0.3")])
def test_number_field(v, text):
    got = fmt_num(v)
    assert len(got) <= 12
    assert got == text or float(got) == pytest.approx(v, rel=1e-10)


@pytest.mark.parametrize("name", sorted(fixture_instances()))
def test_fixture_bytes_stable(name):
    inst = fixture_instances()[name]
    assert load_instance(FIXTURES / f"{name}.json").budgets == inst.budgets
    assert mps_text(assemble(inst), name=name) == (FIXTURES / f"{name}.mps").read_text()


@pytest.mark.parametrize("name", sorted(fixture_instances()))
def test_round_trip_optimum(name):
    inst = load_instance(FIXTURES / f"{name}.json")
    _, res, model = solve_instance(inst, SolveOptions())
    assert res.ok
    back = read_mps(FIXTURES / f"{name}.mps")
    assert back.n_vars == model.n_vars and back.n_constrs == model.n_constrs
    again = solve(back, SolveOptions())
    assert again.objective == pytest.approx(res.objective, rel=1e-6, abs=1e-9)


@pytest.mark.parametrize("name", sorted(fixture_instances()))
def test_round_trip_external_reader(name):
    highspy = pytest.importorskip("highspy")
    inst = load_instance(FIXTURES / f"{name}.json")
    _, res, _ = solve_instance(inst, SolveOptions())
    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    h.setOptionValue("mip_rel_gap", 1e-9)
    assert h.readModel(str(FIXTURES / f"{name}.mps")) == highspy.HighsStatus.kOk
    h.run()
    assert h.getInfo().objective_function_value == pytest.approx(res.objective, rel=1e-6, abs=1e-9)


def test_lp_export_mirrors_names(tmp_path):
    model = assemble(fixture_instances()["toy2"])
    text = lp_text(model)
    assert text.startswith("\\") and "Maximize" in text and text.rstrip().endswith("End")
    assert "Binaries" in text
    assert " p_r(r1,1) " in text and "[" not in text
    highspy = pytest.importorskip("highspy")
    path = export_lp(model, tmp_path / "m.lp")
    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    assert h.readModel(str(path)) == highspy.HighsStatus.kOk
    h.run()
    assert h.getInfo().objective_function_value == pytest.approx(solve(model).objective, rel=1e-6)


def test_reader_accepts_free_format_and_ranges(tmp_path):
    text = """NAME test
ROWS
 N obj
 G r1
 E r2
COLUMNS
 M1 'MARKER' 'INTORG'
 y obj -1 r1 1
 M2 'MARKER' 'INTEND'
 x obj -2 r1 1
 x r2 1
RHS
 rhs r1 1 r2 3
RANGES
 rng r2 -2
BOUNDS
 UP bnd y 1
 UP bnd x 10
ENDATA
"""
    path = tmp_path / "free.mps"
    path.write_text(text)
    m = read_mps(path, restore_names=False)
    # minimize -y - 2x with 1 <= x <= 3 from the range on r2
    assert solve(m).objective == pytest.approx(1 + 6)
    assert sum(v.kind == BINARY for v in m.variables) == 1
