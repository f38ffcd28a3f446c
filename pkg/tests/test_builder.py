import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import Bounds, LinearConstraint, milp

from rvpp.builder import assemble, expected_census
from rvpp.diagnostics import budget_counts, linearization_residuals, selection_checks
from rvpp.instance import BigMConfig, DemandProfile, DemandUnit, UncertaintyBudgets
from rvpp.oracle import deterministic_optimum
from rvpp.solution import solve_instance
from rvpp.solvers import OPTIMAL, SolveOptions
from rvpp.solvers.lp import solve_lp
from rvpp.synthetic import market_day_instance, random_instance, toy_instance

from conftest import flat_demand, make_instance, make_prices, unit

OPTS = SolveOptions()


def solved(inst):
    sol, res, model = solve_instance(inst, OPTS)
    assert res.status == OPTIMAL, res.message
    return sol, res, model


def extreme(model, coefs, fixes, sense=1.0):
    """max (sense=1) or min (sense=-1) of a linear form over the MILP with some variables fixed."""
    arr = model.to_arrays()
    lb, ub = arr.lb.copy(), arr.ub.copy()
    for i, v in fixes.items():
        lb[i] = ub[i] = v
    c = np.zeros(model.n_vars)
    for i, v in coefs.items():
        c[i] = v
    res = milp(-sense * c, constraints=LinearConstraint(arr.A, arr.row_lo, arr.row_hi),
               bounds=Bounds(lb, ub), integrality=arr.integrality)
    assert res.status == 0, res.message
    return sense * -res.fun


# -------------------------------------------------------------- objective


def test_zero_budget_single_period_hand_value():
    sol, res, _ = solved(toy_instance())
    assert res.objective == pytest.approx(10 * (50 - 5))
    assert sol.p_da[0] == pytest.approx(10.0)


def test_null_prices_and_costs_give_zero():
    inst = make_instance([unit("a", [4.0, 5.0], [1.0, 1.0], 6.0)], make_prices(2, 0.0),
                         budgets=UncertaintyBudgets(gamma_ndres={"a": 1}))
    assert solved(inst)[1].objective == pytest.approx(0.0, abs=1e-6)


# ---------------------------------------------------------- price blocks


def test_zero_dam_budget_keeps_median_prices():
    inst = make_instance([unit("a", [4.0, 5.0], [1.0, 1.0], 6.0)], make_prices(2, 30.0, 5.0, 5.0), kappa=0.0)
    sol, res, model = solved(inst)
    assert sol.flags.dam == (0, 0)
    assert all(abs(model.value(res.x, s, t)) < 1e-9 for s in ("y_da", "yp_da") for t in (1, 2))
    assert res.objective == pytest.approx(30 * 9)


def test_dam_seller_selects_largest_reduction():
    inst = make_instance([unit("a", [10.0, 2.0], p_max=12)], make_prices(2, 50.0, 10.0, 0.0), kappa=0.0,
                         budgets=UncertaintyBudgets(gamma_dam=1))
    sol, res, _ = solved(inst)
    assert sol.p_da.tolist() == pytest.approx([10.0, 2.0])
    assert sol.flags.dam == (-1, 0)
    # 50 x 12 minus the 10 x 10 reduction of period 1
    assert res.objective == pytest.approx(600.0 - 100.0, rel=1e-5)


def test_dam_buyer_selects_positive_deviation():
    inst = make_instance([], make_prices(2, 50.0, 10.0, 10.0), demands=[flat_demand(2, 5.0)],
                         budgets=UncertaintyBudgets(gamma_dam=1))
    sol, res, _ = solved(inst)
    assert sol.p_da.tolist() == pytest.approx([-5.0, -5.0])
    assert sorted(sol.flags.dam) == [0, 1]
    assert res.objective == pytest.approx(-(50 * 5 + 60 * 5), rel=1e-5)


def sr_instance(gamma, r_cap=(10.0, 2.0, 2.0)):
    # reserve pair limited to half the median: r_up = (5, 1, 1)
    return make_instance([unit("a", r_cap, p_max=10)], make_prices(3, 0.0, su=10.0, su_neg=2.0), kappa=1.0,
                         budgets=UncertaintyBudgets(gamma_sr_up=gamma))


def test_srm_zero_budget_leaves_no_reduction():
    sol, res, model = solved(sr_instance(0))
    assert all(abs(model.value(res.x, "y_su", t)) < 1e-9 for t in (1, 2, 3))
    assert res.objective == pytest.approx(70.0)


def test_srm_selects_largest_reserve():
    sol, res, _ = solved(sr_instance(1))
    assert sol.r_up.tolist() == pytest.approx([5.0, 1.0, 1.0])
    assert sol.flags.sr_up == (1, 0, 0)
    assert res.objective == pytest.approx(70.0 - 10.0, rel=1e-5)


def test_srm_symmetric_periods_any_selection_same_value():
    sol, res, _ = solved(sr_instance(1, (4.0, 4.0, 4.0)))
    assert sum(sol.flags.sr_up) == 1
    assert res.objective == pytest.approx(3 * 10 * 2 - 2 * 2, rel=1e-5)


# --------------------------------------------------------------- balance


def test_balance_net_position():
    inst = make_instance([unit("a", [10.0], p_max=10)], make_prices(1, 40.0), demands=[flat_demand(1, 4.0)],
                         kappa=0.0)
    sol, _, _ = solved(inst)
    assert sol.p_da[0] == pytest.approx(6.0)


def test_reserve_ratio_literal():
    inst = make_instance([unit("a", [12.0], p_max=12)], make_prices(1, 0.0, sd=10.0), rho=0.5, kappa=1.0)
    sol, _, _ = solved(inst)
    assert sol.r_dn[0] == pytest.approx(8.0)
    assert sol.r_up[0] == pytest.approx(4.0)


def test_up_reserve_cap_binds():
    inst = make_instance([unit("a", [40.0], p_max=50), unit("b", [40.0], p_max=50)],
                         make_prices(1, 1.0, su=100.0, sd=100.0), kappa=0.1)
    sol, _, _ = solved(inst)
    assert sol.r_up[0] == pytest.approx(10.0)


# ---------------------------------------------------------- renewables


def test_zero_energy_budget_pins_production():
    inst = make_instance([unit("a", [7.0, 9.0], [2.0, 3.0], 10)], make_prices(2, 20.0), kappa=0.0)
    sol, _, _ = solved(inst)
    d = sol.ndres_dispatch["a"]
    assert (d["p"] + d["r_up"]).tolist() == pytest.approx([7.0, 9.0])


def test_renewable_worst_period_is_price_weighted():
    inst = make_instance([unit("a", [10.0, 10.0], [5.0, 4.0], 10)], make_prices(2, [10.0, 60.0]), kappa=0.0,
                         budgets=UncertaintyBudgets(gamma_ndres={"a": 1}))
    sol, res, _ = solved(inst)
    # period 2 loses 60 x 4 = 240, period 1 only 10 x 5 = 50
    assert sol.flags.ndres["a"] == (0, 1)
    assert res.objective == pytest.approx(100 + 360, rel=1e-5)


def test_null_energy_deviation_leaves_objective():
    base = make_instance([unit("a", [10.0, 10.0], p_max=10)], make_prices(2, [10.0, 60.0]), kappa=0.0)
    one = base.with_budgets(UncertaintyBudgets(gamma_ndres={"a": 1}))
    assert solved(one)[1].objective == pytest.approx(solved(base)[1].objective, rel=1e-5)


def _lin_instance():
    profs = (DemandProfile("p1", [2.0, 2.5], [0.5, 0.4], 0.0), DemandProfile("p2", [2.5, 2.0], [0.3, 0.6], 1.0))
    dem = DemandUnit("d1", profs, 0.0, 4.0, [0.1] * 2, [0.1] * 2, 10.0, 10.0, 1.0, 1.0)
    return make_instance([unit("a", [6.0, 8.0], [1.0, 2.0], 10)], make_prices(2, 30.0, 3.0, 3.0, 5.0, 1.0, 2.0, 0.5),
                         demands=[dem], kappa=0.5,
                         budgets=UncertaintyBudgets(1, 1, 0, {"a": 1}, {"d1": 1}))


@pytest.mark.parametrize("chi", [0, 1])
def test_renewable_products_forced_by_gate(chi):
    model = assemble(_lin_instance())
    g = model.var("chi_da", 1)
    tot = {model.var("pq_r", "a", 1): 1.0, model.var("p_r", "a", 1): -chi, model.var("rup_r", "a", 1): -chi}
    alt = {model.var("pa_r", "a", 1): 1.0, model.var("p_r", "a", 1): chi - 1, model.var("rup_r", "a", 1): chi - 1}
    for form in (tot, alt):
        assert extreme(model, form, {g: chi}, 1.0) == pytest.approx(0.0, abs=1e-7)
        assert extreme(model, form, {g: chi}, -1.0) == pytest.approx(0.0, abs=1e-7)


# --------------------------------------------------------------- demand


def test_single_profile_zero_budget_follows_median():
    inst = make_instance([unit("a", [9.0, 9.0], p_max=10)], make_prices(2, 20.0),
                         demands=[flat_demand(2, 3.0, 1.0)], kappa=0.0)
    sol, _, _ = solved(inst)
    assert sol.demand_dispatch["d1"]["p"].tolist() == pytest.approx([3.0, 3.0])


def test_costlier_identical_profile_not_chosen():
    shape = [3.0, 4.0]
    profs = (DemandProfile("cheap", shape, [0.0, 0.0], 0.0), DemandProfile("dear", shape, [0.0, 0.0], 100.0))
    dem = DemandUnit("d1", profs, 0.0, 6.0, [0.0, 0.0], [0.0, 0.0], 10.0, 10.0, 0.0, 0.0)
    inst = make_instance([], make_prices(2, 20.0), demands=[dem], kappa=0.0)
    sol, res, _ = solved(inst)
    assert sol.profile == {"d1": "cheap"}
    assert res.objective == pytest.approx(-20 * 7)


def test_demand_worst_period_is_price_weighted():
    inst = make_instance([], make_prices(2, [10.0, 60.0]), demands=[DemandUnit(
        "d1", (DemandProfile("p1", [5.0, 5.0], [5.0, 2.0]),), 0.0, 11.0, [0.0] * 2, [0.0] * 2, 20.0, 20.0, 0.0, 0.0)],
        kappa=0.0, budgets=UncertaintyBudgets(gamma_demand={"d1": 1}))
    sol, res, _ = solved(inst)
    # period 2 adds 60 x 2 = 120, period 1 only 10 x 5 = 50
    assert sol.flags.demand["d1"] == (0, 1)
    assert res.objective == pytest.approx(-(10 * 5 + 60 * 7), rel=1e-5)


def gate_interval(model, out, inputs):
    """Range of ``out`` allowed by the rows that involve only ``out`` and the fixed ``inputs``."""
    lo, hi = 0.0, 1.0
    for con in model.constraints:
        vars_ = {v for v, _ in con.expr}
        if out not in vars_ or not vars_ <= {out} | set(inputs):
            continue
        a = dict(con.expr)[out]
        rest = con.rhs - sum(c * inputs[v] for v, c in con.expr if v != out)
        if con.sense in ("<=", "="):
            lo, hi = (lo, min(hi, rest / a)) if a > 0 else (max(lo, rest / a), hi)
        if con.sense in (">=", "="):
            lo, hi = (max(lo, rest / a), hi) if a > 0 else (lo, min(hi, rest / a))
    return lo, hi


@pytest.mark.parametrize("chi_d,u,expect", [(1, 1, 1.0), (0, 1, 0.0), (1, 0, 0.0), (0, 0, 0.0)])
def test_and_gate_truth_table(chi_d, u, expect):
    model = assemble(_lin_instance())
    ins = {model.var("chi_d", "d1", 1): chi_d, model.var("u", "d1", "p1"): u}
    assert gate_interval(model, model.var("z", "d1", "p1", 1), ins) == pytest.approx((expect, expect))
    ins = {model.var("chi_da", 1): chi_d, model.var("u", "d1", "p1"): u}
    assert gate_interval(model, model.var("w", "d1", "p1", 1), ins) == pytest.approx((expect, expect))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31))
def test_products_exact_at_sampled_feasible_points(seed):
    rng = np.random.default_rng(seed)
    inst = random_instance(rng, int(rng.integers(1, 4)), 2, 1, 2)
    model = assemble(inst)
    arr = model.to_arrays()
    c = rng.normal(size=model.n_vars)
    res = milp(-c, constraints=LinearConstraint(arr.A, arr.row_lo, arr.row_hi),
               bounds=Bounds(arr.lb, np.minimum(arr.ub, 1e4)), integrality=arr.integrality)
    if res.status != 0:
        return
    x = res.x.copy()
    b = model.binaries()
    x[b] = np.round(x[b])
    assert linearization_residuals(model, x, inst).max_residual <= 1e-6
    for key, (got, gamma) in budget_counts(model, x, inst).items():
        assert got == gamma, key
    for t in inst.time_grid.periods:
        assert x[model.var("chi_da", t)] + x[model.var("chip_da", t)] <= 1


# -------------------------------------------------------------- assemble


def test_census_matches_closed_form_market_day():
    inst = market_day_instance()
    model = assemble(inst)
    exp = expected_census(24, 3, 1, 3)
    assert (model.n_vars, model.n_constrs) == (exp["variables"], exp["constraints"])
    blocks = model.census()
    assert sum(v["variables"] for v in blocks.values()) == model.n_vars


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 6), st.integers(0, 3), st.integers(0, 2), st.integers(1, 3))
def test_census_formula_all_shapes(T, R, D, P):
    inst = random_instance(np.random.default_rng(T * 1000 + R * 100 + D * 10 + P), T, R, D, P, budgets="zero")
    model = assemble(inst)
    exp = expected_census(T, R, D, D * P)
    assert (model.n_vars, model.n_constrs) == (exp["variables"], exp["constraints"])


def test_exact_tie_needs_zero_epsilon():
    # equal scores on both sides of the selection boundary: the strict
    # epsilon gap of the selection rows cannot be met
    inst = make_instance([unit("a", [4.0, 5.0], [1.0, 1.0], 6.0)], make_prices(2, 30.0), kappa=0.0,
                         budgets=UncertaintyBudgets(gamma_ndres={"a": 1}))
    _, res, _ = solve_instance(inst, OPTS)
    assert res.status == "infeasible"
    bm = inst.resolved_big_m()
    exact = inst.with_big_m(BigMConfig(bm.m_price, bm.m_energy, 0.0))
    sol, res, _ = solved(exact)
    assert res.objective == pytest.approx(30 * 8)


def test_no_demand_blocks_when_demand_empty():
    inst = make_instance([unit("a", [4.0, 5.0], [1.0, 1.5], 6.0)], make_prices(2, 30.0),
                         budgets=UncertaintyBudgets(gamma_ndres={"a": 1}))
    model = assemble(inst)
    assert "demand" not in model.census() and "demand_lin" not in model.census()
    assert not any(s in model.symbols() for s in ("u", "z", "q_d"))
    sol, _, _ = solved(inst)
    assert sol.decomposition.profile_cost == 0.0


def test_zero_budget_relaxation_is_tight():
    inst = market_day_instance()
    model = assemble(inst)
    arr = model.to_arrays()
    relax = solve_lp(arr.c, arr.A, arr.row_lo, arr.row_hi, arr.lb, arr.ub)
    _, res, _ = solved(inst)
    assert model.objective_value(relax) == pytest.approx(res.objective, rel=1e-7)
    assert res.objective == pytest.approx(deterministic_optimum(inst)[0], rel=1e-7)


def test_selection_checks_on_small_instance():
    inst = _lin_instance()
    sol, res, model = solved(inst)
    for chk in selection_checks(model, res.x, inst):
        assert chk.ok, chk
