import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rvpp.oracle import (
    EnumerationTooLarge,
    bid_worst_case,
    certify_max_min,
    dam_patterns,
    deterministic_optimum,
    energy_count,
    enumerate_realizations,
    evaluate_bid,
    formulation_value,
    inner_best_response,
    price_count,
    realization_count,
    subset_patterns,
    witness_realization,
    worst_case_value,
    worst_prices,
)
from rvpp.solution import solve_instance
from rvpp.solvers import SolveOptions
from rvpp.synthetic import illustrative_instance, random_instance, toy_instance, two_period_toy


def test_pattern_counts_small():
    assert len(dam_patterns(3, 1)) == 6
    assert dam_patterns(2, 0) == [(0, 0)]
    assert subset_patterns(3, 0) == [(0, 0, 0)]
    assert subset_patterns(3, 3) == [(1, 1, 1)]
    assert sorted(dam_patterns(1, 1)) == [(-1,), (1,)]


@given(st.integers(1, 6), st.data())
def test_pattern_counts_match_binomials(n, data):
    g = data.draw(st.integers(0, n))
    dam = dam_patterns(n, g)
    sub = subset_patterns(n, g)
    assert len(dam) == math.comb(n, g) * 2**g == len(set(dam))
    assert len(sub) == math.comb(n, g) == len(set(sub))
    assert all(sum(abs(f) for f in p) == g for p in dam)
    assert all(sum(p) == g for p in sub)


def test_enumeration_is_exhaustive_and_unique():
    inst = two_period_toy()
    reals = list(enumerate_realizations(inst))
    # DAM: 2 periods x 2 signs, up reserve: 2, down reserve: 1, renewable: 2
    assert energy_count(inst) == 2 and price_count(inst) == 8
    assert len(reals) == realization_count(inst) == 16 == len(set(reals))


def test_guard_raises():
    inst = illustrative_instance()
    with pytest.raises(EnumerationTooLarge) as err:
        list(enumerate_realizations(inst, guard=100))
    assert err.value.count == 40000
    with pytest.raises(EnumerationTooLarge):
        worst_case_value(inst, guard=100)


def test_worst_prices_by_hand():
    # DAM income 7.6*45 + 2.6*40 = 446 at the period-1 drop; up reserve 2.4*60 + 2.4*48 at the period-2 drop
    pattern, revenue = worst_prices(two_period_toy(), [7.6, 2.6], [2.4, 2.4], [0.0, 0.0])
    assert pattern == ((-1, 0), (0, 1), (0, 0))
    assert revenue == pytest.approx(446.0 + 259.2)


def test_buyer_faces_price_rise():
    inst = two_period_toy()
    (dam, _, _), revenue = worst_prices(inst, [-2.0, 1.0], [0.0, 0.0], [0.0, 0.0])
    assert dam == (1, 0)
    assert revenue == pytest.approx(-2 * 55.0 + 40.0)


def test_deterministic_optimum_toy():
    val, plan = deterministic_optimum(toy_instance())
    assert val == pytest.approx(450.0)
    assert plan["p_da"][0] == pytest.approx(10.0)


def test_inner_best_response_revealed_values():
    inst = two_period_toy()
    real = next(r for r in enumerate_realizations(inst)
                if r.dam_flags == (-1, 0) and r.sr_up_flags == (0, 1) and r.ndres_flags["r1"] == (0, 1))
    val, _ = inner_best_response(inst, real)
    # knowing everything can only help relative to the robust value
    assert val >= 668.6 - 1e-6


def test_two_period_toy_certified():
    inst = two_period_toy()
    sol, res, _ = solve_instance(inst)
    rep = certify_max_min(inst, res.objective, sol.flags, sol.profile)
    assert rep.passed and rep.energy_flags_match
    assert rep.oracle_value == pytest.approx(668.6, abs=1e-6)
    assert rep.formulation_value == pytest.approx(668.6, abs=1e-6)
    assert rep.witness.dam_flags == (-1, 0) and rep.witness.sr_up_flags == (0, 1)
    assert rep.witness.ndres_flags == {"r1": (0, 1)}
    d = rep.as_dict()
    assert d["passed"] and d["realization_count"] == 16


def test_illustrative_certified():
    inst = illustrative_instance()
    sol, res, _ = solve_instance(inst)
    rep = certify_max_min(inst, res.objective, sol.flags, sol.profile)
    assert rep.passed
    assert rep.oracle_value == pytest.approx(363.55, abs=1e-6)
    assert rep.witness.ndres_flags["r2"] == (0, 0, 0, 1, 0)


def test_wrong_objective_fails():
    inst = two_period_toy()
    rep = certify_max_min(inst, 668.6 + 1.0)
    assert not rep.passed and rep.gap == pytest.approx(1.0)


def test_witness_and_bid_evaluation_agree():
    inst = two_period_toy()
    witness, value = witness_realization(inst)
    sol, _, _ = solve_instance(inst)
    worst, _ = bid_worst_case(inst, sol.p_da, sol.r_up, sol.r_dn, sol.profile, witness.energy)
    assert worst == pytest.approx(value, abs=1e-6)
    at_witness = evaluate_bid(inst, sol.p_da, sol.r_up, sol.r_dn, sol.profile, witness)
    assert at_witness == pytest.approx(worst, abs=1e-6)


def test_undeliverable_bid_is_minus_inf():
    inst = two_period_toy()
    real = next(iter(enumerate_realizations(inst)))
    assert evaluate_bid(inst, [50.0, 50.0], [0.0, 0.0], [0.0, 0.0], {}, real) == -np.inf


@pytest.mark.parametrize("backend", ["highs", "bnb"])
def test_verdict_independent_of_backend(backend):
    inst = two_period_toy()
    sol, res, _ = solve_instance(inst, SolveOptions(backend=backend))
    assert certify_max_min(inst, res.objective, sol.flags, sol.profile, with_formulation=False).passed


def _small(seed):
    rng = np.random.default_rng(seed)
    return random_instance(rng, int(rng.integers(1, 4)), int(rng.integers(1, 3)), int(rng.integers(0, 2)),
                           int(rng.integers(1, 3)), max_realizations=3000)


@settings(max_examples=12, deadline=None)
@given(st.integers(0, 2**31))
def test_robust_value_below_median_value(seed):
    inst = _small(seed)
    v_star = worst_case_value(inst)[0].value
    assert v_star <= deterministic_optimum(inst)[0] + 1e-6 * (1 + abs(v_star))


@settings(max_examples=12, deadline=None)
@given(st.integers(0, 2**31))
def test_formulation_value_matches_milp(seed):
    inst = _small(seed)
    _, res, _ = solve_instance(inst)
    val, _ = formulation_value(inst)
    if not res.ok:
        assert val == -np.inf
        return
    assert res.objective == pytest.approx(val, rel=1e-6, abs=1e-6)


@settings(max_examples=8, deadline=None)
@given(st.integers(0, 2**31))
def test_game_value_monotone_in_budgets(seed):
    inst = _small(seed)
    b = inst.budgets
    v = worst_case_value(inst)[0].value
    T = inst.n_periods
    for field_name in ("gamma_dam", "gamma_sr_up", "gamma_sr_down"):
        if getattr(b, field_name) < T:
            bigger = dataclasses.replace(b, **{field_name: getattr(b, field_name) + 1})
            assert worst_case_value(inst.with_budgets(bigger))[0].value <= v + 1e-6 * (1 + abs(v))
