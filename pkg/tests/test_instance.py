import dataclasses
import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rvpp.instance import (
    BigMConfig,
    InstanceError,
    UncertaintyBudgets,
    derive_big_m,
    deviation_monomials,
    ensure_valid,
    validate_instance,
)
from rvpp.io import (
    InstanceFormatError,
    dumps,
    instance_to_dict,
    load_instance_with_csv,
    loads,
)
from rvpp.synthetic import illustrative_instance, market_day_instance, random_instance, toy_instance

from conftest import flat_demand, make_instance, make_prices, unit


def two_unit():
    return make_instance([unit("a", [5, 6, 7, 8], [1, 1, 1, 1], 10), unit("b", [3, 3, 3, 3], [0.5] * 4, 5)],
                         make_prices(4, 50.0, 5.0, 5.0))


def test_well_formed_instance_has_empty_report():
    rep = validate_instance(two_unit())
    assert rep.ok and rep.violations == ()
    for inst in (toy_instance(), illustrative_instance(), market_day_instance()):
        assert validate_instance(inst).ok


def test_deviation_above_median_names_unit_period_and_invariant():
    inst = make_instance([unit("pv", [5, 6, 2, 8], [1, 1, 3, 1], 10)], make_prices(4, 50.0))
    rep = validate_instance(inst)
    assert not rep.ok
    v = rep.violations[0]
    assert "pv" in v.path and "[3]" in v.path
    assert "p_dev_neg" in v.invariant
    with pytest.raises(InstanceError):
        ensure_valid(inst)


def test_budget_outside_horizon_rejected():
    inst = two_unit().with_budgets(UncertaintyBudgets(gamma_dam=5))
    rep = validate_instance(inst)
    assert [v.path for v in rep.violations] == ["budgets.gamma_dam"]
    assert "budget in [0, |T|]" in rep.violations[0].invariant


def test_unknown_budget_key_rejected():
    inst = two_unit().with_budgets(UncertaintyBudgets(gamma_ndres={"nope": 1}))
    assert any("known unit" in v.invariant for v in validate_instance(inst).violations)


def test_epsilon_must_stay_below_m():
    inst = two_unit().with_big_m(BigMConfig(10.0, 10.0, 10.0))
    assert not validate_instance(inst).ok
    assert validate_instance(two_unit().with_big_m(BigMConfig(10.0, 10.0, 0.0))).ok


# ----------------------------------------------------------------- big-M


def test_big_m_single_unit_hand_value():
    inst = make_instance([unit("a", [20.0], [2.0], 50)], make_prices(1, 60.0, 10.0))
    bm = derive_big_m(inst)
    # 10 EUR/MWh x 50 MW x 1 h x 2
    assert bm.m_price >= 1000.0
    assert bm.m_price == pytest.approx(1000.0)
    assert not bm.warning


def test_big_m_two_units_hand_value():
    inst = make_instance([unit("a", [20.0], [2.0], 50), unit("b", [20.0], [2.0], 50)],
                         make_prices(1, 60.0, 10.0, 10.0, 3.0, 5.0, 2.0, 5.0))
    bm = derive_big_m(inst)
    # (10 + 10 + 5 + 5) x 100 MW x 2
    assert bm.m_price >= 6000.0
    assert bm.m_price == pytest.approx(6000.0)


def test_big_m_zero_deviations_defaults_with_warning():
    inst = make_instance([unit("a", [5, 6])], make_prices(2, 50.0))
    bm = derive_big_m(inst)
    assert (bm.m_price, bm.m_energy, bm.epsilon, bm.warning) == (1.0, 1.0, 1e-6, True)


def test_big_m_market_day_frozen():
    bm = derive_big_m(market_day_instance())
    assert bm.m_price == pytest.approx(11936.4)
    assert bm.m_energy == pytest.approx(2467.68)
    assert bm.epsilon == pytest.approx(1.8e-4)


def _max_monomial_at_bounds(inst):
    """Every gated profit-reduction term evaluated at the variable bounds."""
    pr, dt = inst.prices, inst.dt
    cap_r, cap_d = inst.total_ndres_capacity, inst.total_demand_capacity
    p_abs = max(cap_r, cap_d)
    worst = [np.max(pr.dam_dev_neg) * p_abs * dt, np.max(pr.dam_dev_pos) * p_abs * dt,
             np.max(pr.sr_up_dev_neg) * inst.rules.kappa * cap_r,
             np.max(pr.sr_down_dev_neg) * (cap_r + cap_d)]
    lam_top = np.max(np.abs(pr.dam_median) + pr.dam_dev_neg + pr.dam_dev_pos)
    price_terms = max(worst)
    energy_terms = [lam_top * np.max(u.p_dev_neg) * dt for u in inst.ndres_units]
    energy_terms += [lam_top * np.max(p.p_dev_pos) * dt for d in inst.demands for p in d.profiles]
    return price_terms, max(energy_terms, default=0.0)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31), st.integers(1, 6), st.integers(1, 3), st.integers(0, 2), st.integers(1, 3))
def test_big_m_dominates_every_monomial(seed, T, R, D, P):
    inst = random_instance(np.random.default_rng(seed), T, R, D, P)
    bm = derive_big_m(inst)
    price, energy = _max_monomial_at_bounds(inst)
    assert bm.m_price > price
    assert bm.m_energy > energy
    assert 0 < bm.epsilon < min(bm.m_price, bm.m_energy)
    mono = deviation_monomials(inst)
    assert bm.epsilon <= 1e-4 * mono[mono > 0].min() + 1e-15


# --------------------------------------------------------------- file I/O


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31), st.integers(1, 6), st.integers(0, 3), st.integers(0, 2), st.integers(1, 3),
       st.booleans())
def test_json_round_trip(seed, T, R, D, P, with_m):
    inst = random_instance(np.random.default_rng(seed), T, R, D, P)
    if with_m:
        inst = inst.with_big_m(derive_big_m(inst))
    back = loads(dumps(inst))
    assert instance_to_dict(back) == instance_to_dict(inst)
    assert dumps(back) == dumps(inst)


def test_missing_key_is_format_error():
    tree = instance_to_dict(toy_instance())
    del tree["prices"]
    with pytest.raises(InstanceFormatError, match="prices"):
        loads(json.dumps(tree))
    with pytest.raises(InstanceFormatError):
        loads("{not json")


def test_csv_overlay(tmp_path):
    inst = make_instance([unit("pv", [1, 1, 1], p_max=10)], make_prices(3, 1.0),
                         demands=[flat_demand(3, 2.0)])
    (tmp_path / "base.json").write_text(dumps(inst))
    (tmp_path / "series.csv").write_text(
        "period,dam_median,pv.p_median,pv.p_dev_neg,d1.p1.p_median\n"
        "1,40,5,1,2\n2,50,6,1,2.5\n3,60,7,2,3\n")
    got = load_instance_with_csv(tmp_path / "base.json", tmp_path / "series.csv")
    assert got.prices.dam_median.tolist() == [40, 50, 60]
    assert got.ndres_units[0].p_dev_neg.tolist() == [1, 1, 2]
    assert got.demands[0].profiles[0].p_median.tolist() == [2, 2.5, 3]
    (tmp_path / "bad.csv").write_text("nonsense\n1\n2\n3\n")
    with pytest.raises(InstanceFormatError):
        load_instance_with_csv(tmp_path / "base.json", tmp_path / "bad.csv")


def test_instances_are_immutable():
    inst = toy_instance()
    with pytest.raises(dataclasses.FrozenInstanceError):
        inst.budgets = UncertaintyBudgets()
    with pytest.raises(ValueError):
        inst.prices.dam_median[0] = 1.0
