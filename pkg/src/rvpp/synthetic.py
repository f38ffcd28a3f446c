"""Synthetic instances: random desk-scale ones, small hand toys, and a
24-period day shaped like a PV/wind portfolio with a residential load."""

from __future__ import annotations

import numpy as np

from .instance import (
    DemandProfile,
    DemandUnit,
    MarketPrices,
    MarketRules,
    NdResUnit,
    RvppInstance,
    TimeGrid,
    UncertaintyBudgets,
)


def _r2(x):
    return np.round(np.asarray(x, dtype=float), 2)


def random_instance(rng: np.random.Generator, n_periods: int, n_ndres: int = 2, n_demands: int = 1,
                    n_profiles: int = 2, budgets: str | UncertaintyBudgets = "random",
                    max_realizations: float | None = None) -> RvppInstance:
    """A random well-formed instance with 2-decimal data.

    Prices stay well above operating costs and realized prices stay positive,
    and every deviation is strictly positive, which keeps every budget
    feasible under a positive activation constant.  ``budgets="random"`` draws each budget
    uniformly in ``[0, T]``; ``"zero"`` sets all of them to 0.  With
    ``max_realizations`` the draw is repeated until the enumeration size fits.
    """
    T = n_periods
    units = []
    for i in range(n_ndres):
        p_max = float(rng.integers(10, 51))
        med = _r2(p_max * rng.uniform(0.2, 0.9, T))
        dev = np.maximum(_r2(med * rng.uniform(0.05, 0.4, T)), 0.01)
        p_min = float(np.floor(100 * 0.5 * float(np.min(med - dev)) * rng.uniform(0, 1)) / 100)
        units.append(NdResUnit(f"r{i + 1}", med, dev, p_min, p_max, float(_r2(rng.uniform(0, 10)))))

    demands = []
    for j in range(n_demands):
        base = rng.uniform(2, 15)
        profiles = []
        for k in range(n_profiles):
            med = _r2(base * rng.uniform(0.6, 1.4, T))
            dev = np.maximum(_r2(med * rng.uniform(0.02, 0.2, T)), 0.01)
            profiles.append(DemandProfile(f"p{k + 1}", med, dev, float(_r2(rng.uniform(0, 20)))))
        top = max(float(np.max(p.p_median + p.p_dev_pos)) for p in profiles)
        low = min(float(np.min(p.p_median)) for p in profiles)
        step = max((float(np.max(np.abs(np.diff(p.p_median + p.p_dev_pos)), initial=0.0)) for p in profiles),
                   default=0.0)
        step = max(step, max(float(np.max(p.p_median + p.p_dev_pos) - np.min(p.p_median)) for p in profiles))
        demands.append(DemandUnit(
            f"d{j + 1}", tuple(profiles), p_min=float(_r2(0.5 * low)), p_max=float(np.ceil(top * 1.1)),
            beta_up=_r2(rng.uniform(0.05, 0.2, T)), beta_down=_r2(rng.uniform(0.05, 0.2, T)),
            ramp_up=float(np.ceil(step + rng.uniform(2, 10))), ramp_down=float(np.ceil(step + rng.uniform(2, 10))),
            sr_ramp_up=float(_r2(rng.uniform(0.2, 1.0))), sr_ramp_down=float(_r2(rng.uniform(0.2, 1.0))),
            e_min=float(_r2(0.3 * low * T)),
        ))

    dam = _r2(rng.uniform(20, 80, T))
    prices = MarketPrices(
        dam_median=dam,
        dam_dev_neg=_r2(dam * rng.uniform(0, 0.3, T)),
        dam_dev_pos=_r2(dam * rng.uniform(0, 0.3, T)),
        sr_up_median=(su := _r2(rng.uniform(5, 25, T))),
        sr_up_dev_neg=_r2(su * rng.uniform(0, 0.3, T)),
        sr_down_median=(sd := _r2(rng.uniform(5, 25, T))),
        sr_down_dev_neg=_r2(sd * rng.uniform(0, 0.3, T)),
    )
    rules = MarketRules(_r2(rng.uniform(0.5, 2.0, T)), float(_r2(rng.uniform(0.1, 0.4))), 5.0)
    inst = RvppInstance(TimeGrid.of(T), tuple(units), tuple(demands), prices, UncertaintyBudgets(), rules)
    if isinstance(budgets, UncertaintyBudgets):
        return inst.with_budgets(budgets)
    if budgets == "zero":
        return inst
    for _ in range(1000):
        b = UncertaintyBudgets(
            int(rng.integers(0, T + 1)), int(rng.integers(0, T + 1)), int(rng.integers(0, T + 1)),
            {u.id: int(rng.integers(0, T + 1)) for u in units},
            {d.id: int(rng.integers(0, T + 1)) for d in demands},
        )
        cand = inst.with_budgets(b)
        if max_realizations is None:
            return cand
        from .oracle import realization_count
        if realization_count(cand) <= max_realizations:
            return cand
    raise RuntimeError("could not draw budgets within the realization limit")


def toy_instance(p_median: float = 10.0, price: float = 50.0, om_cost: float = 5.0) -> RvppInstance:
    """One period, one renewable unit, no demand, no deviations."""
    z = [0.0]
    unit = NdResUnit("r1", [p_median], z, 0.0, max(p_median, 1.0), om_cost)
    prices = MarketPrices([price], z, z, z, z, z, z)
    return RvppInstance(TimeGrid.of(1), (unit,), (), prices, UncertaintyBudgets(), MarketRules([1.0], 1.0, 5.0))


def two_period_toy() -> RvppInstance:
    """Two periods, one renewable unit with reserve, budgets of 1 on the DAM
    price, up-reserve price and energy."""
    unit = NdResUnit("r1", [10.0, 8.0], [2.0, 3.0], 0.0, 12.0, 5.0)
    prices = MarketPrices([50.0, 40.0], [5.0, 4.0], [5.0, 4.0], [60.0, 60.0], [6.0, 12.0], [3.0, 3.0], [0.5, 0.5])
    return RvppInstance(TimeGrid.of(2), (unit,), (), prices, UncertaintyBudgets(1, 1, 0, {"r1": 1}, {}),
                        MarketRules([1.0, 1.0], 0.2, 5.0))


def illustrative_instance() -> RvppInstance:
    """Five periods, two renewable units and one demand.

    Unit ``r2`` loses the most energy in period 3 (5 MW) while period 4 has
    the largest price-weighted loss (15 EUR/MWh x 4 MW = 60 EUR).  Budgets are
    3 price periods, 3 and 1 renewable periods and 2 demand periods.
    """
    T = 5
    r1 = NdResUnit("r1", [4.0, 6.0, 7.0, 6.0, 5.0], [1.0, 1.5, 2.0, 1.5, 1.0], 0.0, 10.0, 1.0)
    r2 = NdResUnit("r2", [6.0, 8.0, 10.0, 8.0, 6.0], [1.0, 2.0, 5.0, 4.0, 1.0], 0.0, 12.0, 1.0)
    prof = (
        DemandProfile("p1", [3.0, 3.5, 4.0, 4.0, 3.5], [0.3, 0.4, 0.4, 0.5, 0.4], 2.0),
        DemandProfile("p2", [3.5, 3.0, 3.5, 4.5, 3.0], [0.3, 0.3, 0.4, 0.5, 0.3], 1.0),
    )
    dem = DemandUnit("d1", prof, p_min=1.0, p_max=6.0, beta_up=[0.1] * T, beta_down=[0.1] * T,
                     ramp_up=3.0, ramp_down=3.0, sr_ramp_up=0.2, sr_ramp_down=0.2, e_min=10.0)
    prices = MarketPrices(
        dam_median=[9.0, 10.0, 11.0, 15.5, 12.0],
        dam_dev_neg=[0.5, 0.5, 0.5, 0.5, 0.5],
        dam_dev_pos=[0.5, 0.5, 0.5, 0.5, 0.5],
        sr_up_median=[3.0, 3.0, 3.5, 4.0, 3.0],
        sr_up_dev_neg=[0.5, 0.5, 0.5, 0.5, 0.5],
        sr_down_median=[2.0, 2.0, 2.5, 3.0, 2.0],
        sr_down_dev_neg=[0.3, 0.3, 0.3, 0.3, 0.3],
    )
    budgets = UncertaintyBudgets(3, 0, 0, {"r1": 3, "r2": 1}, {"d1": 2})
    return RvppInstance(TimeGrid.of(T), (r1, r2), (dem,), prices, budgets, MarketRules([1.0] * T, 0.2, 5.0))


def market_day_instance() -> RvppInstance:
    """24 hourly periods: two 50 MW PV plants (5 EUR/MWh), one 50 MW wind farm
    (10 EUR/MWh) and a residential load with three candidate profiles and 10%
    reserve flexibility.  Budgets are zero; sweeps override them."""
    T = 24
    h = np.arange(24)
    sun = np.clip(np.sin((h - 6.0) / 14.0 * np.pi), 0.0, None)
    sun[(h < 7) | (h > 19)] = 0.0
    pv1 = _r2(40.0 * sun)
    pv2 = _r2(34.0 * np.clip(np.sin((h - 6.5) / 14.0 * np.pi), 0.0, None) * (sun > 0))
    wind = _r2(22.0 + 8.0 * np.cos(h / 24.0 * 2 * np.pi) + 3.0 * np.sin(h / 5.0))
    units = (
        NdResUnit("pv1", pv1, _r2(0.3 * pv1), 0.0, 50.0, 5.0),
        NdResUnit("pv2", pv2, _r2(0.25 * pv2), 0.0, 50.0, 5.0),
        NdResUnit("wind", wind, _r2(0.35 * wind), 0.0, 50.0, 10.0),
    )
    base = 30.0 + 8.0 * np.exp(-((h - 8.5) ** 2) / 6.0) + 14.0 * np.exp(-((h - 20.0) ** 2) / 8.0)
    profiles = (
        DemandProfile("base", _r2(base), _r2(0.08 * base), 0.0),
        DemandProfile("shift_early", _r2(np.roll(base, -1)), _r2(0.08 * base), 15.0),
        DemandProfile("flat", _r2(np.full(T, base.mean())), _r2(0.06 * base), 40.0),
    )
    top = max(float(np.max(p.p_median + p.p_dev_pos)) for p in profiles)
    dem = DemandUnit("load", profiles, p_min=10.0, p_max=float(np.ceil(top + 5)),
                     beta_up=[0.1] * T, beta_down=[0.1] * T, ramp_up=15.0, ramp_down=15.0,
                     sr_ramp_up=1.0, sr_ramp_down=1.0, e_min=600.0)
    dam = _r2(62 + 18 * np.exp(-((h - 20.5) ** 2) / 6.0) + 10 * np.exp(-((h - 8.0) ** 2) / 4.0)
              - 22 * np.exp(-((h - 14.0) ** 2) / 10.0))
    prices = MarketPrices(
        dam_median=dam,
        dam_dev_neg=_r2(0.15 * dam),
        dam_dev_pos=_r2(0.15 * dam),
        sr_up_median=(su := _r2(14 + 6 * np.exp(-((h - 20.0) ** 2) / 8.0))),
        sr_up_dev_neg=_r2(0.2 * su),
        sr_down_median=(sd := _r2(9 + 3 * np.exp(-((h - 4.0) ** 2) / 8.0))),
        sr_down_dev_neg=_r2(0.2 * sd),
    )
    rules = MarketRules([1.5] * T, 0.1, 5.0)
    return RvppInstance(TimeGrid.of(T), units, (dem,), prices, UncertaintyBudgets(), rules)
