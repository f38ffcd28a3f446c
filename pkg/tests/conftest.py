import numpy as np
import pytest

from rvpp.instance import (
    DemandProfile,
    DemandUnit,
    MarketPrices,
    MarketRules,
    NdResUnit,
    RvppInstance,
    TimeGrid,
    UncertaintyBudgets,
)

# one seed for every randomized acceptance check, fixed before any run
GLOBAL_SEED = 20261014


def make_prices(T, dam, dam_neg=0.0, dam_pos=0.0, su=0.0, su_neg=0.0, sd=0.0, sd_neg=0.0):
    full = lambda v: np.broadcast_to(np.asarray(v, dtype=float), (T,)).copy()
    return MarketPrices(full(dam), full(dam_neg), full(dam_pos), full(su), full(su_neg), full(sd), full(sd_neg))


def make_instance(units, prices, demands=(), budgets=None, rho=1.0, kappa=1.0, t_sr=5.0, big_m=None):
    T = len(prices.dam_median)
    return RvppInstance(TimeGrid.of(T), tuple(units), tuple(demands), prices,
                        budgets or UncertaintyBudgets(), MarketRules([rho] * T, kappa, t_sr), big_m)


def flat_demand(T, level, dev=0.0, did="d1", cost=0.0, p_min=0.0, p_max=None, e_min=0.0, beta=0.0):
    prof = DemandProfile("p1", [level] * T, [dev] * T, cost)
    top = level + dev
    return DemandUnit(did, (prof,), p_min=p_min, p_max=p_max if p_max is not None else top + 1.0,
                      beta_up=[beta] * T, beta_down=[beta] * T, ramp_up=100.0, ramp_down=100.0,
                      sr_ramp_up=0.0, sr_ramp_down=0.0, e_min=e_min)


def unit(uid, median, dev=None, p_max=None, cost=0.0, p_min=0.0):
    median = list(map(float, median))
    dev = [0.0] * len(median) if dev is None else list(map(float, dev))
    return NdResUnit(uid, median, dev, p_min, p_max if p_max is not None else max(median) + 1.0, cost)


@pytest.fixture
def rng():
    return np.random.default_rng(GLOBAL_SEED)
