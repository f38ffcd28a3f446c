"""Energy-robust baseline.

Worst-case periods are picked by the size of the energy deviation alone,
then price deviations are placed where the traded quantity makes them hurt
most.  Steps:

1. solve the deterministic problem at median data; keep its profile choice;
2. flag the ``Gamma_r`` periods of largest ``p_dev_neg`` per renewable unit
   and the ``Gamma_d`` periods of largest ``p_dev_pos`` of the kept profile
   per demand, ties to the earliest period;
3. fix those energies and place the DAM flags on the largest
   ``deviation x traded energy`` products of the current plan, re-solve, then
   the same for up reserve and for down reserve, re-solving after each.

Every deterministic solve goes through the main model on a *realized*
instance (deviations folded into the medians, all budgets zero), so with zero
budgets the baseline is the very same solve as the profit-robust model.

This is a simplified stand-in for the energy-robust model in the literature,
not a reproduction of it.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np

from .instance import MarketPrices, RvppInstance, UncertaintyBudgets, ensure_valid
from .solution import BidSolution, Flags, solve_instance
from .solvers import INFEASIBLE, SolveOptions

METHOD = "energy_robust_baseline"


@dataclass(frozen=True)
class BaselineSolution(BidSolution):
    """A ``BidSolution`` plus the periods pre-selected per source (1-based)."""

    selected: dict[str, tuple[int, ...]] = field(default_factory=dict)

    def as_dict(self):
        out = super().as_dict()
        out["selected_periods"] = {k: list(v) for k, v in self.selected.items()}
        out["note"] = "simplified energy-robust baseline with iterative price-block selection"
        return out


def top_periods(scores, gamma: int) -> tuple[int, ...]:
    """0/1 flags on the ``gamma`` largest scores, earliest first on ties."""
    scores = np.asarray(scores, dtype=float)
    order = sorted(range(len(scores)), key=lambda k: (-scores[k], k))
    flags = [0] * len(scores)
    for k in order[:gamma]:
        flags[k] = 1
    return tuple(flags)


def realized_instance(inst: RvppInstance, dam, up, dn, ndres: dict, demand: dict,
                      profile: dict[str, str] | None = None) -> RvppInstance:
    """Deterministic copy of ``inst`` with the given deviations applied.

    ``profile`` restricts each demand to one profile; the demand flags refer
    to that profile.
    """
    pr = inst.prices
    z = np.zeros(inst.n_periods)
    dam = np.asarray(dam)
    prices = MarketPrices(
        pr.dam_median - pr.dam_dev_neg * (dam < 0) + pr.dam_dev_pos * (dam > 0), z, z,
        pr.sr_up_median - pr.sr_up_dev_neg * np.asarray(up), z,
        pr.sr_down_median - pr.sr_down_dev_neg * np.asarray(dn), z)
    units = tuple(dataclasses.replace(u, p_median=u.p_median - u.p_dev_neg * np.asarray(ndres[u.id]), p_dev_neg=z)
                  for u in inst.ndres_units)
    dems = []
    for d in inst.demands:
        profs = d.profiles if profile is None else tuple(p for p in d.profiles if p.profile_id == profile[d.id])
        flags = np.asarray(demand.get(d.id, (0,) * inst.n_periods))
        profs = tuple(dataclasses.replace(p, p_median=p.p_median + p.p_dev_pos * flags, p_dev_pos=z) for p in profs)
        dems.append(dataclasses.replace(d, profiles=profs))
    return dataclasses.replace(inst, ndres_units=units, demands=tuple(dems), prices=prices,
                               budgets=UncertaintyBudgets(), big_m=None)


def solve_energy_robust(inst: RvppInstance, options: SolveOptions | None = None,
                        validate: bool = True) -> BaselineSolution:
    if validate:
        ensure_valid(inst)
    n, b, pr, dt = inst.n_periods, inst.budgets, inst.prices, inst.dt
    zeros = (0,) * n

    def infeasible(flags, selected, profile):
        zv = np.zeros(n)
        return BaselineSolution(METHOD, -np.inf, zv, zv.copy(), zv.copy(), profile, flags,
                                status=INFEASIBLE, selected=selected)

    # 1. median solve fixes the profile choice
    base = realized_instance(inst, zeros, zeros, zeros, {u.id: zeros for u in inst.ndres_units}, {})
    sol, res, _ = solve_instance(base, options)

    # 2. energy flags by deviation size
    ndres = {u.id: top_periods(u.p_dev_neg, b.ndres(u.id)) for u in inst.ndres_units}
    if sol is None or not res.ok:
        return infeasible(Flags(zeros, zeros, zeros, ndres, {}), {}, {})
    profile = dict(sol.profile)
    prof = {d.id: next(p for p in d.profiles if p.profile_id == profile[d.id]) for d in inst.demands}
    demand = {d.id: top_periods(prof[d.id].p_dev_pos, b.demand(d.id)) for d in inst.demands}

    # 3. price blocks one after another; re-solve only when something moved
    dam, up, dn = zeros, zeros, zeros
    state = {"changed": any(any(v) for v in ndres.values()) or any(any(v) for v in demand.values())}

    def resolve(sol, res):
        if not state["changed"]:
            return sol, res
        state["changed"] = False
        real = realized_instance(inst, dam, up, dn, ndres, demand, profile)
        s, r, _ = solve_instance(real, options)
        return s, r

    sol, res = resolve(sol, res)
    if sol is not None and res.ok:
        neg, pos = pr.dam_dev_neg * sol.p_da * dt, -pr.dam_dev_pos * sol.p_da * dt
        picked = top_periods(np.maximum(neg, pos), b.gamma_dam)
        dam = tuple((-1 if neg[k] >= pos[k] else 1) if picked[k] else 0 for k in range(n))
        state["changed"] = any(dam)
        sol, res = resolve(sol, res)
    if sol is not None and res.ok:
        up = top_periods(pr.sr_up_dev_neg * sol.r_up, b.gamma_sr_up)
        state["changed"] = any(up)
        sol, res = resolve(sol, res)
    if sol is not None and res.ok:
        dn = top_periods(pr.sr_down_dev_neg * sol.r_dn, b.gamma_sr_down)
        state["changed"] = any(dn)
        sol, res = resolve(sol, res)

    flags = Flags(dam, up, dn, ndres, demand)
    selected = {f"ndres:{k}": tuple(int(i) + 1 for i in np.flatnonzero(v)) for k, v in ndres.items()}
    selected.update({f"demand:{k}": tuple(int(i) + 1 for i in np.flatnonzero(v)) for k, v in demand.items()})
    for key, v in (("dam", dam), ("sr_up", up), ("sr_down", dn)):
        selected[key] = tuple(k + 1 for k in range(n) if v[k])
    if sol is None or not res.ok:
        return infeasible(flags, selected, profile)
    return BaselineSolution(
        method=METHOD, objective=float(sol.objective), p_da=sol.p_da, r_up=sol.r_up, r_dn=sol.r_dn,
        profile=profile, flags=flags, ndres_dispatch=sol.ndres_dispatch, demand_dispatch=sol.demand_dispatch,
        decomposition=sol.decomposition, status=sol.status, selected=selected,
    )
