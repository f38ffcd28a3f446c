"""Bids, dispatch and selected worst-case indicators read back from a solve."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .instance import RvppInstance
from .model import MilpModel
from .solvers import OPTIMAL, SolveResult


@dataclass(frozen=True)
class ProfitDecomposition:
    """The four line groups of the objective.

    ``dam`` and ``srm`` are incomes net of their worst-case price reductions;
    the two costs are reported as positive numbers and subtracted.
    """

    dam: float
    srm: float
    ndres_cost: float
    profile_cost: float

    @property
    def total(self) -> float:
        return self.dam + self.srm - self.ndres_cost - self.profile_cost

    def as_dict(self) -> dict[str, float]:
        return {"dam": self.dam, "srm": self.srm, "ndres_cost": self.ndres_cost,
                "profile_cost": self.profile_cost, "total": self.total}


@dataclass(frozen=True)
class Flags:
    dam: tuple[int, ...]
    sr_up: tuple[int, ...]
    sr_down: tuple[int, ...]
    ndres: dict[str, tuple[int, ...]]
    demand: dict[str, tuple[int, ...]]

    def as_dict(self) -> dict[str, Any]:
        return {"dam": list(self.dam), "sr_up": list(self.sr_up), "sr_down": list(self.sr_down),
                "ndres": {k: list(v) for k, v in self.ndres.items()},
                "demand": {k: list(v) for k, v in self.demand.items()}}


@dataclass(frozen=True)
class BidSolution:
    """Market bids plus the unit plan behind them.

    ``p_da`` is the net energy bid per period (negative means buying); the
    reserve bids are capacities.  ``profile`` maps each demand to the chosen
    profile id.  ``surrogates`` holds the nu/eta/y values of every block.
    """

    method: str
    objective: float
    p_da: np.ndarray
    r_up: np.ndarray
    r_dn: np.ndarray
    profile: dict[str, str]
    flags: Flags
    ndres_dispatch: dict[str, dict[str, np.ndarray]] = field(default_factory=dict)
    demand_dispatch: dict[str, dict[str, np.ndarray]] = field(default_factory=dict)
    surrogates: dict[str, Any] = field(default_factory=dict)
    decomposition: ProfitDecomposition | None = None
    status: str = OPTIMAL

    def as_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "method": self.method,
            "status": self.status,
            "objective": self.objective,
            "bids": {"p_da": self.p_da.tolist(), "r_up": self.r_up.tolist(), "r_dn": self.r_dn.tolist()},
            "profile": dict(self.profile),
            "flags": self.flags.as_dict(),
            "ndres_dispatch": {k: {s: a.tolist() for s, a in v.items()} for k, v in self.ndres_dispatch.items()},
            "demand_dispatch": {k: {s: a.tolist() for s, a in v.items()} for k, v in self.demand_dispatch.items()},
        }
        if self.decomposition is not None:
            out["decomposition"] = self.decomposition.as_dict()
        if self.surrogates:
            out["surrogates"] = self.surrogates
        return out


def _flags(mvals, inst: RvppInstance) -> Flags:
    T = inst.time_grid.periods
    dam = tuple(int(round(mvals("chip_da", t))) - int(round(mvals("chi_da", t))) for t in T)
    return Flags(
        dam=dam,
        sr_up=tuple(int(round(mvals("chi_su", t))) for t in T),
        sr_down=tuple(int(round(mvals("chi_sd", t))) for t in T),
        ndres={u.id: tuple(int(round(mvals("chi_r", u.id, t))) for t in T) for u in inst.ndres_units},
        demand={d.id: tuple(int(round(mvals("chi_d", d.id, t))) for t in T) for d in inst.demands},
    )


def emit_decomposition(result: SolveResult, model: MilpModel, inst: RvppInstance) -> ProfitDecomposition:
    if result.status != OPTIMAL or result.x is None:
        raise ValueError(f"decomposition needs an optimal result, got status {result.status}")
    x = result.x
    val = lambda s, *i: model.value(x, s, *i)
    pr, dt = inst.prices, inst.dt
    T = inst.time_grid.periods
    dam = sum(pr.dam_median[k] * val("p_da", t) * dt - val("y_da", t) - val("yp_da", t) for k, t in enumerate(T))
    srm = sum(pr.sr_up_median[k] * val("r_up", t) + pr.sr_down_median[k] * val("r_dn", t)
              - val("y_su", t) - val("y_sd", t) for k, t in enumerate(T))
    res_cost = sum(u.om_cost * val("p_r", u.id, t) * dt for u in inst.ndres_units for t in T)
    prof_cost = sum(p.cost * val("u", d.id, p.profile_id) for d in inst.demands for p in d.profiles)
    return ProfitDecomposition(float(dam), float(srm), float(res_cost), float(prof_cost))


def extract_solution(result: SolveResult, model: MilpModel, inst: RvppInstance,
                     method: str = "profit_robust") -> BidSolution:
    if result.x is None:
        raise ValueError(f"no solution to extract (status {result.status})")
    x = result.x
    val = lambda s, *i: model.value(x, s, *i)
    T = inst.time_grid.periods
    arr = lambda s, *i: np.array([val(s, *i, t) for t in T])
    profile = {}
    for d in inst.demands:
        profile[d.id] = max(d.profiles, key=lambda p: val("u", d.id, p.profile_id)).profile_id
    surrogates = {
        "nu": {"dam": val("nu_da"), "sr_up": val("nu_su"), "sr_down": val("nu_sd"),
               **{f"ndres:{u.id}": val("nu_r", u.id) for u in inst.ndres_units},
               **{f"demand:{d.id}": val("nu_d", d.id) for d in inst.demands}},
        "y": {"dam_neg": arr("y_da").tolist(), "dam_pos": arr("yp_da").tolist(),
              "sr_up": arr("y_su").tolist(), "sr_down": arr("y_sd").tolist(),
              **{f"ndres:{u.id}": arr("y_r", u.id).tolist() for u in inst.ndres_units},
              **{f"demand:{d.id}": arr("y_d", d.id).tolist() for d in inst.demands}},
        "eta": {"dam_neg": arr("eta_da").tolist(), "dam_pos": arr("etap_da").tolist(),
                "sr_up": arr("eta_su").tolist(), "sr_down": arr("eta_sd").tolist(),
                **{f"ndres:{u.id}": arr("eta_r", u.id).tolist() for u in inst.ndres_units},
                **{f"demand:{d.id}": arr("eta_d", d.id).tolist() for d in inst.demands}},
    }
    decomposition = emit_decomposition(result, model, inst) if result.status == OPTIMAL else None
    return BidSolution(
        method=method,
        objective=result.objective,
        p_da=arr("p_da"), r_up=arr("r_up"), r_dn=arr("r_dn"),
        profile=profile,
        flags=_flags(val, inst),
        ndres_dispatch={u.id: {"p": arr("p_r", u.id), "r_up": arr("rup_r", u.id), "r_dn": arr("rdn_r", u.id)}
                        for u in inst.ndres_units},
        demand_dispatch={d.id: {"p": arr("p_d", d.id), "r_up": arr("rup_d", d.id), "r_dn": arr("rdn_d", d.id)}
                         for d in inst.demands},
        surrogates=surrogates,
        decomposition=decomposition,
        status=result.status,
    )


def solve_instance(inst: RvppInstance, options=None) -> tuple[BidSolution | None, SolveResult, MilpModel]:
    """Assemble, solve and extract in one call."""
    from .builder import assemble
    from .solvers import solve

    model = assemble(inst)
    res = solve(model, options)
    sol = extract_solution(res, model, inst) if res.x is not None else None
    return sol, res, model
