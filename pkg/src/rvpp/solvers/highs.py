"""Backend using the HiGHS MILP solver through ``scipy.optimize.milp``.

HiGHS is deterministic for a fixed model, so ``seed`` and ``threads`` need no
forwarding; scipy does not expose them.
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, milp

from ..model import MilpModel
from . import FEASIBLE_GAP, INFEASIBLE, NODE_LIMIT, OPTIMAL, TIME_LIMIT, UNBOUNDED, RawResult, SolveOptions


def solve_raw(model: MilpModel, options: SolveOptions) -> RawResult:
    arr = model.to_arrays()
    cons = [LinearConstraint(arr.A, arr.row_lo, arr.row_hi)] if model.n_constrs else []
    opts = {"mip_rel_gap": options.rel_gap, "time_limit": options.time_limit, "presolve": True, "disp": False}
    if options.node_limit is not None:
        opts["node_limit"] = int(options.node_limit)
    res = milp(-arr.c, constraints=cons, integrality=arr.integrality, bounds=Bounds(arr.lb, arr.ub),
               options=opts)
    bound = -float(res.mip_dual_bound) if getattr(res, "mip_dual_bound", None) is not None else np.nan
    if res.status == 0:
        return RawResult(OPTIMAL, np.asarray(res.x), bound, res.message)
    if res.status == 1:
        x = None if res.x is None else np.asarray(res.x)
        return RawResult(TIME_LIMIT, x, bound, res.message)
    if res.status == 2:
        return RawResult(INFEASIBLE, message=res.message)
    if res.status == 3:
        return RawResult(UNBOUNDED, message=res.message)
    if "Solution limit reached" in res.message:  # how HiGHS reports the node cap
        x = None if res.x is None else np.asarray(res.x)
        return RawResult(NODE_LIMIT, x, bound, res.message)
    return RawResult(INFEASIBLE if res.x is None else FEASIBLE_GAP,
                     None if res.x is None else np.asarray(res.x), bound, res.message)
