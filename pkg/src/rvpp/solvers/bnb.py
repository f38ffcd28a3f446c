"""Bundled branch-and-bound backend.

Best-bound search over the binaries with an LP relaxation per node.  Nodes
only tighten variable bounds, so the row data is split once and reused.
Meant for desk-scale models; no cuts, no presolve.
"""

from __future__ import annotations

import heapq
import itertools
import time

import numpy as np

from ..model import MilpModel
from . import INFEASIBLE, NODE_LIMIT, OPTIMAL, TIME_LIMIT, UNBOUNDED, RawResult, SolveOptions
from .lp import solve_lp_full, split_rows

MAX_NODES = 200_000


def solve_raw(model: MilpModel, options: SolveOptions) -> RawResult:
    arr = model.to_arrays()
    split = split_rows(arr.A, arr.row_lo, arr.row_hi)
    bins = model.binaries()
    start = time.perf_counter()
    tick = itertools.count()

    def relax(lb, ub):
        res = solve_lp_full(arr.c, arr.A, arr.row_lo, arr.row_hi, lb, ub, True, split)
        if res.status == 0:
            return -float(res.fun), np.asarray(res.x), 0
        return None, None, res.status

    def try_rounding(x, lb, ub):
        lb2, ub2 = lb.copy(), ub.copy()
        r = np.round(x[bins])
        lb2[bins] = ub2[bins] = r
        val, xr, _ = relax(lb2, ub2)
        return val, xr

    root_val, root_x, code = relax(arr.lb, arr.ub)
    if root_val is None:
        return RawResult(UNBOUNDED if code == 3 else INFEASIBLE, message="root relaxation")

    best_val, best_x = -np.inf, None
    heap = [(-root_val, next(tick), arr.lb.copy(), arr.ub.copy(), root_val, root_x)]
    nodes = 0
    while heap:
        over_time = time.perf_counter() - start > options.time_limit
        if over_time or nodes > (options.node_limit or MAX_NODES):
            bound = -heap[0][0] if heap else best_val
            return RawResult(TIME_LIMIT if over_time else NODE_LIMIT, best_x, bound, f"stopped after {nodes} nodes")
        neg_bound, _, lb, ub, val, x = heapq.heappop(heap)
        bound = -neg_bound
        if best_x is not None and bound - best_val <= options.rel_gap * max(1.0, abs(best_val)):
            heapq.heappush(heap, (neg_bound, next(tick), lb, ub, val, x))
            break
        nodes += 1
        frac = np.abs(x[bins] - np.round(x[bins])) if bins.size else np.zeros(0)
        if frac.size == 0 or frac.max() <= 1e-9:
            if val > best_val:
                best_val, best_x = val, x
            continue
        if nodes == 1 or nodes % 50 == 0:
            rv, rx = try_rounding(x, lb, ub)
            if rv is not None and rv > best_val:
                best_val, best_x = rv, rx
        j = bins[int(np.argmax(frac))]
        for side in (np.round(x[j]), 1.0 - np.round(x[j])):
            lb2, ub2 = lb.copy(), ub.copy()
            lb2[j] = ub2[j] = side
            cv, cx, _ = relax(lb2, ub2)
            if cv is None:
                continue
            if best_x is not None and cv - best_val <= options.rel_gap * max(1.0, abs(best_val)):
                continue
            heapq.heappush(heap, (-cv, next(tick), lb2, ub2, cv, cx))
    if best_x is None:
        return RawResult(INFEASIBLE, message=f"no integer point after {nodes} nodes")
    bound = max(best_val, -heap[0][0]) if heap else best_val
    return RawResult(OPTIMAL, best_x, bound, f"{nodes} nodes")
