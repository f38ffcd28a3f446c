"""Solve contract shared by every backend.

The backend is chosen by ``SolveOptions.backend`` or, when that is ``None``,
by the ``RVPP_SOLVER`` environment variable (``highs`` or ``bnb``), defaulting
to ``highs``.  Every returned solution is re-checked against the model here,
independently of the backend's own tolerances.
"""

from __future__ import annotations

import os
import time
from dataclasses import dataclass, field, replace

import numpy as np

from ..model import MilpModel

OPTIMAL = "optimal"
FEASIBLE_GAP = "feasible_gap"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
TIME_LIMIT = "time_limit"
NODE_LIMIT = "node_limit"
LIMITS = (TIME_LIMIT, NODE_LIMIT)

ENV_VAR = "RVPP_SOLVER"
BACKENDS = ("highs", "bnb")

FEAS_TOL = 1e-6
INT_TOL = 1e-6


class BackendUnavailable(EnvironmentError):
    pass


@dataclass(frozen=True)
class SolveOptions:
    rel_gap: float = 1e-6
    time_limit: float = 300.0
    threads: int = 1
    seed: int = 0
    backend: str | None = None
    polish: bool = True
    node_limit: int | None = None  # deterministic alternative to the wall-clock limit

    def __post_init__(self):
        if not 0 < self.rel_gap < 1:
            raise ValueError(f"rel_gap must lie in (0, 1), got {self.rel_gap}")
        if not self.time_limit > 0:
            raise ValueError(f"time_limit must be positive, got {self.time_limit}")
        if self.node_limit is not None and self.node_limit < 1:
            raise ValueError(f"node_limit must be at least 1, got {self.node_limit}")


@dataclass(frozen=True)
class SolveResult:
    status: str
    objective: float
    x: np.ndarray | None
    solve_time: float
    backend: str
    max_violation: float = 0.0
    max_fractionality: float = 0.0
    bound: float = np.nan
    message: str = ""

    @property
    def ok(self) -> bool:
        return self.status in (OPTIMAL, FEASIBLE_GAP)

    def variable_values(self, model: MilpModel) -> dict[str, float]:
        if self.x is None:
            return {}
        return {v.name: float(self.x[i]) for i, v in enumerate(model.variables)}


@dataclass
class RawResult:
    """What a backend hands back before verification."""

    status: str
    x: np.ndarray | None = None
    bound: float = np.nan
    message: str = ""
    extra: dict = field(default_factory=dict)


def backend_name(options: SolveOptions) -> str:
    name = options.backend or os.environ.get(ENV_VAR, "").strip().lower() or "highs"
    if name not in BACKENDS:
        raise BackendUnavailable(f"unknown solver backend {name!r}; choose one of {BACKENDS}")
    return name


def _backend(name: str):
    if name == "highs":
        from . import highs
        return highs.solve_raw
    from . import bnb
    return bnb.solve_raw


def fractionality(model: MilpModel, x: np.ndarray) -> float:
    b = model.binaries()
    if b.size == 0:
        return 0.0
    return float(np.max(np.abs(x[b] - np.round(x[b]))))


def polish(model: MilpModel, x: np.ndarray) -> np.ndarray | None:
    """Round binaries and re-solve the continuous part exactly.

    Big-M rows amplify tiny integrality slack, so the continuous values are
    recomputed with the binaries pinned to exact 0/1.
    """
    from .lp import solve_lp

    arr = model.to_arrays()
    b = model.binaries()
    if b.size == 0:
        return x
    lb, ub = arr.lb.copy(), arr.ub.copy()
    lb[b] = ub[b] = np.round(x[b])
    res = solve_lp(arr.c, arr.A, arr.row_lo, arr.row_hi, lb, ub)
    if res is None:
        return None
    out = res
    out[b] = np.round(x[b])
    return out


def solve(model: MilpModel, options: SolveOptions | None = None) -> SolveResult:
    options = options or SolveOptions()
    name = backend_name(options)
    run = _backend(name)
    start = time.perf_counter()
    raw = run(model, options)
    x = raw.x
    if x is not None and options.polish and raw.status in (OPTIMAL, FEASIBLE_GAP, *LIMITS):
        px = polish(model, x)
        if px is not None:
            x = px
    elapsed = time.perf_counter() - start
    if x is None:
        return SolveResult(raw.status, np.nan, None, elapsed, name, bound=raw.bound, message=raw.message)
    viol, where = model.max_violation(x)
    frac = fractionality(model, x)
    status, msg = raw.status, raw.message
    if status == OPTIMAL and (viol > FEAS_TOL or frac > INT_TOL):
        status = FEASIBLE_GAP
        msg = f"backend solution fails re-check: violation {viol:.3g} at {where}, fractionality {frac:.3g}"
    return SolveResult(status, model.objective_value(x), x, elapsed, name, viol, frac, raw.bound, msg)
