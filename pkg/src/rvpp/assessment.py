"""Out-of-sample assessment of fixed bids.

Scenarios draw each uncertain value inside its forecast band.  Per period and
series a side is picked with probability proportional to the band widths,
then a Weibull magnitude with shape ``k`` and scale set so the band edge is
its 99th percentile, clipped to the band.  Every scenario has its own random
stream keyed by ``(seed, index)``.  Demand profiles of one demand share the
standardized draws, so choosing a different profile does not change luck.

Bids are then re-dispatched scenario by scenario: units move freely within
the realized capabilities and any energy shortfall against the DAM bid is
bought back at ``penalty_factor`` times the median DAM price.
"""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field
from typing import Any, Iterable

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from .instance import RvppInstance
from .solution import BidSolution, solve_instance
from .solvers import LIMITS, OPTIMAL, SolveOptions

log = logging.getLogger(__name__)

PROFIT_ROBUST = "profit_robust"
ENERGY_ROBUST = "energy_robust"
METHODS = (PROFIT_ROBUST, ENERGY_ROBUST)
SWEEP_HEADER = ("budget", "method", "pi_av", "k_av", "net")
# EUR decimals in the sweep table; far below the Monte-Carlo error, and it hides
# last-bit LP noise between models that reach the same bids
SWEEP_DECIMALS = 6


# ---------------------------------------------------------------- scenarios


def weibull_scale(width: float, shape: float = 2.0, quantile: float = 0.99) -> float:
    """Scale putting ``width`` at the given quantile of a Weibull(shape)."""
    return width / (-np.log1p(-quantile)) ** (1.0 / shape)


def band_sample(median, neg, pos, side_u, mag_z, shape: float = 2.0, quantile: float = 0.99):
    """Map standardized draws onto the band ``[median - neg, median + pos]``.

    ``side_u`` are uniforms choosing the side, ``mag_z`` standard Weibull
    draws.  Zero-width periods return the median.
    """
    median, neg, pos = (np.asarray(a, dtype=float) for a in (median, neg, pos))
    total = neg + pos
    with np.errstate(invalid="ignore", divide="ignore"):
        p_neg = np.where(total > 0, neg / np.where(total > 0, total, 1.0), 0.0)
    down = side_u < p_neg
    width = np.where(down, neg, pos)
    mag = np.minimum(weibull_scale(1.0, shape, quantile) * mag_z * width, width)
    return median + np.where(down, -mag, mag)


@dataclass
class ScenarioSet:
    """``count`` sampled days; arrays are (count, T)."""

    seed: int
    count: int
    dam: np.ndarray
    sr_up: np.ndarray
    sr_down: np.ndarray
    ndres: dict[str, np.ndarray]
    demand: dict[str, dict[str, np.ndarray]]
    shape: float = 2.0

    def as_dict(self) -> dict[str, Any]:
        return {"seed": self.seed, "count": self.count, "shape": self.shape, "dam": self.dam.tolist(),
                "sr_up": self.sr_up.tolist(), "sr_down": self.sr_down.tolist(),
                "ndres": {k: v.tolist() for k, v in self.ndres.items()},
                "demand": {d: {p: v.tolist() for p, v in ps.items()} for d, ps in self.demand.items()}}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ScenarioSet":
        arr = lambda v: np.asarray(v, dtype=float)
        return cls(int(data["seed"]), int(data["count"]), arr(data["dam"]), arr(data["sr_up"]), arr(data["sr_down"]),
                   {k: arr(v) for k, v in data["ndres"].items()},
                   {d: {p: arr(v) for p, v in ps.items()} for d, ps in data["demand"].items()},
                   float(data.get("shape", 2.0)))

    @classmethod
    def median(cls, inst: RvppInstance, count: int = 1) -> "ScenarioSet":
        """Every scenario at the median forecasts."""
        rep = lambda a: np.tile(np.asarray(a, dtype=float), (count, 1))
        pr = inst.prices
        return cls(0, count, rep(pr.dam_median), rep(pr.sr_up_median), rep(pr.sr_down_median),
                   {u.id: rep(u.p_median) for u in inst.ndres_units},
                   {d.id: {p.profile_id: rep(p.p_median) for p in d.profiles} for d in inst.demands})


def generate_scenarios(inst: RvppInstance, count: int, seed: int, shape: float = 2.0,
                       quantile: float = 0.99) -> ScenarioSet:
    if count <= 0:
        raise ValueError("count must be positive")
    n, pr = inst.n_periods, inst.prices
    z = np.zeros(n)
    n_series = 3 + len(inst.ndres_units) + len(inst.demands)
    draws = np.empty((count, n_series, 2, n))
    for i in range(count):
        rng = np.random.default_rng(np.random.SeedSequence([int(seed), i]))
        draws[i, :, 0] = rng.random((n_series, n))
        draws[i, :, 1] = rng.weibull(shape, (n_series, n))
    sample = lambda s, med, neg, pos: band_sample(med, neg, pos, draws[:, s, 0], draws[:, s, 1], shape, quantile)
    dam = sample(0, pr.dam_median, pr.dam_dev_neg, pr.dam_dev_pos)
    up = sample(1, pr.sr_up_median, pr.sr_up_dev_neg, z)
    dn = sample(2, pr.sr_down_median, pr.sr_down_dev_neg, z)
    ndres = {u.id: sample(3 + r, u.p_median, u.p_dev_neg, z) for r, u in enumerate(inst.ndres_units)}
    base = 3 + len(inst.ndres_units)
    demand = {d.id: {p.profile_id: sample(base + j, p.p_median, z, p.p_dev_pos) for p in d.profiles}
              for j, d in enumerate(inst.demands)}
    return ScenarioSet(int(seed), int(count), dam, up, dn, ndres, demand, shape)


# ---------------------------------------------------------------- re-dispatch


class Redispatch:
    """Least-cost delivery of fixed bids for one profile choice.

    Per period: unit outputs and reserve shares, demand reserve shares, an
    energy shortfall ``k`` (penalized), an energy surplus (spilled, free) and
    reserve shortfalls (penalized at ``reserve_penalty`` times the median
    reserve price, zero by default).  Consumption is fixed by the scenario;
    where it alone breaks a ramp or energy limit the corresponding reserve
    rows are tightened to zero instead of failing.
    """

    def __init__(self, inst: RvppInstance, bids: BidSolution, penalty_factor: float = 3.0,
                 reserve_penalty: float = 0.0):
        self.inst, self.bids = inst, bids
        n, R, D, dt = inst.n_periods, len(inst.ndres_units), len(inst.demands), inst.dt
        self.n, self.R, self.D = n, R, D
        cnt = iter(range(10**9))
        take = lambda *shape: np.array([next(cnt) for _ in range(int(np.prod(shape)))]).reshape(shape)
        self.i_p, self.i_ru, self.i_rd = take(R, n), take(R, n), take(R, n)
        self.i_dru, self.i_drd = take(D, n), take(D, n)
        self.i_k, self.i_e, self.i_su, self.i_sd = take(n), take(n), take(n), take(n)
        self.n_x = next(cnt)
        self.profiles = [next(p for p in d.profiles if p.profile_id == bids.profile[d.id]) for d in inst.demands]
        pr = inst.prices
        self.z = penalty_factor * np.maximum(pr.dam_median, 0.0)
        c = np.zeros(self.n_x)
        for r, u in enumerate(inst.ndres_units):
            c[self.i_p[r]] = u.om_cost * dt
        c[self.i_k] = self.z * dt
        c[self.i_su] = reserve_penalty * pr.sr_up_median
        c[self.i_sd] = reserve_penalty * pr.sr_down_median
        self.c = c
        self.revenue_fixed = -sum(p.cost for p in self.profiles)
        eq_rows, ub_rows = [], []
        for k in range(n):
            row = {int(self.i_p[r, k]): 1.0 for r in range(R)}
            row[int(self.i_e[k])] = -1.0
            row[int(self.i_k[k])] = 1.0
            eq_rows.append(row)
            ub_rows.append({**{int(self.i_ru[r, k]): -1.0 for r in range(R)},
                            **{int(self.i_dru[j, k]): -1.0 for j in range(D)}, int(self.i_su[k]): -1.0})
            ub_rows.append({**{int(self.i_rd[r, k]): -1.0 for r in range(R)},
                            **{int(self.i_drd[j, k]): -1.0 for j in range(D)}, int(self.i_sd[k]): -1.0})
            for r in range(R):
                ub_rows.append({int(self.i_p[r, k]): 1.0, int(self.i_ru[r, k]): 1.0})
                ub_rows.append({int(self.i_p[r, k]): -1.0, int(self.i_rd[r, k]): 1.0})
            for j in range(D):
                ru, rd = int(self.i_dru[j, k]), int(self.i_drd[j, k])
                ub_rows += [{ru: 1.0}, {ru: 1.0}, {rd: 1.0}, {rd: 1.0}, {ru: 1.0}, {rd: 1.0}]
                if k > 0:
                    ub_rows.append({rd: 1.0, int(self.i_dru[j, k - 1]): 1.0})
                    ub_rows.append({int(self.i_drd[j, k - 1]): 1.0, ru: 1.0})
        for j in range(D):
            ub_rows.append({int(self.i_dru[j, k]): 1.0 for k in range(n)})
        self.A_eq = self._matrix(eq_rows)
        self.A_ub = self._matrix(ub_rows)
        ub = np.full(self.n_x, np.inf)
        for r, u in enumerate(inst.ndres_units):
            ub[self.i_p[r]] = u.p_max
        self.bounds = np.column_stack([np.zeros(self.n_x), ub])

    def _matrix(self, rows):
        data, ri, ci = [], [], []
        for i, row in enumerate(rows):
            for v, a in row.items():
                ri.append(i)
                ci.append(v)
                data.append(a)
        return sp.csr_matrix((data, (ri, ci)), shape=(len(rows), self.n_x))

    def rhs(self, avail: np.ndarray, cons: np.ndarray):
        """Right-hand sides for realized availability (R, T) and consumption (D, T)."""
        inst, b, dt = self.inst, self.bids, self.inst.dt
        t_sr = inst.rules.t_sr
        b_eq = np.asarray(b.p_da, dtype=float) + cons.sum(axis=0)
        out = []
        for k in range(self.n):
            out += [-float(b.r_up[k]), -float(b.r_dn[k])]
            for r, u in enumerate(inst.ndres_units):
                out += [avail[r, k], -min(u.p_min, avail[r, k])]
            for j, d in enumerate(inst.demands):
                prof, c = self.profiles[j], cons[j]
                out += [d.beta_up[k] * prof.p_median[k], max(0.0, c[k] - d.p_min),
                        d.beta_down[k] * prof.p_median[k], max(0.0, d.p_max - c[k]),
                        t_sr * d.sr_ramp_up, t_sr * d.sr_ramp_down]
                if k > 0:
                    out += [max(0.0, d.ramp_up * dt - (c[k] - c[k - 1])),
                            max(0.0, d.ramp_down * dt - (c[k - 1] - c[k]))]
        for j, d in enumerate(inst.demands):
            out.append(max(0.0, float(cons[j].sum() * dt - d.e_min)))
        return np.array(out), b_eq

    def solve(self, avail, cons):
        b_ub, b_eq = self.rhs(np.asarray(avail, float).reshape(self.R, self.n),
                              np.asarray(cons, float).reshape(self.D, self.n))
        res = linprog(self.c, A_ub=self.A_ub, b_ub=b_ub, A_eq=self.A_eq, b_eq=b_eq, bounds=self.bounds,
                      method="highs")
        if res.status != 0:
            raise RuntimeError(f"re-dispatch failed although slacks absorb any shortfall: {res.message}")
        x = np.asarray(res.x)
        return x


@dataclass
class AssessmentResult:
    pi_av: float
    k_av: float
    net: float
    profit: np.ndarray = field(repr=False)
    penalty: np.ndarray = field(repr=False)
    shortfall_mwh: np.ndarray = field(repr=False)

    @property
    def count(self) -> int:
        return int(self.profit.size)

    def as_dict(self) -> dict[str, Any]:
        return {"pi_av": self.pi_av, "k_av": self.k_av, "net": self.net, "count": self.count,
                "profit": self.profit.tolist(), "penalty": self.penalty.tolist(),
                "shortfall_mwh": self.shortfall_mwh.tolist()}


def evaluate_bids(bids: BidSolution, scenarios: ScenarioSet, inst: RvppInstance,
                  penalty_factor: float = 3.0, reserve_penalty: float = 0.0) -> AssessmentResult:
    """Average operating profit, penalty and net profit of ``bids``."""
    rd = Redispatch(inst, bids, penalty_factor, reserve_penalty)
    dt = inst.dt
    p_da, r_up, r_dn = (np.asarray(a, dtype=float) for a in (bids.p_da, bids.r_up, bids.r_dn))
    N = scenarios.count
    profit, penalty, short = np.zeros(N), np.zeros(N), np.zeros(N)
    for w in range(N):
        avail = np.array([scenarios.ndres[u.id][w] for u in inst.ndres_units]).reshape(rd.R, rd.n)
        cons = np.array([scenarios.demand[d.id][bids.profile[d.id]][w] for d in inst.demands]).reshape(rd.D, rd.n)
        x = rd.solve(avail, cons)
        income = (np.dot(scenarios.dam[w], p_da) * dt + np.dot(scenarios.sr_up[w], r_up)
                  + np.dot(scenarios.sr_down[w], r_dn))
        op_cost = sum(u.om_cost * dt * x[rd.i_p[r]].sum() for r, u in enumerate(inst.ndres_units))
        k = x[rd.i_k]
        pen = float(np.dot(rd.z, k) * dt + np.dot(rd.c[rd.i_su], x[rd.i_su]) + np.dot(rd.c[rd.i_sd], x[rd.i_sd]))
        profit[w] = income - op_cost + rd.revenue_fixed
        penalty[w] = pen
        short[w] = float(k.sum() * dt)
    pi_av, k_av = float(profit.mean()), float(penalty.mean())
    return AssessmentResult(pi_av, k_av, pi_av - k_av, profit, penalty, short)


# ---------------------------------------------------------------- sweep


@dataclass
class SweepRow:
    budget: int
    method: str
    pi_av: float
    k_av: float
    net: float
    status: str = "ok"
    objective: float = float("nan")

    def as_tuple(self):
        return (self.budget, self.method, self.pi_av, self.k_av, self.net)


def solve_method(inst: RvppInstance, method: str, options: SolveOptions | None = None,
                 accept_incumbent: bool = False) -> BidSolution | None:
    """Bids of one method, or None when it finds no plan.

    With ``accept_incumbent`` a MILP stopped by its time or node limit still
    hands back its best plan; ``status`` on the solution says so.
    """
    if method == PROFIT_ROBUST:
        sol, res, _ = solve_instance(inst, options)
        if sol is None:
            return None
        return sol if res.ok or (accept_incumbent and res.status in LIMITS) else None
    if method == ENERGY_ROBUST:
        from .baseline import solve_energy_robust
        sol = solve_energy_robust(inst, options)
        return sol if np.isfinite(sol.objective) else None
    raise ValueError(f"unknown method {method!r}")


def budget_sweep(inst: RvppInstance, budgets: Iterable[int], methods: Iterable[str] = METHODS,
                 count: int = 1000, seed: int = 0, options: SolveOptions | None = None,
                 scenarios: ScenarioSet | None = None, penalty_factor: float = 3.0,
                 reserve_penalty: float = 0.0, include_demand: bool = False,
                 accept_incumbent: bool = False) -> list[SweepRow]:
    """One row per (budget, method); market and renewable budgets all set to b.

    All cells share one scenario set.  A failing cell is reported with
    ``status`` set and NaN values; the sweep goes on.  ``status`` is ``ok`` for
    proven optima and the solver status otherwise.
    """
    scen = scenarios if scenarios is not None else generate_scenarios(inst, count, seed)
    rows = []
    for b in budgets:
        cell = inst.with_uniform_budget(int(b), demand=include_demand)
        for method in methods:
            try:
                sol = solve_method(cell, method, options, accept_incumbent)
                if sol is None:
                    rows.append(SweepRow(int(b), method, np.nan, np.nan, np.nan, "infeasible"))
                    continue
                res = evaluate_bids(sol, scen, cell, penalty_factor, reserve_penalty)
                status = "ok" if sol.status == OPTIMAL else sol.status
                rows.append(SweepRow(int(b), method, res.pi_av, res.k_av, res.net, status, float(sol.objective)))
            except Exception as exc:  # keep sweeping
                log.warning("sweep cell b=%s method=%s failed: %s", b, method, exc)
                rows.append(SweepRow(int(b), method, np.nan, np.nan, np.nan, f"error: {exc}"))
    return rows


def sweep_csv(rows: list[SweepRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_HEADER)
    for r in rows:
        w.writerow([r.budget, r.method] + [f"{float(v):.{SWEEP_DECIMALS}f}" for v in (r.pi_av, r.k_av, r.net)])
    return buf.getvalue()
