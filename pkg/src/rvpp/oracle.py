"""Brute-force worst-case oracle.

Everything here is built from the physical constraints and the raw
uncertainty sets, without the big-M machinery of the MILP.

Realizations split into an energy part (renewable and demand deviation flags)
and a price part (DAM, up and down reserve price flags).  The certified value
is the game

    V* = max over profile choices u of
         min over energy realizations E of
         max over dispatch plans x of
         min over price realizations P of profit(x; u, E, P)

The demand profile is a day-ahead commitment, so it is fixed before the
energy deviations are known.  The RVPP then bids knowing which energy
deviations it has to cover, and its bid must survive every admissible price
realization.  The inner max-min is solved exactly as one LP per (u, E), with
an epigraph row per price pattern and block, so it ranges over every plan and
not just a candidate list.  When there is no energy uncertainty this reduces
to holding the bids fixed against all price realizations.  Energy
realizations with no feasible plan count as ``-inf``.

``formulation_value`` enumerates a second quantity: the value under the
MILP's own selection rule, where flags must be top-Gamma sets of
price-weighted reductions.  The two coincide on most instances but not all.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Any, Iterator

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from .instance import RvppInstance

DEFAULT_GUARD = 10**7


class EnumerationTooLarge(RuntimeError):
    def __init__(self, count: int, limit: float):
        super().__init__(f"{count} admissible realizations exceed the enumeration guard {int(limit)}")
        self.count = count


@dataclass(frozen=True)
class UncertaintyRealization:
    dam_flags: tuple[int, ...]
    sr_up_flags: tuple[int, ...]
    sr_down_flags: tuple[int, ...]
    ndres_flags: dict[str, tuple[int, ...]]
    demand_flags: dict[str, tuple[int, ...]]

    def __hash__(self):
        return hash((self.dam_flags, self.sr_up_flags, self.sr_down_flags,
                     tuple(sorted(self.ndres_flags.items())), tuple(sorted(self.demand_flags.items()))))

    @property
    def energy(self) -> "EnergyRealization":
        return EnergyRealization(self.ndres_flags, self.demand_flags)

    def as_dict(self) -> dict[str, Any]:
        return {"dam": list(self.dam_flags), "sr_up": list(self.sr_up_flags), "sr_down": list(self.sr_down_flags),
                "ndres": {k: list(v) for k, v in self.ndres_flags.items()},
                "demand": {k: list(v) for k, v in self.demand_flags.items()}}


@dataclass(frozen=True)
class EnergyRealization:
    ndres_flags: dict[str, tuple[int, ...]]
    demand_flags: dict[str, tuple[int, ...]]

    def key(self):
        return (tuple(sorted(self.ndres_flags.items())), tuple(sorted(self.demand_flags.items())))


# ---------------------------------------------------------------- enumeration


def dam_patterns(n: int, gamma: int) -> list[tuple[int, ...]]:
    out = []
    for periods in itertools.combinations(range(n), gamma):
        for signs in itertools.product((-1, 1), repeat=gamma):
            flags = [0] * n
            for k, s in zip(periods, signs):
                flags[k] = s
            out.append(tuple(flags))
    return out


def subset_patterns(n: int, gamma: int) -> list[tuple[int, ...]]:
    out = []
    for periods in itertools.combinations(range(n), gamma):
        flags = [0] * n
        for k in periods:
            flags[k] = 1
        out.append(tuple(flags))
    return out


def energy_count(inst: RvppInstance) -> int:
    n, b = inst.n_periods, inst.budgets
    c = 1
    for u in inst.ndres_units:
        c *= math.comb(n, b.ndres(u.id))
    for d in inst.demands:
        c *= math.comb(n, b.demand(d.id))
    return c


def price_count(inst: RvppInstance) -> int:
    n, b = inst.n_periods, inst.budgets
    return math.comb(n, b.gamma_dam) * 2**b.gamma_dam * math.comb(n, b.gamma_sr_up) * math.comb(n, b.gamma_sr_down)


def realization_count(inst: RvppInstance) -> int:
    return energy_count(inst) * price_count(inst)


def energy_realizations(inst: RvppInstance) -> Iterator[EnergyRealization]:
    n, b = inst.n_periods, inst.budgets
    units = [u.id for u in inst.ndres_units]
    dems = [d.id for d in inst.demands]
    choices = [subset_patterns(n, b.ndres(i)) for i in units] + [subset_patterns(n, b.demand(i)) for i in dems]
    for combo in itertools.product(*choices):
        yield EnergyRealization(dict(zip(units, combo[:len(units)])), dict(zip(dems, combo[len(units):])))


def enumerate_realizations(inst: RvppInstance, guard: float = DEFAULT_GUARD) -> Iterator[UncertaintyRealization]:
    """Every admissible realization exactly once, in a fixed order."""
    count = realization_count(inst)
    if count > guard:
        raise EnumerationTooLarge(count, guard)
    n, b = inst.n_periods, inst.budgets
    for dam in dam_patterns(n, b.gamma_dam):
        for up in subset_patterns(n, b.gamma_sr_up):
            for dn in subset_patterns(n, b.gamma_sr_down):
                for e in energy_realizations(inst):
                    yield UncertaintyRealization(dam, up, dn, e.ndres_flags, e.demand_flags)


def profile_choices(inst: RvppInstance) -> list[dict[str, int]]:
    """Every joint choice of one profile index per demand."""
    dems = inst.demands
    return [dict(zip([d.id for d in dems], combo))
            for combo in itertools.product(*[range(len(d.profiles)) for d in dems])]


def realized_prices(inst: RvppInstance, dam: tuple[int, ...], up: tuple[int, ...], dn: tuple[int, ...]):
    pr = inst.prices
    f = np.asarray(dam, dtype=float)
    lam = pr.dam_median - pr.dam_dev_neg * (f < 0) + pr.dam_dev_pos * (f > 0)
    lam_up = pr.sr_up_median - pr.sr_up_dev_neg * np.asarray(up, dtype=float)
    lam_dn = pr.sr_down_median - pr.sr_down_dev_neg * np.asarray(dn, dtype=float)
    return lam, lam_up, lam_dn


def realized_energy(inst: RvppInstance, energy: EnergyRealization, choice: dict[str, int]):
    """Available renewable output and fixed demand consumption per period."""
    avail = np.array([u.p_median - u.p_dev_neg * np.asarray(energy.ndres_flags[u.id], dtype=float)
                      for u in inst.ndres_units]).reshape(len(inst.ndres_units), inst.n_periods)
    cons = np.array([d.profiles[choice[d.id]].p_median
                     + d.profiles[choice[d.id]].p_dev_pos * np.asarray(energy.demand_flags[d.id], dtype=float)
                     for d in inst.demands]).reshape(len(inst.demands), inst.n_periods)
    return avail, cons


# ------------------------------------------------------------- dispatch LP


class DispatchLP:
    """Physical dispatch for one profile choice.

    Decision variables per period: net bid ``p_da``, reserve bids ``r_up``,
    ``r_dn``; per renewable unit output and reserve shares; per demand
    reserve shares.  Realized energy enters only through the right-hand
    sides, which are affine in (available output, consumption).
    """

    def __init__(self, inst: RvppInstance, choice: dict[str, int]):
        self.inst = inst
        self.choice = choice
        n, R, D = inst.n_periods, len(inst.ndres_units), len(inst.demands)
        self.n, self.R, self.D = n, R, D
        idx = itertools.count()
        self.i_p = np.array([next(idx) for _ in range(n)])
        self.i_up = np.array([next(idx) for _ in range(n)])
        self.i_dn = np.array([next(idx) for _ in range(n)])
        self.i_pr = np.array([[next(idx) for _ in range(n)] for _ in range(R)]).reshape(R, n)
        self.i_rur = np.array([[next(idx) for _ in range(n)] for _ in range(R)]).reshape(R, n)
        self.i_rdr = np.array([[next(idx) for _ in range(n)] for _ in range(R)]).reshape(R, n)
        self.i_rud = np.array([[next(idx) for _ in range(n)] for _ in range(D)]).reshape(D, n)
        self.i_rdd = np.array([[next(idx) for _ in range(n)] for _ in range(D)]).reshape(D, n)
        self.n_x = next(idx)
        self.n_par = R * n + D * n  # avail (R x n) then consumption (D x n)
        self._eq, self._ub = [], []
        self._build()
        self.A_eq, self.b_eq0, self.B_eq = self._stack(self._eq)
        self.A_ub, self.b_ub0, self.B_ub = self._stack(self._ub)
        cap_r, cap_d = inst.total_ndres_capacity, inst.total_demand_capacity
        lb = np.zeros(self.n_x)
        ub = np.full(self.n_x, np.inf)
        lb[self.i_p], ub[self.i_p] = -cap_d, cap_r
        ub[self.i_up] = inst.rules.kappa * cap_r
        for r, u in enumerate(inst.ndres_units):
            ub[self.i_pr[r]] = ub[self.i_rur[r]] = ub[self.i_rdr[r]] = u.p_max
        for j, d in enumerate(inst.demands):
            ub[self.i_rud[j]] = ub[self.i_rdd[j]] = d.p_max
        self.lb, self.ub = lb, ub
        self.profile_cost = sum(d.profiles[choice[d.id]].cost for d in inst.demands)
        self.unit_cost = np.zeros(self.n_x)
        for r, u in enumerate(inst.ndres_units):
            self.unit_cost[self.i_pr[r]] = u.om_cost * inst.dt

    def _par_avail(self, r, k):
        return r * self.n + k

    def _par_cons(self, j, k):
        return self.R * self.n + j * self.n + k

    def _row(self, store, coefs: dict[int, float], const: float, params: dict[int, float] | None = None):
        store.append((coefs, const, params or {}))

    def _stack(self, rows):
        m = len(rows)
        A = sp.lil_matrix((m, self.n_x))
        B = sp.lil_matrix((m, self.n_par))
        b0 = np.zeros(m)
        for i, (coefs, const, params) in enumerate(rows):
            for v, c in coefs.items():
                A[i, v] += c
            for q, c in params.items():
                B[i, q] += c
            b0[i] = const
        return A.tocsr(), b0, B.tocsr()

    def _build(self):
        inst, n = self.inst, self.n
        dt = inst.dt
        cap_r, cap_d = inst.total_ndres_capacity, inst.total_demand_capacity
        for k in range(n):
            cons = {self._par_cons(j, k): 1.0 for j in range(self.D)}
            base = {int(self.i_pr[r, k]): 1.0 for r in range(self.R)}
            base[int(self.i_p[k])] = -1.0
            # no call: sum p_r - p_da = sum consumption
            self._row(self._eq, dict(base), 0.0, cons)
            up = dict(base)
            up[int(self.i_up[k])] = -1.0
            for r in range(self.R):
                up[int(self.i_rur[r, k])] = 1.0
            for j in range(self.D):
                up[int(self.i_rud[j, k])] = 1.0
            self._row(self._eq, up, 0.0, cons)
            dn = dict(base)
            dn[int(self.i_dn[k])] = 1.0
            for r in range(self.R):
                dn[int(self.i_rdr[r, k])] = -1.0
            for j in range(self.D):
                dn[int(self.i_rdd[j, k])] = -1.0
            self._row(self._eq, dn, 0.0, cons)
            self._row(self._ub, {int(self.i_p[k]): 1.0, int(self.i_up[k]): 1.0}, cap_r)
            self._row(self._ub, {int(self.i_dn[k]): 1.0, int(self.i_p[k]): -1.0}, cap_d)
            self._row(self._eq, {int(self.i_up[k]): 1.0, int(self.i_dn[k]): -inst.rules.rho[k]}, 0.0)
            self._row(self._ub, {int(self.i_up[k]): 1.0}, inst.rules.kappa * cap_r)
            for r, u in enumerate(inst.ndres_units):
                self._row(self._ub, {int(self.i_rdr[r, k]): 1.0, int(self.i_pr[r, k]): -1.0}, -u.p_min)
                self._row(self._eq, {int(self.i_pr[r, k]): 1.0, int(self.i_rur[r, k]): 1.0}, 0.0,
                          {self._par_avail(r, k): 1.0})
            for j, d in enumerate(inst.demands):
                prof = d.profiles[self.choice[d.id]]
                c = self._par_cons(j, k)
                ru, rd = int(self.i_rud[j, k]), int(self.i_rdd[j, k])
                self._row(self._ub, {ru: 1.0}, d.beta_up[k] * prof.p_median[k])
                self._row(self._ub, {ru: 1.0}, -d.p_min, {c: 1.0})
                self._row(self._ub, {rd: 1.0}, d.beta_down[k] * prof.p_median[k])
                self._row(self._ub, {rd: 1.0}, d.p_max, {c: -1.0})
                self._row(self._ub, {ru: 1.0}, inst.rules.t_sr * d.sr_ramp_up)
                self._row(self._ub, {rd: 1.0}, inst.rules.t_sr * d.sr_ramp_down)
                if k > 0:
                    cp = self._par_cons(j, k - 1)
                    rup_prev, rdn_prev = int(self.i_rud[j, k - 1]), int(self.i_rdd[j, k - 1])
                    self._row(self._ub, {rd: 1.0, rup_prev: 1.0}, d.ramp_up * dt, {c: -1.0, cp: 1.0})
                    self._row(self._ub, {rdn_prev: 1.0, ru: 1.0}, d.ramp_down * dt, {cp: -1.0, c: 1.0})
        for j, d in enumerate(self.inst.demands):
            self._row(self._ub, {int(self.i_rud[j, k]): 1.0 for k in range(n)}, -d.e_min,
                      {self._par_cons(j, k): dt for k in range(n)})

    def params(self, avail: np.ndarray, cons: np.ndarray) -> np.ndarray:
        return np.concatenate([np.asarray(avail, float).reshape(-1), np.asarray(cons, float).reshape(-1)])

    def revenue_coefs(self, lam, lam_up, lam_dn) -> np.ndarray:
        c = np.zeros(self.n_x)
        c[self.i_p] = lam * self.inst.dt
        c[self.i_up] = lam_up
        c[self.i_dn] = lam_dn
        return c

    def _solve(self, c, A_ub, b_ub, A_eq, b_eq, lb, ub):
        res = linprog(-c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq,
                      bounds=np.column_stack([lb, ub]), method="highs")
        if res.status != 0:
            return -np.inf, None
        return -float(res.fun), np.asarray(res.x)

    def best_response(self, params: np.ndarray, lam, lam_up, lam_dn):
        """Best profit at fully known prices and energies."""
        c = self.revenue_coefs(lam, lam_up, lam_dn) - self.unit_cost
        val, x = self._solve(c, self.A_ub, self.b_ub0 + self.B_ub @ params,
                             self.A_eq, self.b_eq0 + self.B_eq @ params, self.lb, self.ub)
        return val - self.profile_cost, x

    def robust_response(self, params: np.ndarray, price_sets, fixed: np.ndarray | None = None,
                        extra_ub: np.ndarray | None = None):
        """Best plan against every price realization (exact epigraph LP).

        ``price_sets`` holds, per price block, the matrix of revenue
        coefficient rows over all admissible patterns of that block.  Blocks
        with known prices go into ``fixed`` as plain revenue coefficients;
        ``extra_ub`` adds rows ``extra_ub @ x <= 0``.
        """
        nb = len(price_sets)
        rows = [sp.hstack([sp.csr_matrix(-P), sp.csr_matrix(
            (np.ones(P.shape[0]), (np.arange(P.shape[0]), np.full(P.shape[0], b))), shape=(P.shape[0], nb))])
            for b, P in enumerate(price_sets)]
        blocks = [sp.hstack([self.A_ub, sp.csr_matrix((self.A_ub.shape[0], nb))])] + rows
        b_ub = [self.b_ub0 + self.B_ub @ params] + [np.zeros(P.shape[0]) for P in price_sets]
        if extra_ub is not None and len(extra_ub):
            blocks.append(sp.hstack([sp.csr_matrix(extra_ub), sp.csr_matrix((extra_ub.shape[0], nb))]))
            b_ub.append(np.zeros(extra_ub.shape[0]))
        A_ub = sp.vstack(blocks).tocsr()
        A_eq = sp.hstack([self.A_eq, sp.csr_matrix((self.A_eq.shape[0], nb))]).tocsr()
        b_eq = self.b_eq0 + self.B_eq @ params
        base = -self.unit_cost if fixed is None else fixed - self.unit_cost
        c = np.concatenate([base, np.ones(nb)])
        lb = np.concatenate([self.lb, np.full(nb, -np.inf)])
        ub = np.concatenate([self.ub, np.full(nb, np.inf)])
        val, x = self._solve(c, A_ub, np.concatenate(b_ub), A_eq, b_eq, lb, ub)
        if x is None:
            return -np.inf, None
        return val - self.profile_cost, x[: self.n_x]

    def fixed_bid_response(self, params: np.ndarray, p_da, r_up, r_dn, lam, lam_up, lam_dn, slack: float = 1e-7):
        """Profit of fixed market bids with the units re-dispatched at least cost.

        The bids are held within ``slack`` MW of the given values so that bids
        read back from a solver, exact only to its tolerance, stay feasible.
        """
        lb, ub = self.lb.copy(), self.ub.copy()
        for idx, v in ((self.i_p, p_da), (self.i_up, r_up), (self.i_dn, r_dn)):
            v = np.asarray(v, dtype=float)
            lb[idx], ub[idx] = v - slack, v + slack
        revenue = float(np.dot(lam, p_da) * self.inst.dt + np.dot(lam_up, r_up) + np.dot(lam_dn, r_dn))
        val, x = self._solve(-self.unit_cost, self.A_ub, self.b_ub0 + self.B_ub @ params,
                             self.A_eq, self.b_eq0 + self.B_eq @ params, lb, ub)
        if x is None:
            return -np.inf, None
        return revenue + val - self.profile_cost, x

    def dispatch(self, x: np.ndarray) -> dict[str, Any]:
        inst = self.inst
        return {
            "p_da": x[self.i_p].copy(), "r_up": x[self.i_up].copy(), "r_dn": x[self.i_dn].copy(),
            "ndres": {u.id: {"p": x[self.i_pr[r]].copy(), "r_up": x[self.i_rur[r]].copy(),
                             "r_dn": x[self.i_rdr[r]].copy()} for r, u in enumerate(inst.ndres_units)},
            "demand": {d.id: {"r_up": x[self.i_rud[j]].copy(), "r_dn": x[self.i_rdd[j]].copy()}
                       for j, d in enumerate(inst.demands)},
            "profile": {d.id: d.profiles[self.choice[d.id]].profile_id for d in inst.demands},
        }


def _price_blocks(inst: RvppInstance):
    """Per block: patterns and their revenue coefficient rows (over p, r_up, r_dn only)."""
    n, b, pr, dt = inst.n_periods, inst.budgets, inst.prices, inst.dt
    dam = dam_patterns(n, b.gamma_dam)
    up = subset_patterns(n, b.gamma_sr_up)
    dn = subset_patterns(n, b.gamma_sr_down)
    lam = np.array([realized_prices(inst, f, (0,) * n, (0,) * n)[0] for f in dam]) * dt
    lu = np.array([pr.sr_up_median - pr.sr_up_dev_neg * np.asarray(f) for f in up])
    ld = np.array([pr.sr_down_median - pr.sr_down_dev_neg * np.asarray(f) for f in dn])
    return (dam, up, dn), (lam, lu, ld)


def _embed(lp: DispatchLP, coefs: np.ndarray, which) -> np.ndarray:
    out = np.zeros((coefs.shape[0], lp.n_x))
    out[:, which] = coefs
    return out


def worst_prices(inst: RvppInstance, p_da, r_up, r_dn):
    """Revenue-minimizing price pattern per block for fixed bids, and that revenue."""
    (dam, up, dn), (lam, lu, ld) = _price_blocks(inst)
    rd = lam @ np.asarray(p_da)
    ru = lu @ np.asarray(r_up)
    rn = ld @ np.asarray(r_dn)
    i, j, k = int(np.argmin(rd)), int(np.argmin(ru)), int(np.argmin(rn))
    return (dam[i], up[j], dn[k]), float(rd[i] + ru[j] + rn[k])


def inner_best_response(inst: RvppInstance, realization: UncertaintyRealization):
    """Best profit with every uncertain value revealed; profile choice enumerated."""
    lam, lu, ld = realized_prices(inst, realization.dam_flags, realization.sr_up_flags, realization.sr_down_flags)
    best, best_x = -np.inf, None
    for choice in profile_choices(inst):
        lp = DispatchLP(inst, choice)
        avail, cons = realized_energy(inst, realization.energy, choice)
        val, x = lp.best_response(lp.params(avail, cons), lam, lu, ld)
        if val > best:
            best, best_x = val, lp.dispatch(x)
    return best, best_x


def deterministic_optimum(inst: RvppInstance):
    """Best profit at median prices and energies, i.e. the all-zero realization."""
    n = inst.n_periods
    zero = UncertaintyRealization((0,) * n, (0,) * n, (0,) * n,
                                  {u.id: (0,) * n for u in inst.ndres_units},
                                  {d.id: (0,) * n for d in inst.demands})
    return inner_best_response(inst, zero)


def evaluate_bid(inst: RvppInstance, p_da, r_up, r_dn, profile: dict[str, str],
                 realization: UncertaintyRealization) -> float:
    """Realized profit of fixed bids and profiles under one realization.

    Units are re-dispatched at least cost; ``-inf`` when the bids cannot be
    delivered.
    """
    choice = {d.id: [p.profile_id for p in d.profiles].index(profile[d.id]) for d in inst.demands}
    lp = DispatchLP(inst, choice)
    lam, lu, ld = realized_prices(inst, realization.dam_flags, realization.sr_up_flags, realization.sr_down_flags)
    avail, cons = realized_energy(inst, realization.energy, choice)
    val, _ = lp.fixed_bid_response(lp.params(avail, cons), p_da, r_up, r_dn, lam, lu, ld)
    return val


def bid_worst_case(inst: RvppInstance, p_da, r_up, r_dn, profile: dict[str, str],
                   energy: EnergyRealization) -> tuple[float, tuple]:
    """Worst profit of fixed bids over every price realization at one energy
    realization, with the units re-dispatched at least cost.

    Returns the value (``-inf`` if the bids cannot be delivered) and the
    minimizing price pattern ``(dam, sr_up, sr_down)``.
    """
    (pattern, _revenue) = worst_prices(inst, p_da, r_up, r_dn)
    real = UncertaintyRealization(*pattern, energy.ndres_flags, energy.demand_flags)
    return evaluate_bid(inst, p_da, r_up, r_dn, profile, real), pattern


def witness_realization(inst: RvppInstance, guard: float = DEFAULT_GUARD) -> tuple[UncertaintyRealization | None, float]:
    """The oracle's minimizing realization and the game value V*."""
    worst, _ = worst_case_value(inst, guard)
    if worst.plan is None:
        return None, worst.value
    (dam, up, dn), _ = worst_prices(inst, worst.plan["p_da"], worst.plan["r_up"], worst.plan["r_dn"])
    return UncertaintyRealization(dam, up, dn, worst.energy.ndres_flags, worst.energy.demand_flags), worst.value


@dataclass
class EnergyValue:
    """Best price-robust profit for one (profile choice, energy realization)."""

    energy: EnergyRealization
    value: float
    profile: dict[str, str]
    plan: dict[str, Any] | None


def worst_case_value(inst: RvppInstance, guard: float = DEFAULT_GUARD):
    """The game value V* and the full table it was taken from.

    Returns the entry attaining V* (the chosen profiles with their worst
    energy realization) and every evaluated entry.
    """
    count = realization_count(inst)
    if count > guard:
        raise EnumerationTooLarge(count, guard)
    _, (lam, lu, ld) = _price_blocks(inst)
    energies = list(energy_realizations(inst))
    values: list[EnergyValue] = []
    best: EnergyValue | None = None
    for choice in profile_choices(inst):
        lp = DispatchLP(inst, choice)
        sets = (_embed(lp, lam, lp.i_p), _embed(lp, lu, lp.i_up), _embed(lp, ld, lp.i_dn))
        names = {d.id: d.profiles[choice[d.id]].profile_id for d in inst.demands}
        worst: EnergyValue | None = None
        for e in energies:
            avail, cons = realized_energy(inst, e, choice)
            val, x = lp.robust_response(lp.params(avail, cons), sets)
            entry = EnergyValue(e, val, names, lp.dispatch(x) if x is not None else None)
            values.append(entry)
            if worst is None or val < worst.value:
                worst = entry
        if best is None or worst.value > best.value + 1e-12:
            best = worst
    return best, values


def _top_sets(scores: np.ndarray, gamma: int, tol: float) -> list[tuple[int, ...]]:
    """Every size-``gamma`` index set whose scores are nonnegative and dominate
    the rest (ties allowed)."""
    out = []
    for sel in itertools.combinations(range(len(scores)), gamma):
        chosen = scores[list(sel)]
        rest = np.delete(scores, list(sel))
        lo = chosen.min() if gamma else np.inf
        if gamma and lo < -tol:
            continue
        if rest.size and gamma and rest.max() > lo + tol:
            continue
        flags = [0] * len(scores)
        for k in sel:
            flags[k] = 1
        out.append(tuple(flags))
    return out


def formulation_value(inst: RvppInstance, guard: float = DEFAULT_GUARD, tol: float = 1e-9):
    """Value of the single-level model's own selection rule, by enumeration.

    The DAM flags must be a top-Gamma set of price reductions for the bid
    itself, and each energy flag set must be a top-Gamma set of realized-price
    weighted deviations, as the gated blocks of the MILP require.  Reserve
    price flags do not couple to anything and are taken as the exact minimum.
    No big-M constants are involved, so agreement with the MILP checks the
    encoding, while ``worst_case_value`` checks the modelling claim.
    """
    count = realization_count(inst)
    if count > guard:
        raise EnumerationTooLarge(count, guard)
    n, b, pr, dt = inst.n_periods, inst.budgets, inst.prices, inst.dt
    _, (_, lu, ld) = _price_blocks(inst)
    best, best_info = -np.inf, None
    for choice in profile_choices(inst):
        lp = DispatchLP(inst, choice)
        sr_sets = (_embed(lp, lu, lp.i_up), _embed(lp, ld, lp.i_dn))
        for dam in dam_patterns(n, b.gamma_dam):
            lam, _, _ = realized_prices(inst, dam, (0,) * n, (0,) * n)
            per_unit = [_top_sets(lam * u.p_dev_neg * dt, b.ndres(u.id), tol) for u in inst.ndres_units]
            per_dem = [_top_sets(lam * d.profiles[choice[d.id]].p_dev_pos * dt, b.demand(d.id), tol)
                       for d in inst.demands]
            # rows keeping ``dam`` a top set of reductions for the bid
            red = np.zeros((2 * n, lp.n_x))
            for k in range(n):
                red[2 * k, lp.i_p[k]] = pr.dam_dev_neg[k] * dt
                red[2 * k + 1, lp.i_p[k]] = -pr.dam_dev_pos[k] * dt
            sel = [2 * k + (0 if f < 0 else 1) for k, f in enumerate(dam) if f != 0]
            unsel = [j for j in range(2 * n) if j not in sel]
            extra = [red[j] - red[i] for i in sel for j in unsel] + [-red[i] for i in sel]
            extra = np.array(extra).reshape(-1, lp.n_x)
            revenue = np.zeros(lp.n_x)
            revenue[lp.i_p] = lam * dt
            for combo in itertools.product(*per_unit, *per_dem):
                e = EnergyRealization(
                    {u.id: combo[r] for r, u in enumerate(inst.ndres_units)},
                    {d.id: combo[len(inst.ndres_units) + j] for j, d in enumerate(inst.demands)})
                avail, cons = realized_energy(inst, e, choice)
                val, x = lp.robust_response(lp.params(avail, cons), sr_sets, fixed=revenue, extra_ub=extra)
                if val > best:
                    best = val
                    best_info = (dam, e, {d.id: d.profiles[choice[d.id]].profile_id for d in inst.demands})
    return best, best_info


@dataclass
class CertificationReport:
    passed: bool
    milp_objective: float
    oracle_value: float
    tolerance: float
    witness: UncertaintyRealization | None
    milp_flags: dict[str, Any]
    energy_flags_match: bool
    milp_energy_value: float
    realization_count: int
    formulation_value: float = float("nan")

    @property
    def gap(self) -> float:
        return self.milp_objective - self.oracle_value

    def as_dict(self) -> dict[str, Any]:
        return {
            "passed": self.passed,
            "milp_objective": self.milp_objective,
            "oracle_value": self.oracle_value,
            "difference": self.gap,
            "tolerance": self.tolerance,
            "witness_realization": self.witness.as_dict() if self.witness else None,
            "milp_flags": self.milp_flags,
            "energy_flags_match": self.energy_flags_match,
            "oracle_value_at_milp_energy_flags": self.milp_energy_value,
            "realization_count": self.realization_count,
            "formulation_value": self.formulation_value,
            "convention": ("profile choice first, then the worst energy realization, then the best plan "
                           "robust to every price realization; infeasible energy realizations count as -inf"),
        }


def certify_max_min(inst: RvppInstance, milp_objective: float, milp_flags=None,
                    milp_profile: dict[str, str] | None = None,
                    guard: float = 1e5, rel_tol: float = 1e-6,
                    with_formulation: bool = True) -> CertificationReport:
    """Compare a MILP optimum with the enumerated game value.

    ``milp_flags`` and ``milp_profile`` describe the MILP solution (optional)
    and are used to report whether it picked the oracle's worst energy
    realization.  With ``with_formulation`` the report also carries the
    enumerated value under the MILP's own selection rule.
    """
    worst, values = worst_case_value(inst, guard)
    v_star = worst.value
    witness = None
    if worst.plan is not None:
        (dam, up, dn), _ = worst_prices(inst, worst.plan["p_da"], worst.plan["r_up"], worst.plan["r_dn"])
        witness = UncertaintyRealization(dam, up, dn, worst.energy.ndres_flags, worst.energy.demand_flags)
    tol = rel_tol * (1.0 + abs(v_star)) if np.isfinite(v_star) else 0.0
    passed = bool(np.isfinite(v_star) and np.isfinite(milp_objective) and abs(v_star - milp_objective) <= tol)
    flags_dict, match, own = {}, False, np.nan
    if milp_flags is not None:
        flags_dict = milp_flags.as_dict()
        key = EnergyRealization(dict(milp_flags.ndres), dict(milp_flags.demand)).key()
        for v in values:
            if v.energy.key() == key and (milp_profile is None or v.profile == milp_profile):
                own = v.value
        match = bool(np.isfinite(own) and abs(own - v_star) <= tol)
    formulation = formulation_value(inst, guard)[0] if with_formulation else np.nan
    return CertificationReport(passed, float(milp_objective), float(v_star), float(tol), witness,
                               flags_dict, bool(match), float(own), realization_count(inst), float(formulation))
