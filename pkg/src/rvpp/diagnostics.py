"""Post-solve checks on a MILP optimum.

Two families: whether every budgeted block selected a top-Gamma set of its
realized profit reductions, and whether the product auxiliaries equal the
products they stand for.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .instance import RvppInstance
from .model import MilpModel


@dataclass
class SelectionCheck:
    block: str
    selected: tuple[int, ...]
    scores: np.ndarray
    ok: bool
    margin: float  # min selected score minus max unselected score

    def as_dict(self):
        return {"block": self.block, "selected": list(self.selected), "scores": self.scores.tolist(),
                "ok": self.ok, "margin": self.margin}


def _top_check(block: str, scores: np.ndarray, chosen: np.ndarray, tol: float) -> SelectionCheck:
    chosen = np.asarray(chosen, dtype=bool)
    sel = scores[chosen]
    rest = scores[~chosen]
    if sel.size == 0 or rest.size == 0:
        margin = np.inf
    else:
        margin = float(sel.min() - rest.max())
    ok = margin >= -tol
    return SelectionCheck(block, tuple(int(i) for i in np.flatnonzero(chosen)), scores, bool(ok), margin)


def selection_checks(model: MilpModel, x: np.ndarray, inst: RvppInstance,
                     rel_tol: float = 1e-6) -> list[SelectionCheck]:
    """Top-Gamma test for every budgeted block at the point ``x``.

    Scores are the realized profit reductions: the DAM block ranks both signs
    of every period together, reserve blocks rank ``dev * r``, renewable
    blocks rank ``lam * dev * dt`` and demand blocks ``lam * dev_pos * dt`` of
    the selected profile, with ``lam`` the realized DAM price.  Tolerance is
    ``rel_tol`` times the block's big-M.
    """
    bm = model.big_m if getattr(model, "big_m", None) is not None else inst.resolved_big_m()
    T = inst.time_grid.periods
    pr, dt = inst.prices, inst.dt
    val = lambda s, *i: model.value(x, s, *i)
    rnd = lambda s, *i: int(round(val(s, *i)))
    tp, te = rel_tol * bm.m_price, rel_tol * bm.m_energy
    out = []

    p = np.array([val("p_da", t) for t in T])
    chi = np.array([rnd("chi_da", t) for t in T])
    chip = np.array([rnd("chip_da", t) for t in T])
    scores = np.concatenate([pr.dam_dev_neg * p * dt, -pr.dam_dev_pos * p * dt])
    out.append(_top_check("dam", scores, np.concatenate([chi, chip]), tp))

    for side, rvar, dev in (("sr_up", "r_up", pr.sr_up_dev_neg), ("sr_down", "r_dn", pr.sr_down_dev_neg)):
        tag = "su" if side == "sr_up" else "sd"
        r = np.array([val(rvar, t) for t in T])
        out.append(_top_check(side, dev * r, np.array([rnd(f"chi_{tag}", t) for t in T]), tp))

    lam = pr.dam_median - pr.dam_dev_neg * chi + pr.dam_dev_pos * chip
    for u in inst.ndres_units:
        flags = np.array([rnd("chi_r", u.id, t) for t in T])
        out.append(_top_check(f"ndres:{u.id}", lam * u.p_dev_neg * dt, flags, te))
    for d in inst.demands:
        prof = max(d.profiles, key=lambda q: val("u", d.id, q.profile_id))
        flags = np.array([rnd("chi_d", d.id, t) for t in T])
        out.append(_top_check(f"demand:{d.id}", lam * prof.p_dev_pos * dt, flags, te))
    return out


@dataclass
class LinearizationReport:
    max_residual: float
    residuals: dict[str, float] = field(default_factory=dict)

    def ok(self, tol: float = 1e-6) -> bool:
        return self.max_residual <= tol


def linearization_residuals(model: MilpModel, x: np.ndarray, inst: RvppInstance) -> LinearizationReport:
    """Largest gap between each auxiliary and its defining product, by symbol."""
    T = inst.time_grid.periods
    val = lambda s, *i: model.value(x, s, *i)
    res: dict[str, float] = {}

    def note(sym, gap):
        res[sym] = max(res.get(sym, 0.0), abs(gap))

    for t in T:
        g, gp = val("chi_da", t), val("chip_da", t)
        for u in inst.ndres_units:
            tot = val("p_r", u.id, t) + val("rup_r", u.id, t)
            note("pq_r", val("pq_r", u.id, t) - g * tot)
            note("pa_r", val("pa_r", u.id, t) - (1 - g) * tot)
            note("pqp_r", val("pqp_r", u.id, t) - gp * tot)
            note("pap_r", val("pap_r", u.id, t) - (1 - gp) * tot)
        for d in inst.demands:
            pd = val("p_d", d.id, t)
            note("q_d", val("q_d", d.id, t) - g * pd)
            note("qa_d", val("qa_d", d.id, t) - (1 - g) * pd)
            note("qp_d", val("qp_d", d.id, t) - gp * pd)
            note("qap_d", val("qap_d", d.id, t) - (1 - gp) * pd)
            cd = val("chi_d", d.id, t)
            for p in d.profiles:
                u_ = val("u", d.id, p.profile_id)
                note("z", val("z", d.id, p.profile_id, t) - cd * u_)
                note("w", val("w", d.id, p.profile_id, t) - g * u_)
                note("wp", val("wp", d.id, p.profile_id, t) - gp * u_)
    return LinearizationReport(max(res.values(), default=0.0), res)


def budget_counts(model: MilpModel, x: np.ndarray, inst: RvppInstance) -> dict[str, tuple[int, int]]:
    """(selected count, budget) per block."""
    T = inst.time_grid.periods
    b = inst.budgets
    cnt = lambda s, *i: int(sum(round(model.value(x, s, *i, t)) for t in T))
    out = {
        "dam": (cnt("chi_da") + cnt("chip_da"), b.gamma_dam),
        "sr_up": (cnt("chi_su"), b.gamma_sr_up),
        "sr_down": (cnt("chi_sd"), b.gamma_sr_down),
    }
    for u in inst.ndres_units:
        out[f"ndres:{u.id}"] = (cnt("chi_r", u.id), b.ndres(u.id))
    for d in inst.demands:
        out[f"demand:{d.id}"] = (cnt("chi_d", d.id), b.demand(d.id))
    return out
