"""Assembly of the single-level robust bidding MILP.

The realized DAM price ``lam_t = dam_median - dam_dev_neg*chi_da + dam_dev_pos*chip_da``
is never a variable.  Wherever it multiplies a parameter it is expanded into
the two binaries; where it multiplies a decision it goes through the product
auxiliaries ``pq_r``/``pqp_r`` (renewables) and ``q_d``/``qp_d`` (demand).
"""

from __future__ import annotations

import numpy as np

from .instance import RvppInstance, ensure_valid
from .model import BINARY, AssemblyError, MilpModel, lin

# block tags used for the census
(B_MARKET, B_DAM, B_SRM, B_BAL, B_RES, B_RES_LIN, B_DEM, B_DEM_LIN) = (
    "market", "dam_price", "srm_price", "balance", "ndres", "ndres_lin", "demand", "demand_lin")


def declare_variables(m: MilpModel, inst: RvppInstance) -> None:
    T = inst.time_grid.periods
    cap_r = inst.total_ndres_capacity
    cap_d = inst.total_demand_capacity
    m.block(B_MARKET)
    for t in T:
        m.add_var("p_da", (t,), lb=-cap_d, ub=cap_r)
        m.add_var("r_up", (t,), ub=inst.rules.kappa * cap_r)
        m.add_var("r_dn", (t,), ub=cap_r + cap_d)

    m.block(B_DAM)
    m.add_var("nu_da")
    for t in T:
        for s in ("eta_da", "etap_da", "y_da", "yp_da"):
            m.add_var(s, (t,))
        m.add_var("chi_da", (t,), BINARY)
        m.add_var("chip_da", (t,), BINARY)

    m.block(B_SRM)
    for side in ("su", "sd"):
        m.add_var(f"nu_{side}")
        for t in T:
            m.add_var(f"eta_{side}", (t,))
            m.add_var(f"y_{side}", (t,))
            m.add_var(f"chi_{side}", (t,), BINARY)

    m.block(B_RES)
    for u in inst.ndres_units:
        m.add_var("nu_r", (u.id,))
        for t in T:
            for s in ("p_r", "rup_r", "rdn_r"):
                m.add_var(s, (u.id, t), ub=u.p_max)
            m.add_var("y_r", (u.id, t))
            m.add_var("eta_r", (u.id, t))
            m.add_var("chi_r", (u.id, t), BINARY)
    m.block(B_RES_LIN)
    for u in inst.ndres_units:
        for t in T:
            for s in ("pq_r", "pa_r", "pqp_r", "pap_r"):
                m.add_var(s, (u.id, t), ub=u.p_max)

    m.block(B_DEM)
    for d in inst.demands:
        if not d.profiles:
            raise AssemblyError(f"demand {d.id} has no profiles")
        m.add_var("nu_d", (d.id,))
        for p in d.profiles:
            m.add_var("u", (d.id, p.profile_id), BINARY)
        for t in T:
            for s in ("p_d", "rup_d", "rdn_d"):
                m.add_var(s, (d.id, t), ub=d.p_max)
            m.add_var("y_d", (d.id, t))
            m.add_var("eta_d", (d.id, t))
            m.add_var("chi_d", (d.id, t), BINARY)
    m.block(B_DEM_LIN)
    for d in inst.demands:
        for t in T:
            for s in ("q_d", "qa_d", "qp_d", "qap_d"):
                m.add_var(s, (d.id, t), ub=d.p_max)
            for p in d.profiles:
                for s in ("z", "w", "wp"):
                    m.add_var(s, (d.id, p.profile_id, t), BINARY)


def add_objective(m: MilpModel, inst: RvppInstance) -> None:
    pr, dt = inst.prices, inst.dt
    terms = []
    for k, t in enumerate(inst.time_grid.periods):
        terms += [(m.var("p_da", t), pr.dam_median[k] * dt),
                  (m.var("y_da", t), -1.0), (m.var("yp_da", t), -1.0),
                  (m.var("r_up", t), pr.sr_up_median[k]), (m.var("r_dn", t), pr.sr_down_median[k]),
                  (m.var("y_su", t), -1.0), (m.var("y_sd", t), -1.0)]
        for u in inst.ndres_units:
            terms.append((m.var("p_r", u.id, t), -u.om_cost * dt))
    for d in inst.demands:
        for p in d.profiles:
            terms.append((m.var("u", d.id, p.profile_id), -p.cost))
    m.add_objective_terms(lin(*terms))


def _gated_selection(m: MilpModel, tag: str, t, big_m: float, eps: float,
                     reduction: dict[int, float], rhs_const: float,
                     y: int, nu: int, eta: int, chi: int) -> None:
    """One selectable term of a budgeted block.

    ``reduction`` plus ``rhs_const`` is the profit reduction of this term
    (linear in the model variables).  Adds the cover row, the gated lower
    bound on ``y`` and the activation bounds on ``eta``.
    """
    # nu + eta >= reduction
    m.add_constr(f"{tag}_cover", (t,), lin({nu: 1.0, eta: 1.0}, {v: -c for v, c in reduction.items()}),
                 ">=", rhs_const)
    # y >= nu + eta - M(1 - chi)
    m.add_constr(f"{tag}_y", (t,), {y: 1.0, nu: -1.0, eta: -1.0, chi: -big_m}, ">=", -big_m)
    m.add_constr(f"{tag}_eta_lo", (t,), {eta: 1.0, chi: -eps}, ">=", 0.0)
    m.add_constr(f"{tag}_eta_hi", (t,), {eta: 1.0, chi: -big_m}, "<=", 0.0)


def _sandwich(m: MilpModel, tag: str, t, big_m: float, reduction: dict[int, float],
              nu: int, chi: int) -> None:
    # -M(1 - chi) <= reduction - nu <= M chi
    expr = lin(reduction, {nu: -1.0, chi: -big_m})
    m.add_constr(f"{tag}_lo", (t,), expr, ">=", -big_m)
    m.add_constr(f"{tag}_hi", (t,), expr, "<=", 0.0)


def add_dam_price_robustness(m: MilpModel, inst: RvppInstance) -> None:
    m.block(B_DAM)
    bm = inst.resolved_big_m()
    pr, dt = inst.prices, inst.dt
    nu = m.var("nu_da")
    for k, t in enumerate(inst.time_grid.periods):
        p = m.var("p_da", t)
        chi, chip = m.var("chi_da", t), m.var("chip_da", t)
        low = {p: pr.dam_dev_neg[k] * dt}
        high = {p: -pr.dam_dev_pos[k] * dt}
        _gated_selection(m, "dam_neg", t, bm.m_price, bm.epsilon, low, 0.0,
                         m.var("y_da", t), nu, m.var("eta_da", t), chi)
        _gated_selection(m, "dam_pos", t, bm.m_price, bm.epsilon, high, 0.0,
                         m.var("yp_da", t), nu, m.var("etap_da", t), chip)
        _sandwich(m, "dam_neg_sel", t, bm.m_price, low, nu, chi)
        _sandwich(m, "dam_pos_sel", t, bm.m_price, high, nu, chip)
        m.add_constr("dam_excl", (t,), {chi: 1.0, chip: 1.0}, "<=", 1.0)
    budget = lin(*[(m.var(s, t), 1.0) for t in inst.time_grid.periods for s in ("chi_da", "chip_da")])
    m.add_constr("dam_budget", (), budget, "=", inst.budgets.gamma_dam)


def add_srm_price_robustness(m: MilpModel, inst: RvppInstance) -> None:
    m.block(B_SRM)
    bm = inst.resolved_big_m()
    pr = inst.prices
    sides = (("su", "r_up", pr.sr_up_dev_neg, inst.budgets.gamma_sr_up),
             ("sd", "r_dn", pr.sr_down_dev_neg, inst.budgets.gamma_sr_down))
    for side, rvar, dev, gamma in sides:
        nu = m.var(f"nu_{side}")
        for k, t in enumerate(inst.time_grid.periods):
            chi = m.var(f"chi_{side}", t)
            red = {m.var(rvar, t): dev[k]}
            _gated_selection(m, f"sr{side}", t, bm.m_price, bm.epsilon, red, 0.0,
                             m.var(f"y_{side}", t), nu, m.var(f"eta_{side}", t), chi)
            _sandwich(m, f"sr{side}_sel", t, bm.m_price, red, nu, chi)
        m.add_constr(f"sr{side}_budget", (),
                     lin(*[(m.var(f"chi_{side}", t), 1.0) for t in inst.time_grid.periods]), "=", gamma)


def add_balance_and_traded(m: MilpModel, inst: RvppInstance) -> None:
    m.block(B_BAL)
    cap_r, cap_d = inst.total_ndres_capacity, inst.total_demand_capacity
    units, dems = inst.ndres_units, inst.demands
    for k, t in enumerate(inst.time_grid.periods):
        p, up, dn = m.var("p_da", t), m.var("r_up", t), m.var("r_dn", t)
        pr_ = [(m.var("p_r", u.id, t), 1.0) for u in units]
        pd_ = [(m.var("p_d", d.id, t), -1.0) for d in dems]
        m.add_constr("bal_none", (t,), lin(*pr_, *pd_, (p, -1.0)), "=", 0.0)
        m.add_constr("bal_up", (t,), lin(*pr_, *pd_, (p, -1.0), (up, -1.0),
                                         *[(m.var("rup_r", u.id, t), 1.0) for u in units],
                                         *[(m.var("rup_d", d.id, t), 1.0) for d in dems]), "=", 0.0)
        m.add_constr("bal_dn", (t,), lin(*pr_, *pd_, (p, -1.0), (dn, 1.0),
                                         *[(m.var("rdn_r", u.id, t), -1.0) for u in units],
                                         *[(m.var("rdn_d", d.id, t), -1.0) for d in dems]), "=", 0.0)
        m.add_constr("cap_up", (t,), {p: 1.0, up: 1.0}, "<=", cap_r)
        m.add_constr("cap_dn", (t,), {p: 1.0, dn: -1.0}, ">=", -cap_d)
        m.add_constr("sr_ratio", (t,), {up: 1.0, dn: -inst.rules.rho[k]}, "=", 0.0)
        m.add_constr("sr_cap", (t,), {up: 1.0}, "<=", inst.rules.kappa * cap_r)


def _price_terms(m: MilpModel, inst: RvppInstance, k: int, t, scale: float) -> tuple[float, dict[int, float]]:
    """``scale * lam_t`` as (constant, binary terms)."""
    pr = inst.prices
    return (scale * pr.dam_median[k],
            {m.var("chi_da", t): -scale * pr.dam_dev_neg[k], m.var("chip_da", t): scale * pr.dam_dev_pos[k]})


def add_ndres_profit_robustness(m: MilpModel, inst: RvppInstance) -> None:
    m.block(B_RES)
    bm = inst.resolved_big_m()
    dt = inst.dt
    for u in inst.ndres_units:
        nu = m.var("nu_r", u.id)
        for k, t in enumerate(inst.time_grid.periods):
            tag_idx = (u.id, t)
            p, up, dn = m.var("p_r", u.id, t), m.var("rup_r", u.id, t), m.var("rdn_r", u.id, t)
            y, eta, chi = m.var("y_r", u.id, t), m.var("eta_r", u.id, t), m.var("chi_r", u.id, t)
            dev = u.p_dev_neg[k]
            m.add_constr("res_min", tag_idx, {p: 1.0, dn: -1.0}, ">=", u.p_min)
            m.add_constr("res_prod", tag_idx, {p: 1.0, up: 1.0, chi: dev}, "=", u.p_median[k])
            const, bins = _price_terms(m, inst, k, t, dev * dt)
            # y <= lam * dev * dt
            m.add_constr("res_ycap", tag_idx, lin({y: 1.0}, {v: -c for v, c in bins.items()}), "<=", const)
            m.add_constr("res_y", tag_idx, {y: 1.0, nu: -1.0, eta: -1.0, chi: -bm.m_energy}, ">=", -bm.m_energy)
            m.add_constr("res_cover", tag_idx, lin({nu: 1.0, eta: 1.0}, {v: -c for v, c in bins.items()}),
                         ">=", const)
            m.add_constr("res_eta_lo", tag_idx, {eta: 1.0, chi: -bm.epsilon}, ">=", 0.0)
            m.add_constr("res_eta_hi", tag_idx, {eta: 1.0, chi: -bm.m_energy}, "<=", 0.0)
        m.add_constr("res_budget", (u.id,),
                     lin(*[(m.var("chi_r", u.id, t), 1.0) for t in inst.time_grid.periods]),
                     "=", inst.budgets.ndres(u.id))


def _product(m: MilpModel, tag: str, idx: tuple, q: int, a: int, total: dict[int, float],
             gate: int, lo: float, hi: float) -> None:
    """q = gate * total and a = (1 - gate) * total for total in [lo, hi]."""
    m.add_constr(f"{tag}_split", idx, lin({q: 1.0, a: 1.0}, {v: -c for v, c in total.items()}), "=", 0.0)
    m.add_constr(f"{tag}_on_lo", idx, {q: 1.0, gate: -lo}, ">=", 0.0)
    m.add_constr(f"{tag}_on_hi", idx, {q: 1.0, gate: -hi}, "<=", 0.0)
    m.add_constr(f"{tag}_off_lo", idx, {a: 1.0, gate: lo}, ">=", lo)
    m.add_constr(f"{tag}_off_hi", idx, {a: 1.0, gate: hi}, "<=", hi)


def add_ndres_linearization(m: MilpModel, inst: RvppInstance) -> None:
    m.block(B_RES_LIN)
    pr, dt = inst.prices, inst.dt
    for u in inst.ndres_units:
        for k, t in enumerate(inst.time_grid.periods):
            idx = (u.id, t)
            p, up, y = m.var("p_r", u.id, t), m.var("rup_r", u.id, t), m.var("y_r", u.id, t)
            q, qp = m.var("pq_r", u.id, t), m.var("pqp_r", u.id, t)
            # lam*(p + r_up)*dt <= lam*P_median*dt - y, with lam*(p + r_up) expanded via q, qp
            const, bins = _price_terms(m, inst, k, t, u.p_median[k] * dt)
            lhs = lin({p: pr.dam_median[k] * dt, up: pr.dam_median[k] * dt,
                       q: -pr.dam_dev_neg[k] * dt, qp: pr.dam_dev_pos[k] * dt, y: 1.0},
                      {v: -c for v, c in bins.items()})
            m.add_constr("res_profit", idx, lhs, "<=", const)
            total = {p: 1.0, up: 1.0}
            _product(m, "resq", idx, q, m.var("pa_r", u.id, t), total, m.var("chi_da", t),
                     u.p_min, u.p_median[k])
            _product(m, "resqp", idx, qp, m.var("pap_r", u.id, t), total, m.var("chip_da", t),
                     u.p_min, u.p_median[k])


def _demand_price_dev_terms(m: MilpModel, inst: RvppInstance, d, k: int, t,
                            weights: dict[str, float]) -> dict[int, float]:
    """lam_t * sum_p weights[p] * u_p as a linear expression via u, w, wp."""
    pr = inst.prices
    out: dict[int, float] = {}
    for p in d.profiles:
        c = weights[p.profile_id]
        if c == 0.0:
            continue
        out = lin(out, {m.var("u", d.id, p.profile_id): pr.dam_median[k] * c,
                        m.var("w", d.id, p.profile_id, t): -pr.dam_dev_neg[k] * c,
                        m.var("wp", d.id, p.profile_id, t): pr.dam_dev_pos[k] * c})
    return out


def add_demand_cost_robustness(m: MilpModel, inst: RvppInstance) -> None:
    m.block(B_DEM)
    bm = inst.resolved_big_m()
    dt, t_sr = inst.dt, inst.rules.t_sr
    T = inst.time_grid.periods
    for d in inst.demands:
        if not d.profiles:
            raise AssemblyError(f"demand {d.id} has no profiles")
        nu = m.var("nu_d", d.id)
        us = {p.profile_id: m.var("u", d.id, p.profile_id) for p in d.profiles}
        m.add_constr("dem_one", (d.id,), {v: 1.0 for v in us.values()}, "=", 1.0)
        for k, t in enumerate(T):
            idx = (d.id, t)
            pd, up, dn = m.var("p_d", d.id, t), m.var("rup_d", d.id, t), m.var("rdn_d", d.id, t)
            y, eta, chi = m.var("y_d", d.id, t), m.var("eta_d", d.id, t), m.var("chi_d", d.id, t)
            cons = lin({pd: 1.0}, *[(us[p.profile_id], -p.p_median[k]) for p in d.profiles],
                       *[(m.var("z", d.id, p.profile_id, t), -p.p_dev_pos[k]) for p in d.profiles])
            m.add_constr("dem_cons", idx, cons, "=", 0.0)
            red = _demand_price_dev_terms(m, inst, d, k, t, {p.profile_id: p.p_dev_pos[k] * dt for p in d.profiles})
            m.add_constr("dem_ycap", idx, lin({y: 1.0}, {v: -c for v, c in red.items()}), "<=", 0.0)
            m.add_constr("dem_y", idx, {y: 1.0, nu: -1.0, eta: -1.0, chi: -bm.m_energy}, ">=", -bm.m_energy)
            m.add_constr("dem_cover", idx, lin({nu: 1.0, eta: 1.0}, {v: -c for v, c in red.items()}), ">=", 0.0)
            m.add_constr("dem_eta_lo", idx, {eta: 1.0, chi: -bm.epsilon}, ">=", 0.0)
            m.add_constr("dem_eta_hi", idx, {eta: 1.0, chi: -bm.m_energy}, "<=", 0.0)
            med = lin(*[(us[p.profile_id], p.p_median[k]) for p in d.profiles])
            m.add_constr("dem_rup_frac", idx, lin({up: 1.0}, {v: -d.beta_up[k] * c for v, c in med.items()}),
                         "<=", 0.0)
            m.add_constr("dem_rup_min", idx, {up: 1.0, pd: -1.0}, "<=", -d.p_min)
            m.add_constr("dem_rdn_frac", idx, lin({dn: 1.0}, {v: -d.beta_down[k] * c for v, c in med.items()}),
                         "<=", 0.0)
            m.add_constr("dem_rdn_max", idx, {dn: 1.0, pd: 1.0}, "<=", d.p_max)
            m.add_constr("dem_rup_ramp", idx, {up: 1.0}, "<=", t_sr * d.sr_ramp_up)
            m.add_constr("dem_rdn_ramp", idx, {dn: 1.0}, "<=", t_sr * d.sr_ramp_down)
            if k > 0:
                tp = T[k - 1]
                pdp, upp, dnp = m.var("p_d", d.id, tp), m.var("rup_d", d.id, tp), m.var("rdn_d", d.id, tp)
                # worst-case ramps with reserve activations in consecutive periods
                m.add_constr("dem_ramp_up", idx, {pd: 1.0, dn: 1.0, pdp: -1.0, upp: 1.0},
                             "<=", d.ramp_up * dt)
                m.add_constr("dem_ramp_dn", idx, {pdp: 1.0, dnp: 1.0, pd: -1.0, up: 1.0},
                             "<=", d.ramp_down * dt)
        energy = lin(*[(m.var("p_d", d.id, t), dt) for t in T], *[(m.var("rup_d", d.id, t), -1.0) for t in T])
        m.add_constr("dem_energy", (d.id,), energy, ">=", d.e_min)
        m.add_constr("dem_budget", (d.id,), lin(*[(m.var("chi_d", d.id, t), 1.0) for t in T]), "=",
                     inst.budgets.demand(d.id))


def add_demand_linearization(m: MilpModel, inst: RvppInstance) -> None:
    m.block(B_DEM_LIN)
    pr, dt = inst.prices, inst.dt
    for d in inst.demands:
        for k, t in enumerate(inst.time_grid.periods):
            idx = (d.id, t)
            gates = (("z", m.var("chi_d", d.id, t)), ("w", m.var("chi_da", t)), ("wp", m.var("chip_da", t)))
            for p in d.profiles:
                u = m.var("u", d.id, p.profile_id)
                for sym, g in gates:
                    a = m.var(sym, d.id, p.profile_id, t)
                    pidx = (d.id, p.profile_id, t)
                    m.add_constr(f"and_{sym}_g", pidx, {a: 1.0, g: -1.0}, "<=", 0.0)
                    m.add_constr(f"and_{sym}_u", pidx, {a: 1.0, u: -1.0}, "<=", 0.0)
                    m.add_constr(f"and_{sym}_both", pidx, {a: 1.0, g: -1.0, u: -1.0}, ">=", -1.0)
            pd, y = m.var("p_d", d.id, t), m.var("y_d", d.id, t)
            q, qp = m.var("q_d", d.id, t), m.var("qp_d", d.id, t)
            # lam * p_d * dt >= lam * sum_p P_median u * dt + y
            rhs = _demand_price_dev_terms(m, inst, d, k, t, {p.profile_id: p.p_median[k] * dt for p in d.profiles})
            lhs = lin({pd: pr.dam_median[k] * dt, q: -pr.dam_dev_neg[k] * dt, qp: pr.dam_dev_pos[k] * dt, y: -1.0},
                      {v: -c for v, c in rhs.items()})
            m.add_constr("dem_cost", idx, lhs, ">=", 0.0)
            _product(m, "demq", idx, q, m.var("qa_d", d.id, t), {pd: 1.0}, m.var("chi_da", t), 0.0, d.p_max)
            _product(m, "demqp", idx, qp, m.var("qap_d", d.id, t), {pd: 1.0}, m.var("chip_da", t), 0.0, d.p_max)


BLOCKS = (
    add_objective,
    add_dam_price_robustness,
    add_srm_price_robustness,
    add_balance_and_traded,
    add_ndres_profit_robustness,
    add_ndres_linearization,
    add_demand_cost_robustness,
    add_demand_linearization,
)


def assemble(inst: RvppInstance, validate: bool = True) -> MilpModel:
    """Build and freeze the complete model for ``inst``."""
    if validate:
        ensure_valid(inst)
    if inst.big_m is None:
        from .instance import derive_big_m
        inst = inst.with_big_m(derive_big_m(inst))
    m = MilpModel("rvpp")
    declare_variables(m, inst)
    for block in BLOCKS:
        try:
            block(m, inst)
        except AssemblyError as exc:
            raise AssemblyError(f"{block.__name__}: {exc}") from exc
    m.big_m = inst.big_m
    return m.freeze()


def expected_census(n_t: int, n_r: int, n_d: int, n_p: int) -> dict[str, int]:
    """Closed-form model size; ``n_p`` is the total profile count over demands."""
    variables = (n_t * (3 + 6 + 6 + 10 * n_r + 10 * n_d + 3 * n_p) + 1 + 2 + n_r + n_d + n_p)
    ramps = max(n_t - 1, 0)
    constraints = (
        n_t * 13 + 1            # DAM: 2 x 4 gated rows, 2 x 2 sandwich rows, exclusion
        + 2 * (n_t * 6 + 1)     # SRM up and down
        + n_t * 7               # balance and traded
        + n_r * (n_t * 7 + 1)   # renewables
        + n_r * n_t * 11        # renewable linearization
        + n_d * (n_t * 12 + 3) + 2 * n_d * ramps  # demand
        + n_p * n_t * 9 + n_d * n_t * 11                   # demand linearization
    )
    return {"variables": variables, "constraints": constraints}
