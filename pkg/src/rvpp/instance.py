"""Problem data for the RVPP bidding model.

Units follow one convention throughout: MW for power, MWh for energy,
EUR/MWh for energy prices, EUR/MW for reserve capacity prices, hours for the
period length and minutes for the reserve activation time.  Per-period series
are stored as read-only float arrays of length ``|T|``.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np


def _series(values, n: int | None = None) -> np.ndarray:
    arr = np.array(values, dtype=float).reshape(-1)
    arr.setflags(write=False)
    return arr


def _freeze(obj, *names: str) -> None:
    for name in names:
        object.__setattr__(obj, name, _series(getattr(obj, name)))


@dataclass(frozen=True)
class TimeGrid:
    periods: tuple[int, ...]
    delta_t: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "periods", tuple(int(t) for t in self.periods))

    @classmethod
    def of(cls, n: int, delta_t: float = 1.0) -> "TimeGrid":
        return cls(tuple(range(1, n + 1)), delta_t)

    @property
    def n(self) -> int:
        return len(self.periods)


@dataclass(frozen=True)
class NdResUnit:
    """Non-dispatchable renewable unit.

    ``p_dev_neg`` is the largest downward deviation of production from the
    median forecast in each period; there is no upward deviation.
    """

    id: str
    p_median: np.ndarray
    p_dev_neg: np.ndarray
    p_min: float
    p_max: float
    om_cost: float

    def __post_init__(self):
        _freeze(self, "p_median", "p_dev_neg")


@dataclass(frozen=True)
class DemandProfile:
    profile_id: str
    p_median: np.ndarray
    p_dev_pos: np.ndarray
    cost: float = 0.0

    def __post_init__(self):
        _freeze(self, "p_median", "p_dev_pos")


@dataclass(frozen=True)
class DemandUnit:
    """Flexible demand that consumes one of several candidate profiles.

    Ramp limits are MW/h, reserve ramp limits MW/min, ``e_min`` is MWh over
    the horizon.  ``beta_up`` caps up reserve (consumption decrease) and
    ``beta_down`` caps down reserve, both as fractions of the median profile.
    """

    id: str
    profiles: tuple[DemandProfile, ...]
    p_min: float
    p_max: float
    beta_up: np.ndarray
    beta_down: np.ndarray
    ramp_up: float
    ramp_down: float
    sr_ramp_up: float
    sr_ramp_down: float
    e_min: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "profiles", tuple(self.profiles))
        _freeze(self, "beta_up", "beta_down")


@dataclass(frozen=True)
class MarketPrices:
    dam_median: np.ndarray
    dam_dev_neg: np.ndarray
    dam_dev_pos: np.ndarray
    sr_up_median: np.ndarray
    sr_up_dev_neg: np.ndarray
    sr_down_median: np.ndarray
    sr_down_dev_neg: np.ndarray

    def __post_init__(self):
        _freeze(self, *SERIES_FIELDS)


SERIES_FIELDS = (
    "dam_median",
    "dam_dev_neg",
    "dam_dev_pos",
    "sr_up_median",
    "sr_up_dev_neg",
    "sr_down_median",
    "sr_down_dev_neg",
)


@dataclass(frozen=True)
class UncertaintyBudgets:
    """Number of periods in which each uncertain series sits at its bound."""

    gamma_dam: int = 0
    gamma_sr_up: int = 0
    gamma_sr_down: int = 0
    gamma_ndres: Mapping[str, int] = field(default_factory=dict)
    gamma_demand: Mapping[str, int] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "gamma_ndres", dict(self.gamma_ndres))
        object.__setattr__(self, "gamma_demand", dict(self.gamma_demand))

    def __hash__(self):
        return hash((self.gamma_dam, self.gamma_sr_up, self.gamma_sr_down,
                     tuple(sorted(self.gamma_ndres.items())),
                     tuple(sorted(self.gamma_demand.items()))))

    def ndres(self, unit_id: str) -> int:
        return int(self.gamma_ndres.get(unit_id, 0))

    def demand(self, demand_id: str) -> int:
        return int(self.gamma_demand.get(demand_id, 0))


@dataclass(frozen=True)
class MarketRules:
    """``rho`` links reserves as r_up = rho * r_down; ``kappa`` caps up reserve
    as a fraction of installed renewable capacity; ``t_sr`` in minutes."""

    rho: np.ndarray
    kappa: float
    t_sr: float

    def __post_init__(self):
        _freeze(self, "rho")


@dataclass(frozen=True)
class BigMConfig:
    m_price: float
    m_energy: float
    epsilon: float
    warning: bool = False


@dataclass(frozen=True)
class RvppInstance:
    time_grid: TimeGrid
    ndres_units: tuple[NdResUnit, ...]
    demands: tuple[DemandUnit, ...]
    prices: MarketPrices
    budgets: UncertaintyBudgets
    rules: MarketRules
    big_m: BigMConfig | None = None

    def __post_init__(self):
        object.__setattr__(self, "ndres_units", tuple(self.ndres_units))
        object.__setattr__(self, "demands", tuple(self.demands))

    @property
    def n_periods(self) -> int:
        return self.time_grid.n

    @property
    def dt(self) -> float:
        return self.time_grid.delta_t

    @property
    def total_ndres_capacity(self) -> float:
        return float(sum(u.p_max for u in self.ndres_units))

    @property
    def total_demand_capacity(self) -> float:
        return float(sum(d.p_max for d in self.demands))

    def with_budgets(self, budgets: UncertaintyBudgets) -> "RvppInstance":
        return dataclasses.replace(self, budgets=budgets)

    def with_uniform_budget(self, b: int, demand: bool = False) -> "RvppInstance":
        """All market and renewable budgets set to ``b``; demand budgets are
        kept unless ``demand`` is set."""
        old = self.budgets
        return self.with_budgets(UncertaintyBudgets(
            gamma_dam=b, gamma_sr_up=b, gamma_sr_down=b,
            gamma_ndres={u.id: b for u in self.ndres_units},
            gamma_demand=({d.id: b for d in self.demands} if demand
                          else dict(old.gamma_demand)),
        ))

    def with_big_m(self, big_m: BigMConfig | None) -> "RvppInstance":
        return dataclasses.replace(self, big_m=big_m)

    def resolved_big_m(self) -> BigMConfig:
        return self.big_m if self.big_m is not None else derive_big_m(self)


# ---------------------------------------------------------------- validation


@dataclass(frozen=True)
class Violation:
    path: str
    invariant: str
    message: str

    def __str__(self):
        return f"{self.path}: {self.message} [{self.invariant}]"


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.ok

    def __str__(self):
        if self.ok:
            return "instance is well-formed"
        return "\n".join(str(v) for v in self.violations)


_TOL = 1e-9


def validate_instance(instance: RvppInstance) -> ValidationReport:
    """Collect every invariant breach of ``instance`` without raising."""
    out: list[Violation] = []

    def bad(path, invariant, message):
        out.append(Violation(path, invariant, message))

    grid = instance.time_grid
    n = grid.n
    if not grid.delta_t > 0:
        bad("time_grid.delta_t", "delta_t > 0", f"got {grid.delta_t}")
    if n == 0 or tuple(grid.periods) != tuple(range(1, n + 1)):
        bad("time_grid.periods", "consecutive from 1", f"got {list(grid.periods)}")

    def check_len(path, arr):
        if len(arr) != n:
            bad(path, "length |T|", f"length {len(arr)} != {n}")
            return False
        if not np.all(np.isfinite(arr)):
            bad(path, "finite", "contains non-finite values")
            return False
        return True

    seen: set[str] = set()
    for i, u in enumerate(instance.ndres_units):
        p = f"ndres_units[{u.id}]"
        if u.id in seen:
            bad(p, "unique id", "duplicate unit id")
        seen.add(u.id)
        if not (check_len(p + ".p_median", u.p_median) and check_len(p + ".p_dev_neg", u.p_dev_neg)):
            continue
        for k, t in enumerate(grid.periods):
            med, dev = u.p_median[k], u.p_dev_neg[k]
            if dev < -_TOL or dev > med + _TOL:
                bad(f"{p}.p_dev_neg[{t}]", "0 <= p_dev_neg <= p_median",
                    f"deviation {dev} outside [0, {med}]")
            if u.p_min > med - dev + _TOL:
                bad(f"{p}.p_min", "p_min <= p_median - p_dev_neg",
                    f"p_min {u.p_min} exceeds worst production {med - dev} in period {t}")
            if med > u.p_max + _TOL:
                bad(f"{p}.p_median[{t}]", "p_median <= p_max", f"{med} > {u.p_max}")
        if u.p_min < -_TOL:
            bad(p + ".p_min", "p_min >= 0", f"got {u.p_min}")
        if u.om_cost < -_TOL:
            bad(p + ".om_cost", "om_cost >= 0", f"got {u.om_cost}")

    for d in instance.demands:
        p = f"demands[{d.id}]"
        if d.id in seen:
            bad(p, "unique id", "duplicate unit id")
        seen.add(d.id)
        if not d.profiles:
            bad(p + ".profiles", "at least one profile", "demand has no profiles")
        if d.p_min > d.p_max + _TOL or d.p_min < -_TOL:
            bad(p, "0 <= p_min <= p_max", f"p_min {d.p_min}, p_max {d.p_max}")
        if d.e_min < -_TOL:
            bad(p + ".e_min", "e_min >= 0", f"got {d.e_min}")
        for name in ("ramp_up", "ramp_down", "sr_ramp_up", "sr_ramp_down"):
            if getattr(d, name) < -_TOL:
                bad(f"{p}.{name}", "ramps >= 0", f"got {getattr(d, name)}")
        for name in ("beta_up", "beta_down"):
            arr = getattr(d, name)
            if check_len(f"{p}.{name}", arr) and (np.any(arr < -_TOL) or np.any(arr > 1 + _TOL)):
                bad(f"{p}.{name}", "beta in [0, 1]", f"values {arr.tolist()}")
        pids: set[str] = set()
        for prof in d.profiles:
            pp = f"{p}.profiles[{prof.profile_id}]"
            if prof.profile_id in pids:
                bad(pp, "unique profile id", "duplicate profile id")
            pids.add(prof.profile_id)
            if not (check_len(pp + ".p_median", prof.p_median) and check_len(pp + ".p_dev_pos", prof.p_dev_pos)):
                continue
            for k, t in enumerate(grid.periods):
                if prof.p_dev_pos[k] < -_TOL:
                    bad(f"{pp}.p_dev_pos[{t}]", "p_dev_pos >= 0", f"got {prof.p_dev_pos[k]}")
                if prof.p_median[k] < -_TOL:
                    bad(f"{pp}.p_median[{t}]", "p_median >= 0", f"got {prof.p_median[k]}")
                if prof.p_median[k] + prof.p_dev_pos[k] > d.p_max + _TOL:
                    bad(f"{pp}.p_median[{t}]", "p_median + p_dev_pos <= p_max",
                        f"{prof.p_median[k] + prof.p_dev_pos[k]} > {d.p_max}")

    pr = instance.prices
    for name in SERIES_FIELDS:
        arr = getattr(pr, name)
        if check_len(f"prices.{name}", arr) and "dev" in name and np.any(arr < -_TOL):
            bad(f"prices.{name}", "deviation >= 0", f"values {arr.tolist()}")

    ru = instance.rules
    if check_len("rules.rho", ru.rho) and np.any(ru.rho <= 0):
        bad("rules.rho", "rho > 0", f"values {ru.rho.tolist()}")
    if not 0 <= ru.kappa <= 1:
        bad("rules.kappa", "kappa in [0, 1]", f"got {ru.kappa}")
    if not ru.t_sr > 0:
        bad("rules.t_sr", "t_sr > 0", f"got {ru.t_sr}")

    b = instance.budgets

    def check_budget(path, g):
        if int(g) != g or not 0 <= g <= n:
            bad(path, "budget in [0, |T|]", f"got {g} with |T| = {n}")

    check_budget("budgets.gamma_dam", b.gamma_dam)
    check_budget("budgets.gamma_sr_up", b.gamma_sr_up)
    check_budget("budgets.gamma_sr_down", b.gamma_sr_down)
    unit_ids = {u.id for u in instance.ndres_units}
    demand_ids = {d.id for d in instance.demands}
    for k, g in b.gamma_ndres.items():
        if k not in unit_ids:
            bad(f"budgets.gamma_ndres[{k}]", "known unit", "no such ND-RES unit")
        check_budget(f"budgets.gamma_ndres[{k}]", g)
    for k, g in b.gamma_demand.items():
        if k not in demand_ids:
            bad(f"budgets.gamma_demand[{k}]", "known unit", "no such demand")
        check_budget(f"budgets.gamma_demand[{k}]", g)

    if instance.big_m is not None:
        m = instance.big_m
        if not (m.m_price > 0 and m.m_energy > 0):
            bad("big_m", "M > 0", f"m_price {m.m_price}, m_energy {m.m_energy}")
        if not 0 <= m.epsilon < min(m.m_price, m.m_energy):
            bad("big_m.epsilon", "0 <= epsilon < M", f"got {m.epsilon}")
    return ValidationReport(tuple(out))


class InstanceError(ValueError):
    def __init__(self, report: ValidationReport):
        super().__init__(str(report))
        self.report = report


def ensure_valid(instance: RvppInstance) -> RvppInstance:
    report = validate_instance(instance)
    if not report.ok:
        raise InstanceError(report)
    return instance


# ------------------------------------------------------------------- big-M


def deviation_monomials(instance: RvppInstance) -> np.ndarray:
    """Per-unit-quantity profit-reduction coefficients of every gated term.

    Price blocks contribute the coefficient multiplying the traded quantity
    (EUR per MW of bid), energy blocks the parameter-only reduction at the
    median price (EUR).
    """
    pr, dt = instance.prices, instance.dt
    parts = [pr.dam_dev_neg * dt, pr.dam_dev_pos * dt, pr.sr_up_dev_neg, pr.sr_down_dev_neg]
    dam_abs = np.abs(pr.dam_median)
    for u in instance.ndres_units:
        parts.append(dam_abs * u.p_dev_neg * dt)
    for d in instance.demands:
        for prof in d.profiles:
            parts.append(dam_abs * prof.p_dev_pos * dt)
    return np.concatenate([np.asarray(p, dtype=float).reshape(-1) for p in parts])


def derive_big_m(instance: RvppInstance) -> BigMConfig:
    """Instance-scaled big-M constants.

    ``m_price`` is twice the largest per-period sum of price deviations times
    the total unit capacity; ``m_energy`` is twice the largest boundary price
    times the largest single energy deviation.  ``epsilon`` is 1e-4 times the
    smallest positive deviation monomial.  All-zero deviations fall back to
    ``M = 1, epsilon = 1e-6`` with the warning flag set.
    """
    pr, dt = instance.prices, instance.dt
    cap = instance.total_ndres_capacity + instance.total_demand_capacity
    price_dev = pr.dam_dev_neg + pr.dam_dev_pos + pr.sr_up_dev_neg + pr.sr_down_dev_neg
    m_price = float(np.max(price_dev, initial=0.0)) * cap * dt * 2.0

    top_price = float(np.max(np.abs(pr.dam_median) + pr.dam_dev_neg + pr.dam_dev_pos, initial=0.0))
    energy_dev = [float(np.max(u.p_dev_neg, initial=0.0)) for u in instance.ndres_units]
    energy_dev += [float(np.max(p.p_dev_pos, initial=0.0)) for d in instance.demands for p in d.profiles]
    m_energy = top_price * max(energy_dev, default=0.0) * dt * 2.0

    mono = deviation_monomials(instance)
    positive = mono[mono > 0]
    if positive.size == 0 or m_price <= 0 and m_energy <= 0:
        return BigMConfig(1.0, 1.0, 1e-6, warning=True)
    eps = 1e-4 * float(positive.min())
    # a block with no deviations still needs a valid positive constant
    m_price = m_price if m_price > 0 else 1.0
    m_energy = m_energy if m_energy > 0 else 1.0
    eps = min(eps, 1e-3 * min(m_price, m_energy))
    return BigMConfig(m_price, m_energy, eps)
