"""JSON and CSV serialization of instances."""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Any

import numpy as np

from .instance import (
    SERIES_FIELDS,
    BigMConfig,
    DemandProfile,
    DemandUnit,
    MarketPrices,
    MarketRules,
    NdResUnit,
    RvppInstance,
    TimeGrid,
    UncertaintyBudgets,
)


class InstanceFormatError(ValueError):
    pass


def _list(arr) -> list[float]:
    return [float(x) for x in np.asarray(arr, dtype=float)]


def instance_to_dict(inst: RvppInstance) -> dict[str, Any]:
    b = inst.budgets
    out: dict[str, Any] = {
        "time_grid": {"periods": list(inst.time_grid.periods), "delta_t": inst.time_grid.delta_t},
        "ndres_units": [
            {"id": u.id, "p_median": _list(u.p_median), "p_dev_neg": _list(u.p_dev_neg),
             "p_min": u.p_min, "p_max": u.p_max, "om_cost": u.om_cost}
            for u in inst.ndres_units
        ],
        "demands": [
            {"id": d.id,
             "profiles": [{"profile_id": p.profile_id, "p_median": _list(p.p_median),
                           "p_dev_pos": _list(p.p_dev_pos), "cost": p.cost} for p in d.profiles],
             "p_min": d.p_min, "p_max": d.p_max,
             "beta_up": _list(d.beta_up), "beta_down": _list(d.beta_down),
             "ramp_up": d.ramp_up, "ramp_down": d.ramp_down,
             "sr_ramp_up": d.sr_ramp_up, "sr_ramp_down": d.sr_ramp_down, "e_min": d.e_min}
            for d in inst.demands
        ],
        "prices": {name: _list(getattr(inst.prices, name)) for name in SERIES_FIELDS},
        "budgets": {"gamma_dam": b.gamma_dam, "gamma_sr_up": b.gamma_sr_up,
                    "gamma_sr_down": b.gamma_sr_down,
                    "gamma_ndres": dict(b.gamma_ndres), "gamma_demand": dict(b.gamma_demand)},
        "rules": {"rho": _list(inst.rules.rho), "kappa": inst.rules.kappa, "t_sr": inst.rules.t_sr},
    }
    if inst.big_m is not None:
        out["big_m"] = {"m_price": inst.big_m.m_price, "m_energy": inst.big_m.m_energy,
                        "epsilon": inst.big_m.epsilon}
    return out


def _req(tree: dict, key: str, where: str):
    if not isinstance(tree, dict) or key not in tree:
        raise InstanceFormatError(f"missing key '{key}' in {where}")
    return tree[key]


def instance_from_dict(tree: dict[str, Any]) -> RvppInstance:
    """Build an instance from a parsed JSON tree.

    Structural problems (missing keys, wrong types) raise
    ``InstanceFormatError``; semantic checks are left to validation.
    """
    try:
        tg = _req(tree, "time_grid", "root")
        if "periods" in tg:
            grid = TimeGrid(tuple(tg["periods"]), float(tg.get("delta_t", 1.0)))
        else:
            grid = TimeGrid.of(int(_req(tg, "n_periods", "time_grid")), float(tg.get("delta_t", 1.0)))
        n = grid.n

        def scalar_or_series(value):
            if isinstance(value, (int, float)):
                return [float(value)] * n
            return value

        units = tuple(
            NdResUnit(str(_req(u, "id", "ndres_units[]")), _req(u, "p_median", "ndres unit"),
                      _req(u, "p_dev_neg", "ndres unit"), float(u.get("p_min", 0.0)),
                      float(_req(u, "p_max", "ndres unit")), float(u.get("om_cost", 0.0)))
            for u in tree.get("ndres_units", [])
        )
        demands = []
        for d in tree.get("demands", []):
            profiles = tuple(
                DemandProfile(str(_req(p, "profile_id", "profile")), _req(p, "p_median", "profile"),
                              p.get("p_dev_pos", [0.0] * n), float(p.get("cost", 0.0)))
                for p in _req(d, "profiles", "demand")
            )
            demands.append(DemandUnit(
                str(_req(d, "id", "demands[]")), profiles, float(d.get("p_min", 0.0)),
                float(_req(d, "p_max", "demand")),
                scalar_or_series(d.get("beta_up", 0.0)), scalar_or_series(d.get("beta_down", 0.0)),
                float(d.get("ramp_up", 1e6)), float(d.get("ramp_down", 1e6)),
                float(d.get("sr_ramp_up", 1e6)), float(d.get("sr_ramp_down", 1e6)),
                float(d.get("e_min", 0.0)),
            ))
        pt = _req(tree, "prices", "root")
        prices = MarketPrices(**{name: scalar_or_series(pt.get(name, 0.0)) for name in SERIES_FIELDS})
        bt = tree.get("budgets", {})
        budgets = UncertaintyBudgets(
            int(bt.get("gamma_dam", 0)), int(bt.get("gamma_sr_up", 0)), int(bt.get("gamma_sr_down", 0)),
            {str(k): int(v) for k, v in bt.get("gamma_ndres", {}).items()},
            {str(k): int(v) for k, v in bt.get("gamma_demand", {}).items()},
        )
        rt = _req(tree, "rules", "root")
        rules = MarketRules(scalar_or_series(rt.get("rho", 1.0)), float(rt.get("kappa", 1.0)),
                            float(rt.get("t_sr", 5.0)))
        bm = tree.get("big_m")
        big_m = None
        if bm is not None:
            big_m = BigMConfig(float(bm["m_price"]), float(bm["m_energy"]), float(bm["epsilon"]))
    except (TypeError, ValueError, KeyError) as exc:
        if isinstance(exc, InstanceFormatError):
            raise
        raise InstanceFormatError(f"malformed instance: {exc}") from exc
    return RvppInstance(grid, units, tuple(demands), prices, budgets, rules, big_m)


def dumps(inst: RvppInstance) -> str:
    return json.dumps(instance_to_dict(inst), indent=2, sort_keys=False) + "\n"


def loads(text: str) -> RvppInstance:
    try:
        tree = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceFormatError(f"not valid JSON: {exc}") from exc
    return instance_from_dict(tree)


def load_instance(path: str | Path) -> RvppInstance:
    return loads(Path(path).read_text())


def save_instance(inst: RvppInstance, path: str | Path) -> None:
    Path(path).write_text(dumps(inst))


# ---------------------------------------------------------------------- CSV


def read_series_csv(path: str | Path) -> dict[str, list[float]]:
    """Read a CSV with one column per series and a header naming each one."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise InstanceFormatError(f"{path}: empty CSV")
        cols: dict[str, list[float]] = {name.strip(): [] for name in reader.fieldnames}
        for row in reader:
            for name, value in row.items():
                try:
                    cols[name.strip()].append(float(value))
                except (TypeError, ValueError) as exc:
                    raise InstanceFormatError(f"{path}: bad value {value!r} in column {name}") from exc
    return cols


def apply_series(tree: dict[str, Any], cols: dict[str, list[float]]) -> dict[str, Any]:
    """Overlay CSV columns onto a JSON tree.

    Column names address series as ``dam_median`` (any price field), ``rho``,
    ``<unit>.p_median`` / ``<unit>.p_dev_neg`` for ND-RES units,
    ``<demand>.<profile>.p_median`` / ``.p_dev_pos`` for demand profiles and
    ``<demand>.beta_up`` / ``.beta_down``.  A ``period`` column is ignored.
    """
    tree = json.loads(json.dumps(tree))
    units = {u["id"]: u for u in tree.get("ndres_units", [])}
    demands = {d["id"]: d for d in tree.get("demands", [])}
    for name, values in cols.items():
        if name in ("period", "t"):
            continue
        if name in SERIES_FIELDS:
            tree.setdefault("prices", {})[name] = values
            continue
        if name == "rho":
            tree.setdefault("rules", {})["rho"] = values
            continue
        parts = name.split(".")
        if len(parts) == 2 and parts[0] in units and parts[1] in ("p_median", "p_dev_neg"):
            units[parts[0]][parts[1]] = values
        elif len(parts) == 2 and parts[0] in demands and parts[1] in ("beta_up", "beta_down"):
            demands[parts[0]][parts[1]] = values
        elif len(parts) == 3 and parts[0] in demands and parts[2] in ("p_median", "p_dev_pos"):
            profs = {p["profile_id"]: p for p in demands[parts[0]]["profiles"]}
            if parts[1] not in profs:
                raise InstanceFormatError(f"unknown profile in column {name}")
            profs[parts[1]][parts[2]] = values
        else:
            raise InstanceFormatError(f"unrecognized series column {name}")
    return tree


def load_instance_with_csv(json_path: str | Path, csv_path: str | Path) -> RvppInstance:
    tree = json.loads(Path(json_path).read_text())
    return instance_from_dict(apply_series(tree, read_series_csv(csv_path)))
