"""Command-line entry point.

    rvpp solve --instance inst.json --out results/
    rvpp certify --instance toy
    rvpp sweep --instance market-day --budgets 0..9 --seed 7

``--instance`` takes a JSON file or one of the bundled names (``toy``,
``toy2``, ``illustrative``, ``market-day``).  Exit codes: 0 success, 1 infeasible or
failed certification, 2 bad input.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from . import synthetic
from .instance import InstanceError, RvppInstance, UncertaintyBudgets, ensure_valid
from .io import InstanceFormatError, load_instance
from .solvers import BACKENDS, LIMITS, BackendUnavailable, SolveOptions

log = logging.getLogger("rvpp")

COMMANDS = ("solve", "certify", "baseline", "assess", "sweep", "export-mps")
BUILTIN = {
    "toy": synthetic.toy_instance,
    "toy2": synthetic.two_period_toy,
    "illustrative": synthetic.illustrative_instance,
    "market-day": synthetic.market_day_instance,
}

EXIT_OK, EXIT_FAILED, EXIT_INPUT = 0, 1, 2


class InputError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    instance: str
    out: Path = Path(".")
    options: SolveOptions = field(default_factory=SolveOptions)
    seed: int = 0
    budgets: tuple[int, ...] | None = None
    overrides: dict[str, Any] = field(default_factory=dict)
    scenarios: int = 1000
    penalty_factor: float = 3.0
    accept_incumbent: bool = False

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise InputError(f"unknown command {self.command!r}")


def parse_budgets(text: str) -> tuple[int, ...]:
    """``"0..9"`` (inclusive) or ``"0,2,5"``."""
    try:
        if ".." in text:
            lo, hi = text.split("..")
            out = tuple(range(int(lo), int(hi) + 1))
        else:
            out = tuple(int(s) for s in text.split(",") if s.strip())
    except ValueError:
        raise InputError(f"bad budget list {text!r}; use 0..9 or 0,2,5") from None
    if not out or min(out) < 0:
        raise InputError(f"bad budget list {text!r}")
    return out


def parse_unit_map(text: str) -> dict[str, int]:
    """``"pv1=2,wind=3"``."""
    out = {}
    for part in text.split(","):
        if not part.strip():
            continue
        key, sep, val = part.partition("=")
        if not sep:
            raise InputError(f"expected unit=k, got {part!r}")
        try:
            out[key.strip()] = int(val)
        except ValueError:
            raise InputError(f"budget for {key.strip()!r} is not an integer") from None
    return out


def load(spec: str) -> RvppInstance:
    if spec in BUILTIN:
        return BUILTIN[spec]()
    path = Path(spec)
    if not path.is_file():
        raise InputError(f"no instance file {spec!r} (bundled: {', '.join(BUILTIN)})")
    return load_instance(path)


def apply_overrides(inst: RvppInstance, ov: dict[str, Any]) -> RvppInstance:
    if not ov:
        return inst
    b = inst.budgets
    known_r = {u.id for u in inst.ndres_units}
    known_d = {d.id for d in inst.demands}
    for key, known in (("gamma_ndres", known_r), ("gamma_demand", known_d)):
        extra = set(ov.get(key, {})) - known
        if extra:
            raise InputError(f"{key}: unknown ids {sorted(extra)}")
    new = UncertaintyBudgets(
        gamma_dam=ov.get("gamma_dam", b.gamma_dam),
        gamma_sr_up=ov.get("gamma_sr_up", b.gamma_sr_up),
        gamma_sr_down=ov.get("gamma_sr_down", b.gamma_sr_down),
        gamma_ndres={**b.gamma_ndres, **ov.get("gamma_ndres", {})},
        gamma_demand={**b.gamma_demand, **ov.get("gamma_demand", {})},
    )
    return inst.with_budgets(new)


# ------------------------------------------------------------------ output


def _clean(obj):
    """JSON-safe copy: numpy to python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v + 0.0 if np.isfinite(v) else str(v)
    return obj


def write_json(path: Path, data) -> None:
    path.write_text(json.dumps(_clean(data), indent=2, sort_keys=True) + "\n")


def _fmt(v: float) -> str:
    return f"{v:.6f}" if np.isfinite(v) else str(v)


def _z(v: float) -> float:
    return round(float(v), 9) + 0.0


def solution_report(sol, inst: RvppInstance, title: str) -> list[str]:
    lines = [title, f"status: {sol.status}", f"objective: {_fmt(sol.objective)}"]
    if sol.decomposition is not None:
        d = sol.decomposition
        lines += ["decomposition:",
                  f"  dam income (net of reductions): {_fmt(d.dam)}",
                  f"  reserve income (net of reductions): {_fmt(d.srm)}",
                  f"  renewable operating cost: {_fmt(d.ndres_cost)}",
                  f"  demand profile cost: {_fmt(d.profile_cost)}"]
    if sol.profile:
        lines.append("profiles: " + ", ".join(f"{k}={v}" for k, v in sorted(sol.profile.items())))
    lines.append("")
    lines.append(f"{'t':>3} {'p_da':>10} {'r_up':>10} {'r_dn':>10}  dam su sd")
    f = sol.flags
    for t, label in enumerate(inst.time_grid.periods):
        lines.append(f"{label:>3} {_z(sol.p_da[t]):>10.4f} {_z(sol.r_up[t]):>10.4f} {_z(sol.r_dn[t]):>10.4f}"
                     f"  {f.dam[t]:>3} {f.sr_up[t]:>2} {f.sr_down[t]:>2}")
    for key, fl in list(f.ndres.items()) + list(f.demand.items()):
        sel = [label for label, v in zip(inst.time_grid.periods, fl) if v]
        lines.append(f"worst-case periods {key}: {sel}")
    return lines


def series_csv(sol, inst: RvppInstance) -> str:
    """Per-period bids and dispatch, for external plotting."""
    cols = {"p_da": sol.p_da, "r_up": sol.r_up, "r_dn": sol.r_dn}
    for uid, parts in sol.ndres_dispatch.items():
        for k, a in parts.items():
            cols[f"{uid}:{k}"] = a
    for did, parts in sol.demand_dispatch.items():
        for k, a in parts.items():
            cols[f"{did}:{k}"] = a
    rows = ["t," + ",".join(cols)]
    for t, label in enumerate(inst.time_grid.periods):
        rows.append(f"{label}," + ",".join(repr(float(np.asarray(a)[t]) + 0.0) for a in cols.values()))
    return "\n".join(rows) + "\n"


# ---------------------------------------------------------------- commands


def _solve(inst, cfg):
    from .solution import solve_instance
    return solve_instance(inst, cfg.options)


def cmd_solve(inst, cfg) -> int:
    sol, res, _ = _solve(inst, cfg)
    if sol is None:
        (cfg.out / "report.txt").write_text(f"solve: no solution (status {res.status})\n{res.message}\n")
        return EXIT_FAILED
    write_json(cfg.out / "solution.json", sol.as_dict())
    (cfg.out / "series.csv").write_text(series_csv(sol, inst))
    (cfg.out / "report.txt").write_text("\n".join(solution_report(sol, inst, "profit-robust solve")) + "\n")
    return EXIT_OK if res.ok else EXIT_FAILED


def cmd_certify(inst, cfg) -> int:
    from .oracle import EnumerationTooLarge, certify_max_min, realization_count
    sol, res, _ = _solve(inst, cfg)
    if sol is None or not res.ok:
        (cfg.out / "report.txt").write_text(f"certify: MILP not solved (status {res.status})\n")
        return EXIT_FAILED
    try:
        rep = certify_max_min(inst, sol.objective, sol.flags, sol.profile)
    except EnumerationTooLarge as exc:
        raise InputError(f"instance too large to certify: {exc} (count {realization_count(inst)})") from None
    write_json(cfg.out / "solution.json", sol.as_dict())
    write_json(cfg.out / "certification.json", rep.as_dict())
    lines = solution_report(sol, inst, "profit-robust solve") + [
        "", "certification",
        f"  realizations enumerated: {rep.realization_count}",
        f"  MILP objective: {_fmt(rep.milp_objective)}",
        f"  enumerated worst-case value: {_fmt(rep.oracle_value)}",
        f"  enumerated value under the model's selection rule: {_fmt(rep.formulation_value)}",
        f"  difference: {_fmt(rep.gap)} (tolerance {rep.tolerance:.3g})",
        f"  result: {'PASS' if rep.passed else 'FAIL'}",
    ]
    (cfg.out / "report.txt").write_text("\n".join(lines) + "\n")
    return EXIT_OK if rep.passed else EXIT_FAILED


def cmd_baseline(inst, cfg) -> int:
    from .baseline import solve_energy_robust
    sol = solve_energy_robust(inst, cfg.options)
    write_json(cfg.out / "solution.json", sol.as_dict())
    if not np.isfinite(sol.objective):
        (cfg.out / "report.txt").write_text(f"baseline: no solution (status {sol.status})\n")
        return EXIT_FAILED
    (cfg.out / "series.csv").write_text(series_csv(sol, inst))
    (cfg.out / "report.txt").write_text("\n".join(solution_report(sol, inst, "energy-robust baseline")) + "\n")
    return EXIT_OK


def cmd_assess(inst, cfg) -> int:
    from .assessment import METHODS, evaluate_bids, generate_scenarios, solve_method
    scen = generate_scenarios(inst, cfg.scenarios, cfg.seed)
    out, lines, code = {}, [f"out-of-sample assessment, {cfg.scenarios} scenarios, seed {cfg.seed}"], EXIT_OK
    for method in METHODS:
        sol = solve_method(inst, method, cfg.options)
        if sol is None:
            out[method] = {"status": "infeasible"}
            lines.append(f"{method}: infeasible")
            code = EXIT_FAILED
            continue
        res = evaluate_bids(sol, scen, inst, cfg.penalty_factor)
        out[method] = {"objective": sol.objective, "pi_av": res.pi_av, "k_av": res.k_av, "net": res.net,
                       "mean_shortfall_mwh": float(res.shortfall_mwh.mean())}
        lines.append(f"{method}: objective {_fmt(sol.objective)} pi_av {_fmt(res.pi_av)} "
                     f"k_av {_fmt(res.k_av)} net {_fmt(res.net)}")
        if method == METHODS[0]:
            write_json(cfg.out / "solution.json", sol.as_dict())
    write_json(cfg.out / "assessment.json", out)
    (cfg.out / "report.txt").write_text("\n".join(lines) + "\n")
    return code


def cmd_sweep(inst, cfg) -> int:
    from .assessment import budget_sweep, sweep_csv
    budgets = cfg.budgets if cfg.budgets is not None else tuple(range(10))
    if max(budgets) > inst.n_periods:
        raise InputError(f"budget {max(budgets)} exceeds the horizon of {inst.n_periods} periods")
    rows = budget_sweep(inst, budgets, count=cfg.scenarios, seed=cfg.seed, options=cfg.options,
                        penalty_factor=cfg.penalty_factor, accept_incumbent=cfg.accept_incumbent)
    (cfg.out / "sweep.csv").write_text(sweep_csv(rows))
    lines = [f"budget sweep, {cfg.scenarios} scenarios, seed {cfg.seed}",
             f"{'b':>3} {'method':<16} {'objective':>14} {'pi_av':>14} {'k_av':>14} {'net':>14} status"]
    for r in rows:
        lines.append(f"{r.budget:>3} {r.method:<16} {_fmt(r.objective):>14} {_fmt(r.pi_av):>14} "
                     f"{_fmt(r.k_av):>14} {_fmt(r.net):>14} {r.status}")
    (cfg.out / "report.txt").write_text("\n".join(lines) + "\n")
    usable = ("ok", *LIMITS) if cfg.accept_incumbent else ("ok",)
    return EXIT_OK if all(r.status in usable for r in rows) else EXIT_FAILED


def cmd_export_mps(inst, cfg) -> int:
    from .builder import assemble
    from .mps import export_mps
    model = assemble(inst)
    export_mps(model, cfg.out / "model.mps")
    (cfg.out / "report.txt").write_text(
        f"model.mps: {model.n_vars} columns, {model.n_constrs} rows, {len(model.binaries())} binaries\n")
    return EXIT_OK


HANDLERS = {"solve": cmd_solve, "certify": cmd_certify, "baseline": cmd_baseline,
            "assess": cmd_assess, "sweep": cmd_sweep, "export-mps": cmd_export_mps}


def run(cfg: RunConfig) -> int:
    try:
        inst = apply_overrides(load(cfg.instance), cfg.overrides)
        ensure_valid(inst)
        cfg.out.mkdir(parents=True, exist_ok=True)
        return HANDLERS[cfg.command](inst, cfg)
    except (InputError, InstanceError, InstanceFormatError, BackendUnavailable) as exc:
        print(f"rvpp: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rvpp", description="Robust day-ahead bidding for a renewable virtual power plant.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--instance", required=True, help="instance JSON path or bundled name: " + ", ".join(BUILTIN))
    p.add_argument("--out", default=".", help="output directory (default: current)")
    p.add_argument("--seed", type=int, default=0, help="scenario seed for assess/sweep")
    p.add_argument("--budgets", help="sweep budgets, e.g. 0..9 or 0,3,6")
    p.add_argument("--scenarios", type=int, default=1000, help="out-of-sample scenario count")
    p.add_argument("--penalty-factor", type=float, default=3.0)
    p.add_argument("--gamma-dam", type=int)
    p.add_argument("--gamma-sr-up", type=int)
    p.add_argument("--gamma-sr-down", type=int)
    p.add_argument("--gamma-ndres", help="per-unit budgets, unit=k,...")
    p.add_argument("--gamma-demand", help="per-demand budgets, demand=k,...")
    p.add_argument("--time-limit", type=float, default=300.0, help="seconds per MILP solve")
    p.add_argument("--rel-gap", type=float, default=1e-6)
    p.add_argument("--node-limit", type=int, help="branch-and-bound node cap per MILP solve (reproducible)")
    p.add_argument("--accept-incumbent", action="store_true",
                   help="sweep: keep the best plan of a solve stopped by a limit")
    p.add_argument("--backend", choices=BACKENDS, help="default: $RVPP_SOLVER or highs")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    ov: dict[str, Any] = {}
    for key in ("gamma_dam", "gamma_sr_up", "gamma_sr_down"):
        if getattr(ns, key) is not None:
            ov[key] = getattr(ns, key)
    if ns.gamma_ndres:
        ov["gamma_ndres"] = parse_unit_map(ns.gamma_ndres)
    if ns.gamma_demand:
        ov["gamma_demand"] = parse_unit_map(ns.gamma_demand)
    if ns.scenarios < 1:
        raise InputError("--scenarios must be positive")
    try:
        options = SolveOptions(rel_gap=ns.rel_gap, time_limit=ns.time_limit, backend=ns.backend,
                               node_limit=ns.node_limit)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    return RunConfig(ns.command, ns.instance, Path(ns.out), options, ns.seed,
                     parse_budgets(ns.budgets) if ns.budgets else None, ov, ns.scenarios, ns.penalty_factor,
                     ns.accept_incumbent)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:  # argparse already printed the usage message
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = config_from_args(ns)
    except InputError as exc:
        parser.print_usage(sys.stderr)
        print(f"rvpp: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
