"""Fixed-format MPS (and CPLEX LP) export, plus an MPS reader.

Names are cut to 8 characters.  Names that already fit are kept; longer ones
are truncated and, on collision, get a ``~<base36>`` suffix.  The header
comment lists the mapping so the reader can restore the original names.
Output depends only on the model, so repeated exports are byte-identical.
"""

from __future__ import annotations

import math
from pathlib import Path

from .model import BINARY, CONTINUOUS, Constraint, MilpModel, Variable

OBJ_ROW = "OBJ"
WIDTH = 8
NUM_WIDTH = 12
_B36 = "0123456789abcdefghijklmnopqrstuvwxyz"


class MpsFormatError(ValueError):
    pass


def _b36(i: int) -> str:
    s = ""
    while True:
        i, r = divmod(i, 36)
        s = _B36[r] + s
        if i == 0:
            return s


def short_names(names: list[str], reserved: tuple[str, ...] = ()) -> list[str]:
    """Collision-free names of at most 8 characters, in input order."""
    clean = [n.replace(" ", "_") for n in names]
    counts: dict[str, int] = {}
    for n in clean:
        counts[n] = counts.get(n, 0) + 1
    used = set(reserved)
    out: list[str | None] = [None] * len(clean)
    for i, n in enumerate(clean):
        if len(n) <= WIDTH and counts[n] == 1 and n not in used:
            out[i] = n
            used.add(n)
    nxt: dict[str, int] = {}
    for i, n in enumerate(clean):
        if out[i] is not None:
            continue
        cand = n[:WIDTH]
        if cand in used:
            stem = cand
            k = nxt.get(stem, 1)
            while True:
                suf = "~" + _b36(k)
                cand = stem[:WIDTH - len(suf)] + suf
                k += 1
                if cand not in used:
                    break
            nxt[stem] = k
        out[i] = cand
        used.add(cand)
    return out  # type: ignore[return-value]


def fmt_num(v: float) -> str:
    """Shortest rendering of ``v`` that fits the 12-character number field."""
    v = float(v)
    if v == 0.0:
        return "0"
    if v == int(v) and abs(v) < 1e11:
        return str(int(v))
    s = repr(v)
    if len(s) <= NUM_WIDTH:
        return s
    for prec in range(16, 0, -1):
        s = f"{v:.{prec}g}"
        if len(s) <= NUM_WIDTH:
            return s
    raise MpsFormatError(f"cannot fit {v!r} into {NUM_WIDTH} characters")


def _line(f1: str = "", f2: str = "", f3: str = "", f4: str = "", f5: str = "", f6: str = "") -> str:
    # fixed columns 2-3, 5-12, 15-22, 25-36, 40-47, 50-61
    s = " " + f1.ljust(2) + " " + f2.ljust(8) + "  " + f3.ljust(8) + "  " + f4.ljust(12)
    if f5 or f6:
        s += "   " + f5.ljust(8) + "  " + f6
    return s.rstrip()


def _sense_code(sense: str) -> str:
    return {"<=": "L", ">=": "G", "=": "E"}[sense]


def mps_text(model: MilpModel, name: str | None = None) -> str:
    vnames = short_names([v.name for v in model.variables])
    rnames = short_names([c.name for c in model.constraints], reserved=(OBJ_ROW,))
    lines = [f"* model {name or model.name}: {model.n_vars} columns, {model.n_constrs} rows",
             "* name map (kind short original)"]
    for s, v in zip(vnames, model.variables):
        if s != v.name:
            lines.append(f"* C {s} {v.name}")
    for s, c in zip(rnames, model.constraints):
        if s != c.name:
            lines.append(f"* R {s} {c.name}")
    lines.append(f"NAME          {name or model.name}")
    lines += ["OBJSENSE", "    MAX", "ROWS", _line("N", OBJ_ROW)]
    for s, c in zip(rnames, model.constraints):
        lines.append(_line(_sense_code(c.sense), s))

    cols: list[list[tuple[int, float]]] = [[] for _ in model.variables]
    for i, c in enumerate(model.constraints):
        for v, a in c.expr:
            cols[v].append((i, a))
    lines.append("COLUMNS")
    in_int = False
    marker = 0
    for j, v in enumerate(model.variables):
        is_int = v.kind == BINARY
        if is_int != in_int:
            tag = "'INTORG'" if is_int else "'INTEND'"
            lines.append(_line("", f"MARKER{marker:02d}"[:8], "'MARKER'", "", tag))
            marker += 1
            in_int = is_int
        entries = [(OBJ_ROW, model.objective[j])] if j in model.objective else []
        entries += [(rnames[i], a) for i, a in cols[j]]
        if not entries:
            entries = [(OBJ_ROW, 0.0)]
        for r, a in entries:
            lines.append(_line("", vnames[j], r, fmt_num(a)))
    if in_int:
        lines.append(_line("", f"MARKER{marker:02d}"[:8], "'MARKER'", "", "'INTEND'"))

    lines.append("RHS")
    for s, c in zip(rnames, model.constraints):
        if c.rhs != 0.0:
            lines.append(_line("", "RHS", s, fmt_num(c.rhs)))
    lines.append("RANGES")
    lines.append("BOUNDS")
    for s, v in zip(vnames, model.variables):
        lines += _bound_lines(s, v)
    lines.append("ENDATA")
    return "\n".join(lines) + "\n"


def _bound_lines(s: str, v: Variable) -> list[str]:
    lb, ub = v.lb, v.ub
    if v.kind == BINARY and lb == 0.0 and ub == 1.0:
        return [_line("BV", "BND", s)]
    if lb == ub:
        return [_line("FX", "BND", s, fmt_num(lb))]
    out = []
    if math.isinf(lb) and math.isinf(ub):
        return [_line("FR", "BND", s)]
    if math.isinf(lb):
        out.append(_line("MI", "BND", s))
    elif lb != 0.0 or (not math.isinf(ub) and ub < 0.0):
        out.append(_line("LO", "BND", s, fmt_num(lb)))
    if not math.isinf(ub):
        out.append(_line("UP", "BND", s, fmt_num(ub)))
    return out


def export_mps(model: MilpModel, path, name: str | None = None) -> Path:
    path = Path(path)
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(mps_text(model, name))
    return path


# ---------------------------------------------------------------- reading


def _fields(line: str) -> list[str]:
    return line.split()


def read_mps(path, restore_names: bool = True) -> MilpModel:
    """Parse an MPS file into a maximization ``MilpModel``.

    Accepts fixed format or whitespace-separated free format as long as names
    have no spaces.  A minimizing file is negated.  Ranged rows become two
    constraints.  Bounds follow the usual conventions: integer columns
    without bounds are binary.
    """
    text = Path(path).read_text(encoding="ascii")
    rename: dict[tuple[str, str], str] = {}
    section = None
    sense_max = False
    obj_name = None
    rows: dict[str, str] = {}
    row_order: list[str] = []
    col_order: list[str] = []
    coefs: dict[str, dict[str, float]] = {}
    kinds: dict[str, str] = {}
    rhs: dict[str, float] = {}
    ranges: dict[str, float] = {}
    bounds: dict[str, list] = {}
    in_int = False
    for raw in text.splitlines():
        if raw.startswith("*"):
            parts = raw[1:].split()
            if restore_names and len(parts) == 3 and parts[0] in ("C", "R"):
                rename[(parts[0], parts[1])] = parts[2]
            continue
        if not raw.strip():
            continue
        if not raw[0].isspace():
            head = raw.split()
            section = head[0].upper()
            if section == "OBJSENSE" and len(head) > 1:
                sense_max = head[1].upper() in ("MAX", "MAXIMIZE")
            if section == "ENDATA":
                break
            continue
        f = _fields(raw)
        if section == "OBJSENSE":
            sense_max = f[0].upper() in ("MAX", "MAXIMIZE")
        elif section == "ROWS":
            code, rname = f[0].upper(), f[1]
            if code == "N":
                if obj_name is None:
                    obj_name = rname
                continue
            rows[rname] = code
            row_order.append(rname)
        elif section == "COLUMNS":
            if len(f) >= 3 and f[1] == "'MARKER'":
                in_int = f[2] == "'INTORG'"
                continue
            cname = f[0]
            if cname not in coefs:
                coefs[cname] = {}
                col_order.append(cname)
                kinds[cname] = BINARY if in_int else CONTINUOUS
            for k in range(1, len(f) - 1, 2):
                coefs[cname][f[k]] = coefs[cname].get(f[k], 0.0) + float(f[k + 1])
        elif section == "RHS":
            pairs = f[1:] if len(f) % 2 == 1 else f
            for k in range(0, len(pairs) - 1, 2):
                rhs[pairs[k]] = float(pairs[k + 1])
        elif section == "RANGES":
            pairs = f[1:] if len(f) % 2 == 1 else f
            for k in range(0, len(pairs) - 1, 2):
                ranges[pairs[k]] = float(pairs[k + 1])
        elif section == "BOUNDS":
            btype = f[0].upper()
            valued = btype not in ("FR", "MI", "PL", "BV")
            # the bound-set name is optional in the wild
            if valued:
                cname, val = (f[2], float(f[3])) if len(f) >= 4 else (f[1], float(f[2]))
            else:
                cname, val = (f[2] if len(f) >= 3 else f[1]), None
            bounds.setdefault(cname, []).append((btype, val))
        else:
            raise MpsFormatError(f"unexpected data in section {section!r}: {raw!r}")

    model = MilpModel(Path(path).stem)
    sign = 1.0 if sense_max else -1.0
    index: dict[str, int] = {}
    for cname in col_order:
        lb, ub = 0.0, math.inf
        kind = kinds[cname]
        if kind == BINARY:
            ub = 1.0
        for btype, val in bounds.get(cname, []):
            if btype == "UP":
                ub = val
                if val < 0 and lb == 0.0 and not any(b == "LO" for b, _ in bounds[cname]):
                    lb = -math.inf
            elif btype == "LO":
                lb = val
            elif btype == "FX":
                lb = ub = val
            elif btype == "FR":
                lb, ub = -math.inf, math.inf
            elif btype == "MI":
                lb = -math.inf
            elif btype == "PL":
                ub = math.inf
            elif btype == "BV":
                lb, ub, kind = 0.0, 1.0, BINARY
            elif btype in ("LI", "UI"):
                kind = BINARY
                if btype == "LI":
                    lb = val
                else:
                    ub = val
            else:
                raise MpsFormatError(f"unknown bound type {btype}")
        if kind == BINARY and not (lb >= 0.0 and ub <= 1.0):
            raise MpsFormatError(f"integer column {cname} is not binary; only binaries are supported")
        vname = rename.get(("C", cname), cname)
        index[cname] = len(model.variables)
        model.variables.append(Variable(vname, kind, float(lb), float(ub)))
        model.registry[(vname, ())] = index[cname]
    for cname in col_order:
        c = coefs[cname].get(obj_name, 0.0) if obj_name else 0.0
        if c != 0.0:
            model.objective[index[cname]] = sign * c
    by_row: dict[str, dict[int, float]] = {r: {} for r in row_order}
    for cname in col_order:
        for r, a in coefs[cname].items():
            if r == obj_name:
                continue
            if r not in by_row:
                raise MpsFormatError(f"column {cname} references unknown row {r}")
            if a != 0.0:
                by_row[r][index[cname]] = a
    for r in row_order:
        code = rows[r]
        expr = tuple(sorted(by_row[r].items()))
        b = rhs.get(r, 0.0)
        name = rename.get(("R", r), r)
        if r in ranges:
            rng = ranges[r]
            if code == "E":
                lo, hi = (b, b + rng) if rng >= 0 else (b + rng, b)
            elif code == "G":
                lo, hi = b, b + abs(rng)
            else:
                lo, hi = b - abs(rng), b
            model.constraints.append(Constraint(name + "_lo", expr, ">=", lo))
            model.constraints.append(Constraint(name + "_hi", expr, "<=", hi))
            continue
        sense = {"L": "<=", "G": ">=", "E": "="}[code]
        model.constraints.append(Constraint(name, expr, sense, b))
    model.block_of_var = ["mps"] * len(model.variables)
    model.block_of_row = ["mps"] * len(model.constraints)
    return model.freeze()


# ---------------------------------------------------------------- LP format


def lp_name(name: str) -> str:
    """LP files take no square brackets; ``p_r[pv1,3]`` becomes ``p_r(pv1,3)``."""
    return name.replace("[", "(").replace("]", ")")


def lp_text(model: MilpModel, name: str | None = None) -> str:
    """CPLEX LP rendering; names are the model's own, bracket-free."""
    vnames = [lp_name(v.name) for v in model.variables]
    rnames = [lp_name(c.name) for c in model.constraints]

    def expr(items):
        parts = []
        for v, a in items:
            s = fmt_num(abs(a))
            parts.append(("- " if a < 0 else "+ ") + f"{s} {vnames[v]}")
        if not parts:
            return "0 " + vnames[0] if vnames else "0"
        out = " ".join(parts)
        return out[2:] if out.startswith("+ ") else out

    lines = [f"\\ model {name or model.name}", "Maximize", f" {OBJ_ROW}: " + expr(sorted(model.objective.items())),
             "Subject To"]
    for s, c in zip(rnames, model.constraints):
        lines.append(f" {s}: {expr(c.expr)} {c.sense} {fmt_num(c.rhs)}")
    lines.append("Bounds")
    for s, v in zip(vnames, model.variables):
        if v.kind == BINARY:
            continue
        lo = "-inf" if math.isinf(v.lb) else fmt_num(v.lb)
        hi = "+inf" if math.isinf(v.ub) else fmt_num(v.ub)
        lines.append(f" {lo} <= {s} <= {hi}")
    bins = [s for s, v in zip(vnames, model.variables) if v.kind == BINARY]
    if bins:
        lines.append("Binaries")
        lines += [" " + s for s in bins]
    lines.append("End")
    return "\n".join(lines) + "\n"


def export_lp(model: MilpModel, path, name: str | None = None) -> Path:
    path = Path(path)
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(lp_text(model, name))
    return path
