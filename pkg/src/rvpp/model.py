"""A small solver-agnostic MILP container.

Variables and constraints are named with the scheme ``sym[i,j,t]``.  Linear
expressions are plain ``{variable index: coefficient}`` dicts.  The model is
maximized.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np
import scipy.sparse as sp

CONTINUOUS = "C"
BINARY = "B"
SENSES = ("<=", "=", ">=")

Expr = dict[int, float]


class AssemblyError(RuntimeError):
    """Structural error while building a model (missing symbol, bad index)."""


@dataclass(frozen=True)
class Variable:
    name: str
    kind: str
    lb: float
    ub: float


@dataclass(frozen=True)
class Constraint:
    name: str
    expr: tuple[tuple[int, float], ...]
    sense: str
    rhs: float


def vname(symbol: str, idx: tuple) -> str:
    if not idx:
        return symbol
    return f"{symbol}[{','.join(str(i) for i in idx)}]"


def lin(*terms: tuple[int, float] | Mapping[int, float]) -> Expr:
    """Sum ``(var, coef)`` pairs and expressions into one expression."""
    out: Expr = {}
    for term in terms:
        items = term.items() if isinstance(term, Mapping) else [term]
        for v, c in items:
            if c != 0.0:
                out[v] = out.get(v, 0.0) + float(c)
    return out


class MilpModel:
    def __init__(self, name: str = "rvpp"):
        self.name = name
        self.variables: list[Variable] = []
        self.constraints: list[Constraint] = []
        self.objective: Expr = {}
        self.registry: dict[tuple[str, tuple], int] = {}
        self._names: set[str] = set()
        self._frozen = False
        self.block_of_row: list[str] = []
        self.block_of_var: list[str] = []
        self._block = "model"

    # building

    def _check_open(self):
        if self._frozen:
            raise AssemblyError("model is frozen")

    def block(self, name: str) -> "MilpModel":
        self._block = name
        return self

    def add_var(self, symbol: str, idx: tuple = (), kind: str = CONTINUOUS,
                lb: float = 0.0, ub: float = np.inf) -> int:
        self._check_open()
        key = (symbol, tuple(idx))
        if key in self.registry:
            raise AssemblyError(f"variable {vname(*key)} registered twice")
        if kind == BINARY:
            lb, ub = 0.0, 1.0
        if lb > ub:
            raise AssemblyError(f"variable {vname(*key)} has empty bounds [{lb}, {ub}]")
        name = vname(*key)
        self.registry[key] = len(self.variables)
        self.variables.append(Variable(name, kind, float(lb), float(ub)))
        self.block_of_var.append(self._block)
        return self.registry[key]

    def var(self, symbol: str, *idx) -> int:
        try:
            return self.registry[(symbol, tuple(idx))]
        except KeyError:
            raise AssemblyError(f"missing registry entry {vname(symbol, tuple(idx))}") from None

    def has(self, symbol: str, *idx) -> bool:
        return (symbol, tuple(idx)) in self.registry

    def add_constr(self, symbol: str, idx: tuple, expr: Mapping[int, float], sense: str, rhs: float) -> int:
        self._check_open()
        if sense not in SENSES:
            raise AssemblyError(f"bad sense {sense!r}")
        name = vname(symbol, tuple(idx))
        if name in self._names:
            raise AssemblyError(f"constraint {name} added twice")
        n = len(self.variables)
        for v in expr:
            if not 0 <= v < n:
                raise AssemblyError(f"constraint {name} references unknown variable {v}")
        self._names.add(name)
        terms = tuple(sorted((int(v), float(c)) for v, c in expr.items() if c != 0.0))
        self.constraints.append(Constraint(name, terms, sense, float(rhs)))
        self.block_of_row.append(self._block)
        return len(self.constraints) - 1

    def add_objective_terms(self, expr: Mapping[int, float]) -> None:
        self._check_open()
        for v, c in expr.items():
            self.objective[v] = self.objective.get(v, 0.0) + float(c)

    def freeze(self) -> "MilpModel":
        self._frozen = True
        return self

    @property
    def frozen(self) -> bool:
        return self._frozen

    # inspection

    @property
    def n_vars(self) -> int:
        return len(self.variables)

    @property
    def n_constrs(self) -> int:
        return len(self.constraints)

    def binaries(self) -> np.ndarray:
        return np.array([i for i, v in enumerate(self.variables) if v.kind == BINARY], dtype=int)

    def census(self) -> dict[str, dict[str, int]]:
        """Variable and constraint counts per building block."""
        out: dict[str, dict[str, int]] = {}
        for b in self.block_of_var:
            out.setdefault(b, {"variables": 0, "constraints": 0})["variables"] += 1
        for b in self.block_of_row:
            out.setdefault(b, {"variables": 0, "constraints": 0})["constraints"] += 1
        return out

    def value(self, x: np.ndarray, symbol: str, *idx) -> float:
        return float(x[self.var(symbol, *idx)])

    def objective_value(self, x: np.ndarray) -> float:
        return float(sum(c * x[v] for v, c in self.objective.items()))

    def symbols(self) -> set[str]:
        return {s for s, _ in self.registry}

    def to_arrays(self) -> "ArrayForm":
        n, m = self.n_vars, self.n_constrs
        rows, cols, vals = [], [], []
        lo = np.empty(m)
        hi = np.empty(m)
        for i, con in enumerate(self.constraints):
            for v, c in con.expr:
                rows.append(i)
                cols.append(v)
                vals.append(c)
            lo[i] = con.rhs if con.sense in ("=", ">=") else -np.inf
            hi[i] = con.rhs if con.sense in ("=", "<=") else np.inf
        A = sp.csr_matrix((vals, (rows, cols)), shape=(m, n))
        c = np.zeros(n)
        for v, coef in self.objective.items():
            c[v] = coef
        lb = np.array([v.lb for v in self.variables])
        ub = np.array([v.ub for v in self.variables])
        integ = np.array([1 if v.kind == BINARY else 0 for v in self.variables], dtype=int)
        return ArrayForm(c, A, lo, hi, lb, ub, integ)

    def max_violation(self, x: np.ndarray) -> tuple[float, str]:
        """Largest bound or row violation at ``x`` and where it occurs."""
        arr = self.to_arrays()
        worst, where = 0.0, ""
        bv = np.maximum(arr.lb - x, x - arr.ub)
        if bv.size and bv.max() > worst:
            k = int(bv.argmax())
            worst, where = float(bv[k]), self.variables[k].name
        ax = arr.A @ x
        rv = np.maximum(arr.row_lo - ax, ax - arr.row_hi)
        if rv.size and rv.max() > worst:
            k = int(rv.argmax())
            worst, where = float(rv[k]), self.constraints[k].name
        return worst, where


@dataclass(frozen=True)
class ArrayForm:
    c: np.ndarray
    A: sp.csr_matrix
    row_lo: np.ndarray
    row_hi: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    integrality: np.ndarray
