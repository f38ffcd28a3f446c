"""Thin wrapper over the HiGHS LP solver shipped with scipy."""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog


def split_rows(A: sp.csr_matrix, lo: np.ndarray, hi: np.ndarray):
    """Ranged rows ``lo <= A x <= hi`` to linprog's ``A_ub``/``A_eq`` form."""
    eq = np.isfinite(lo) & np.isfinite(hi) & (lo == hi)
    up = np.isfinite(hi) & ~eq
    dn = np.isfinite(lo) & ~eq
    A_ub = sp.vstack([A[up], -A[dn]]).tocsr()
    b_ub = np.concatenate([hi[up], -lo[dn]])
    return A_ub, b_ub, A[eq], lo[eq]


def solve_lp(c, A, lo, hi, lb, ub, maximize: bool = True, split=None):
    """Optimal ``x`` or ``None`` when infeasible/unbounded/failed."""
    res = solve_lp_full(c, A, lo, hi, lb, ub, maximize, split)
    return res.x if res.status == 0 else None


def solve_lp_full(c, A, lo, hi, lb, ub, maximize: bool = True, split=None):
    A_ub, b_ub, A_eq, b_eq = split if split is not None else split_rows(A, lo, hi)
    bounds = np.column_stack([np.where(np.isfinite(lb), lb, -np.inf), np.where(np.isfinite(ub), ub, np.inf)])
    return linprog(-c if maximize else c,
                   A_ub=A_ub if A_ub.shape[0] else None, b_ub=b_ub if A_ub.shape[0] else None,
                   A_eq=A_eq if A_eq.shape[0] else None, b_eq=b_eq if A_eq.shape[0] else None,
                   bounds=bounds, method="highs")
