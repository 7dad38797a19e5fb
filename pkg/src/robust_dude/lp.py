"""Dense two-phase simplex method with Bland's anti-cycling rule.

Solves ``min c @ x  s.t.  A_eq @ x = b_eq, x >= 0``.  Problems here have at
most a few hundred variables, so a full tableau is the simplest thing that works.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DudeError

PIVOT_TOL = 1e-9
MAX_ITER = 10**6


class SolverFailure(DudeError):
    pass


class Infeasible(SolverFailure):
    pass


class Unbounded(SolverFailure):
    pass


@dataclass
class LPResult:
    x: np.ndarray
    value: float
    iterations: int
    status: str


def _pivot(tab: np.ndarray, row: int, col: int) -> None:
    tab[row] /= tab[row, col]
    col_vals = tab[:, col].copy()
    col_vals[row] = 0.0
    tab -= np.outer(col_vals, tab[row])


def _run(tab: np.ndarray, basis: list[int], n_cols: int, iters: int, max_iter: int, tol: float) -> int:
    """Iterate on `tab` whose last row is the reduced-cost row and last column the rhs."""
    while True:
        if iters >= max_iter:
            raise SolverFailure(f"simplex did not converge in {max_iter} iterations")
        reduced = tab[-1, :n_cols]
        candidates = np.flatnonzero(reduced < -tol)
        if candidates.size == 0:
            return iters
        col = int(candidates[0])
        column = tab[:-1, col]
        rows = np.flatnonzero(column > tol)
        if rows.size == 0:
            raise Unbounded("objective is unbounded below")
        ratios = tab[rows, -1] / column[rows]
        best = ratios.min()
        ties = rows[ratios <= best + tol * max(1.0, abs(best))]
        # Bland: among tied rows leave with the lowest-index basic variable
        row = int(min(ties, key=lambda r: basis[r]))
        _pivot(tab, row, col)
        basis[row] = col
        iters += 1


def simplex(c, a_eq, b_eq, tol: float = PIVOT_TOL, max_iter: int = MAX_ITER) -> LPResult:
    c = np.asarray(c, dtype=float)
    a = np.array(a_eq, dtype=float)
    b = np.array(b_eq, dtype=float)
    n_rows, n_vars = a.shape
    neg = b < 0
    a[neg] *= -1
    b[neg] *= -1

    # phase 1: artificial variable per row, minimize their sum
    n_cols = n_vars + n_rows
    tab = np.zeros((n_rows + 1, n_cols + 1))
    tab[:n_rows, :n_vars] = a
    tab[:n_rows, n_vars:n_cols] = np.eye(n_rows)
    tab[:n_rows, -1] = b
    tab[-1, :n_vars] = -a.sum(axis=0)
    tab[-1, -1] = -b.sum()
    basis = list(range(n_vars, n_cols))
    iters = _run(tab, basis, n_cols, 0, max_iter, tol)
    if -tab[-1, -1] > tol * max(1.0, b.sum()) * 10:
        raise Infeasible(f"phase 1 ended with infeasibility {-tab[-1, -1]:.3g}")

    # drive remaining artificials out of the basis; drop rows that are redundant
    keep = []
    for r in range(n_rows):
        if basis[r] >= n_vars:
            nz = np.flatnonzero(np.abs(tab[r, :n_vars]) > tol)
            if nz.size:
                _pivot(tab, r, int(nz[0]))
                basis[r] = int(nz[0])
                keep.append(r)
        else:
            keep.append(r)
    tab = np.vstack([tab[keep][:, list(range(n_vars)) + [n_cols]], np.zeros((1, n_vars + 1))])
    basis = [basis[r] for r in keep]

    # phase 2: price out the real objective
    tab[-1, :n_vars] = c
    for r, j in enumerate(basis):
        if tab[-1, j] != 0.0:
            tab[-1] -= tab[-1, j] * tab[r]
    iters = _run(tab, basis, n_vars, iters, max_iter, tol)

    x = np.zeros(n_vars)
    for r, j in enumerate(basis):
        x[j] = tab[r, -1]
    x[x < 0] = 0.0
    return LPResult(x=x, value=float(c @ x), iterations=iters, status="optimal")


def solve_min_max_simplex(costs: np.ndarray, tol: float = PIVOT_TOL, max_iter: int = MAX_ITER):
    """Minimize ``max_j sum_{w,a} costs[j, w, a] * f[w, a]`` over row-stochastic f.

    Returns ``(f, value, iterations)``; `costs` must be nonnegative.
    """
    costs = np.asarray(costs, dtype=float)
    n_ch, n_win, m = costs.shape
    n_f = n_win * m
    # columns: f (n_f), t, slacks (n_ch)
    n_vars = n_f + 1 + n_ch
    a = np.zeros((n_win + n_ch, n_vars))
    b = np.zeros(n_win + n_ch)
    for w in range(n_win):
        a[w, w * m : (w + 1) * m] = 1.0
        b[w] = 1.0
    for j in range(n_ch):
        a[n_win + j, :n_f] = costs[j].ravel()
        a[n_win + j, n_f] = -1.0
        a[n_win + j, n_f + 1 + j] = 1.0
    c = np.zeros(n_vars)
    c[n_f] = 1.0
    res = simplex(c, a, b, tol=tol, max_iter=max_iter)
    f = res.x[:n_f].reshape(n_win, m)
    f = np.clip(f, 0.0, None)
    sums = f.sum(axis=1, keepdims=True)
    f = np.where(sums > 0, f / np.where(sums > 0, sums, 1.0), 1.0 / m)
    value = float(np.max(np.einsum("jwa,wa->j", costs, f)))
    return f, value, res.iterations
