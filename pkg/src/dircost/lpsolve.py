"""Minimise a nonnegative linear cost over a rate region.

Dense two-phase tableau simplex.  Entering columns follow the steepest
reduced cost, except that whenever that choice would be a degenerate (zero
length) step the pivot is re-chosen by Bland's smallest-index rule; every
pivot inside a potential cycle is therefore a Bland pivot, so the method
terminates.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations, islice
from math import comb

import numpy as np

from .regions.core import RateRegion, RateVar

PIVOT_TOL = 1e-9
FEAS_TOL = 1e-8


class LpError(ValueError):
    pass


@dataclass
class LinearProgram:
    region: RateRegion
    objective: dict[RateVar, float]

    def __post_init__(self):
        known = set(self.region.vars)
        stray = [v.name for v in self.objective if v not in known]
        if stray:
            raise LpError(f"objective references variables outside the region: {stray}")
        bad = [v.name for v, w in self.objective.items() if not (w >= 0 and np.isfinite(w))]
        if bad:
            raise LpError(f"objective weights must be finite and nonnegative: {bad}")

    def cost_vector(self) -> np.ndarray:
        return np.array([float(self.objective.get(v, 0.0)) for v in self.region.vars])


@dataclass
class LpSolution:
    status: str  # "optimal" | "infeasible" | "unbounded"
    value: float = float("nan")
    assignment: dict[RateVar, float] = field(default_factory=dict)
    pivots: int = 0

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


def _pivot(T: np.ndarray, basis: list[int], r: int, c: int) -> None:
    T[r] /= T[r, c]
    col = T[:, c].copy()
    col[r] = 0.0
    T -= np.outer(col, T[r])
    basis[r] = c


def _run(T: np.ndarray, basis: list[int], allowed: np.ndarray, max_iter: int) -> tuple[str, int]:
    """Optimise the tableau whose last row holds reduced costs (minimisation)."""
    m = T.shape[0] - 1
    its = 0
    while its < max_iter:
        red = T[-1, :-1]
        cand = np.flatnonzero((red < -PIVOT_TOL) & allowed)
        if cand.size == 0:
            return "optimal", its
        rhs = T[:m, -1]

        def ratio(c):
            col = T[:m, c]
            rows = np.flatnonzero(col > PIVOT_TOL)
            if rows.size == 0:
                return None, None
            ratios = rhs[rows] / col[rows]
            best = ratios.min()
            tied = rows[ratios <= best + 1e-12]
            # Bland leaving rule: smallest basic variable index among ties
            r = int(tied[np.argmin([basis[t] for t in tied])])
            return r, best

        c = int(cand[np.argmin(red[cand])])
        r, step = ratio(c)
        if r is not None and step <= PIVOT_TOL:
            c = int(cand[0])
            r, step = ratio(c)
        if r is None:
            return "unbounded", its
        _pivot(T, basis, r, c)
        its += 1
    raise LpError(f"simplex did not converge within {max_iter} pivots")


def solve_standard(A: np.ndarray, b: np.ndarray, c: np.ndarray, max_iter: int | None = None) -> tuple[str, np.ndarray, float, int]:
    """min c.x subject to A x >= b, x >= 0."""
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    c = np.asarray(c, dtype=float)
    m, n = A.shape
    if c.shape != (n,) or b.shape != (m,):
        raise LpError("dimension mismatch between constraints and objective")
    if m == 0:
        return ("optimal", np.zeros(n), 0.0, 0) if np.all(c >= 0) else ("unbounded", np.zeros(n), -np.inf, 0)
    max_iter = max_iter or 50 * (m + n) + 1000
    # rows with b <= 0 become -A x + s = -b (s basic); others A x - s + a = b
    pos = b > 0
    n_art = int(pos.sum())
    width = n + m + n_art
    T = np.zeros((m + 1, width + 1))
    basis = [0] * m
    art = n + m
    for r in range(m):
        if pos[r]:
            T[r, :n] = A[r]
            T[r, n + r] = -1.0
            T[r, art] = 1.0
            T[r, -1] = b[r]
            basis[r] = art
            art += 1
        else:
            T[r, :n] = -A[r]
            T[r, n + r] = 1.0
            T[r, -1] = -b[r]
            basis[r] = n + r
    pivots = 0
    allowed = np.ones(width, dtype=bool)
    if n_art:
        # phase 1: minimise the sum of artificials
        T[-1, :] = 0.0
        T[-1, n + m : width] = 1.0
        for r in np.flatnonzero(pos):
            T[-1] -= T[r]
        _, its = _run(T, basis, allowed, max_iter)
        pivots += its
        scale = max(1.0, float(np.abs(b).max()))
        if -T[-1, -1] > FEAS_TOL * scale:
            return "infeasible", np.full(n, np.nan), float("nan"), pivots
        # drive remaining artificials out of the basis
        for r in range(m):
            if basis[r] >= n + m:
                row = T[r, : n + m]
                nz = np.flatnonzero(np.abs(row) > PIVOT_TOL)
                if nz.size:
                    _pivot(T, basis, r, int(nz[0]))
                    pivots += 1
        keep = [r for r in range(m) if basis[r] < n + m]
        T = np.vstack([T[keep], T[-1:]])
        basis = [basis[r] for r in keep]
        allowed[n + m :] = False
        T[:, n + m : width] = 0.0
    # phase 2
    cost = np.zeros(width)
    cost[:n] = c
    T[-1, :-1] = cost
    T[-1, -1] = 0.0
    for r, bv in enumerate(basis):
        if cost[bv] != 0.0:
            T[-1] -= cost[bv] * T[r]
    status, its = _run(T, basis, allowed, max_iter)
    pivots += its
    x = np.zeros(width)
    for r, bv in enumerate(basis):
        x[bv] = T[r, -1]
    xs = np.maximum(x[:n], 0.0)
    if status != "optimal":
        return status, xs, -np.inf, pivots
    return "optimal", xs, float(c @ xs), pivots


def minimize(lp: LinearProgram) -> LpSolution:
    A, b = lp.region.matrix()
    c = lp.cost_vector()
    status, x, value, pivots = solve_standard(A, b, c)
    if status != "optimal":
        return LpSolution(status, value, pivots=pivots)
    return LpSolution("optimal", value, dict(zip(lp.region.vars, map(float, x))), pivots)


ORACLE_MAX_VARS = 8
ORACLE_MAX_CONSTRAINTS = 40


def vertex_enumerate(A: np.ndarray, b: np.ndarray, c: np.ndarray, *, chunk: int = 50_000) -> tuple[str, np.ndarray, float]:
    """Brute-force min c.x over {A x >= b, x >= 0} by visiting every basic point."""
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    c = np.asarray(c, dtype=float)
    m, n = A.shape
    H = np.vstack([A, np.eye(n)])
    h = np.concatenate([b, np.zeros(n)])
    best_val, best_x = np.inf, None
    combos = combinations(range(m + n), n)
    total = comb(m + n, n)
    done = 0
    while done < total:
        idx = np.array(list(islice(combos, chunk)), dtype=np.intp)
        done += len(idx)
        M = H[idx]
        rhs = h[idx]
        det = np.linalg.det(M)
        ok = np.abs(det) > 1e-10
        if not ok.any():
            continue
        X = np.linalg.solve(M[ok], rhs[ok][..., None])[..., 0]
        feas = np.all(X @ A.T >= b - 1e-9, axis=1) & np.all(X >= -1e-9, axis=1)
        if not feas.any():
            continue
        X = X[feas]
        vals = X @ c
        k = int(np.argmin(vals))
        if vals[k] < best_val - 1e-12:
            best_val, best_x = float(vals[k]), X[k]
    if best_x is None:
        return "infeasible", np.full(n, np.nan), float("nan")
    return "optimal", np.maximum(best_x, 0.0), best_val


def vertex_oracle(lp: LinearProgram) -> LpSolution:
    A, b = lp.region.matrix()
    m, n = A.shape
    if n > ORACLE_MAX_VARS or m > ORACLE_MAX_CONSTRAINTS:
        raise LpError(f"vertex oracle limited to {ORACLE_MAX_VARS} variables and {ORACLE_MAX_CONSTRAINTS} constraints")
    status, x, value = vertex_enumerate(A, b, lp.cost_vector())
    if status != "optimal":
        return LpSolution(status)
    return LpSolution("optimal", value, dict(zip(lp.region.vars, map(float, x))))


def check_solution(lp: LinearProgram, sol: LpSolution, tol: float = FEAS_TOL) -> list[str]:
    """Problems with an optimal solution: constraint violations and value mismatch."""
    problems = [f"{c.label or c}: short by {-gap:.3g}" for c, gap in lp.region.violations(sol.assignment, tol)]
    value = sum(w * sol.assignment.get(v, 0.0) for v, w in lp.objective.items())
    if abs(value - sol.value) > tol * max(1.0, abs(value)):
        problems.append(f"reported value {sol.value!r} differs from objective {value!r}")
    return problems

