"""Dense two-phase simplex for small linear programs with ``x >= 0``."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

TOL = 1e-9


@dataclass
class LPResult:
    x: np.ndarray | None
    value: float | None
    status: str  # "optimal", "infeasible" or "unbounded"
    pivots: int = 0


def _pivot(T: np.ndarray, basis: list, r: int, c: int) -> None:
    T[r] /= T[r, c]
    col = T[:, c].copy()
    col[r] = 0.0
    T -= np.outer(col, T[r])
    basis[r] = c


def _run(T: np.ndarray, basis: list, allowed: np.ndarray, max_pivots: int) -> tuple[str, int]:
    """Minimize the objective in the last row of ``T`` (reduced costs)."""
    pivots = 0
    degenerate = 0
    while pivots < max_pivots:
        red = T[-1, :-1]
        cand = np.nonzero((red < -TOL) & allowed)[0]
        if cand.size == 0:
            return "optimal", pivots
        # Dantzig's rule, falling back to Bland's after a run of degenerate steps
        c = int(cand[0]) if degenerate > 50 else int(cand[np.argmin(red[cand])])
        col = T[:-1, c]
        pos = col > TOL
        if not pos.any():
            return "unbounded", pivots
        ratios = np.full(col.shape, np.inf)
        ratios[pos] = T[:-1, -1][pos] / col[pos]
        best = ratios.min()
        ties = np.nonzero(ratios <= best + TOL * max(1.0, abs(best)))[0]
        r = int(min(ties, key=lambda k: basis[k]))
        degenerate = degenerate + 1 if best <= TOL else 0
        _pivot(T, basis, r, c)
        pivots += 1
    raise RuntimeError("simplex pivot limit reached")


def simplex_solve(c, A, b, sense, maximize: bool = False, max_pivots: int = 50_000) -> LPResult:
    """Solve ``min`` (or ``max``) ``c @ x`` subject to ``A x (sense) b``, ``x >= 0``.

    Parameters
    ----------
    sense : sequence of {"<=", ">=", "=="}
        One entry per row of ``A``.

    Returns
    -------
    LPResult
        ``x`` and ``value`` are None unless ``status == "optimal"``.
    """
    c = np.asarray(c, dtype=float)
    A = np.atleast_2d(np.asarray(A, dtype=float)).copy()
    b = np.asarray(b, dtype=float).copy()
    sense = list(sense)
    m, n = A.shape
    if len(sense) != m or b.shape != (m,) or c.shape != (n,):
        raise ValueError("inconsistent LP dimensions")
    for k in range(m):
        if sense[k] not in ("<=", ">=", "=="):
            raise ValueError(f"unknown constraint sense {sense[k]!r}")
        if b[k] < 0:
            A[k], b[k] = -A[k], -b[k]
            sense[k] = {"<=": ">=", ">=": "<=", "==": "=="}[sense[k]]

    n_slack = sum(s != "==" for s in sense)
    n_art = sum(s != "<=" for s in sense)
    width = n + n_slack + n_art
    T = np.zeros((m + 1, width + 1))
    T[:m, :n] = A
    T[:m, -1] = b
    basis = [0] * m
    s_col, a_col = n, n + n_slack
    art = []
    for k, s in enumerate(sense):
        if s == "<=":
            T[k, s_col] = 1.0
            basis[k] = s_col
            s_col += 1
        else:
            if s == ">=":
                T[k, s_col] = -1.0
                s_col += 1
            T[k, a_col] = 1.0
            basis[k] = a_col
            art.append(a_col)
            a_col += 1

    allowed = np.ones(width, dtype=bool)
    pivots = 0
    if art:
        # phase 1: minimize the sum of artificials
        T[-1, art] = 1.0
        for k in range(m):
            if basis[k] in art:
                T[-1] -= T[k]
        status, pivots = _run(T, basis, allowed, max_pivots)
        if T[-1, -1] < -TOL * max(1.0, np.abs(b).max(initial=0.0)):
            return LPResult(None, None, "infeasible", pivots)
        allowed[art] = False
        for k in range(m):
            if basis[k] in art:
                nz = np.nonzero((np.abs(T[k, :-1]) > TOL) & allowed)[0]
                if nz.size:
                    _pivot(T, basis, k, int(nz[0]))
                # otherwise the row is redundant and the artificial stays at zero

    # phase 2
    cost = -c if maximize else c
    T[-1] = 0.0
    T[-1, :n] = cost
    for k in range(m):
        if basis[k] < n:
            T[-1] -= cost[basis[k]] * T[k]
    status, p2 = _run(T, basis, allowed, max_pivots)
    pivots += p2
    if status != "optimal":
        return LPResult(None, None, status, pivots)
    x = np.zeros(width)
    for k in range(m):
        x[basis[k]] = T[k, -1]
    x = np.maximum(x[:n], 0.0)
    return LPResult(x, float(c @ x), "optimal", pivots)


def vertex_enumeration(c, A, b, sense, maximize: bool = False) -> LPResult:
    """Brute-force oracle for tiny LPs: best feasible basic solution.

    Adds ``x >= 0`` as explicit constraints and tries every square subset
    of active constraints. Unboundedness is not detected.
    """
    from itertools import combinations

    c = np.asarray(c, dtype=float)
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.asarray(b, dtype=float)
    n = c.size
    G = np.vstack([A, np.eye(n)])
    h = np.r_[b, np.zeros(n)]
    senses = list(sense) + [">="] * n
    best = None
    for rows in combinations(range(len(h)), n):
        M = G[list(rows)]
        if abs(np.linalg.det(M)) < 1e-12:
            continue
        x = np.linalg.solve(M, h[list(rows)])
        lhs = G @ x
        ok = all(
            (s == "<=" and l <= r + 1e-9) or (s == ">=" and l >= r - 1e-9) or (s == "==" and abs(l - r) <= 1e-9)
            for l, r, s in zip(lhs, h, senses)
        )
        if ok:
            v = float(c @ x)
            if best is None or (v > best[1] if maximize else v < best[1]):
                best = (x, v)
    if best is None:
        return LPResult(None, None, "infeasible")
    return LPResult(best[0], best[1], "optimal")
