"""Two-phase primal simplex over exact rationals.

Width values are exponents, so float drift is unacceptable: every entry is a
``fractions.Fraction`` and pivoting follows Bland's rule, which rules out
cycling.  Problem sizes here are tiny (tens of rows/columns), so the dense
tableau is fine.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence


@dataclass
class LpResult:
    status: str  # "optimal" | "infeasible" | "unbounded"
    value: Optional[Fraction]
    solution: Optional[list[Fraction]]


def _pivot(tableau: list[list[Fraction]], basis: list[int], row: int, col: int) -> None:
    piv = tableau[row][col]
    tableau[row] = [x / piv for x in tableau[row]]
    for r, vec in enumerate(tableau):
        if r != row and vec[col] != 0:
            factor = vec[col]
            tableau[r] = [a - factor * b for a, b in zip(vec, tableau[row])]
    basis[row] = col


def _run_simplex(tableau: list[list[Fraction]], basis: list[int], cost: list[Fraction]) -> str:
    """Maximize ``cost`` over the feasible dictionary in ``tableau``.

    The last tableau row is the objective in reduced form (updated by
    pivots); returns "optimal" or "unbounded".
    """
    ncols = len(tableau[0]) - 1
    obj = [Fraction(0)] * (ncols + 1)
    for j in range(ncols):
        obj[j] = -cost[j]
    tableau.append(obj)
    # Price out the starting basis.
    for r, b in enumerate(basis):
        if cost[b] != 0:
            factor = tableau[-1][b]
            tableau[-1] = [a - factor * x for a, x in zip(tableau[-1], tableau[r])]
    while True:
        entering = None
        for j in range(ncols):
            if tableau[-1][j] < 0:
                entering = j  # Bland: smallest index
                break
        if entering is None:
            return "optimal"
        leaving = None
        best = None
        for r in range(len(basis)):
            a = tableau[r][entering]
            if a > 0:
                ratio = tableau[r][-1] / a
                if best is None or ratio < best or (ratio == best and basis[r] < basis[leaving]):
                    best = ratio
                    leaving = r
        if leaving is None:
            return "unbounded"
        _pivot(tableau, basis, leaving, entering)


def solve_lp(
    objective: Sequence, constraints: Sequence[tuple[Sequence, str, object]], maximize: bool = True
) -> LpResult:
    """Solve max/min objective . x  subject to rows (coeffs, rel, rhs), x >= 0.

    ``rel`` is one of "<=", ">=", "=".  Returns an exact optimal basic
    solution when one exists.
    """
    n = len(objective)
    c = [Fraction(v) for v in objective]
    if not maximize:
        c = [-v for v in c]
    rows = []
    for coeffs, rel, rhs in constraints:
        coeffs = [Fraction(v) for v in coeffs]
        rhs = Fraction(rhs)
        if rhs < 0:
            coeffs = [-v for v in coeffs]
            rhs = -rhs
            rel = {"<=": ">=", ">=": "<=", "=": "="}[rel]
        rows.append((coeffs, rel, rhs))

    nslack = sum(1 for _, rel, _ in rows if rel in ("<=", ">="))
    nart = sum(1 for _, rel, _ in rows if rel in (">=", "="))
    total = n + nslack + nart
    tableau: list[list[Fraction]] = []
    basis: list[int] = []
    slack_at = n
    art_at = n + nslack
    art_cols = []
    for coeffs, rel, rhs in rows:
        vec = [Fraction(0)] * (total + 1)
        for j, v in enumerate(coeffs):
            vec[j] = v
        if rel == "<=":
            vec[slack_at] = Fraction(1)
            basis.append(slack_at)
            slack_at += 1
        elif rel == ">=":
            vec[slack_at] = Fraction(-1)
            slack_at += 1
            vec[art_at] = Fraction(1)
            basis.append(art_at)
            art_cols.append(art_at)
            art_at += 1
        else:
            vec[art_at] = Fraction(1)
            basis.append(art_at)
            art_cols.append(art_at)
            art_at += 1
        vec[-1] = rhs
        tableau.append(vec)

    if art_cols:
        phase1 = [Fraction(0)] * total
        for j in art_cols:
            phase1[j] = Fraction(-1)
        status = _run_simplex(tableau, basis, phase1)
        if status != "optimal" or tableau[-1][-1] != 0:
            return LpResult("infeasible", None, None)
        tableau.pop()
        # Drive leftover artificials out of the basis (degenerate rows).
        drop = []
        for r, b in enumerate(basis):
            if b in art_cols:
                piv_col = next(
                    (j for j in range(n + nslack) if tableau[r][j] != 0), None
                )
                if piv_col is None:
                    drop.append(r)
                else:
                    _pivot(tableau, basis, r, piv_col)
        for r in sorted(drop, reverse=True):
            tableau.pop(r)
            basis.pop(r)
        # Forbid artificials from re-entering.
        for vec in tableau:
            for j in art_cols:
                vec[j] = Fraction(0)

    status = _run_simplex(tableau, basis, c + [Fraction(0)] * (nslack + nart))
    if status == "unbounded":
        return LpResult("unbounded", None, None)
    value = tableau[-1][-1]
    solution = [Fraction(0)] * n
    for r, b in enumerate(basis):
        if b < n:
            solution[b] = tableau[r][-1]
    if not maximize:
        value = -value
    return LpResult("optimal", value, solution)
