"""Exact rational linear programming.

Solves  min c.x  subject to  A x <= b  with x free, by a dense two-phase
simplex over exact rationals.  Bland's anti-cycling rule guarantees
termination on the (highly degenerate) polyhedral loss data this package
feeds it.  Equality constraints are encoded upstream as inequality pairs.

Every outcome is exact: optimal values and witness points are rationals
satisfying the constraints with no rounding, and runs are deterministic for
identical input.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .rational import ONE, ZERO, dot, rat


class LpInputError(ValueError):
    """Malformed linear program (dimension mismatch, empty objective)."""


class LpPreconditionError(ValueError):
    """Operation requires an Optimal program but got Infeasible/Unbounded."""


class LpStatus(Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass(frozen=True)
class LinearProgram:
    """min objective.x  s.t.  lhs x <= rhs, x free."""

    objective: tuple
    lhs: tuple
    rhs: tuple

    def __post_init__(self):
        n = len(self.objective)
        if n < 1:
            raise LpInputError("objective must have dimension >= 1")
        if len(self.lhs) != len(self.rhs):
            raise LpInputError(
                f"{len(self.lhs)} constraint rows but {len(self.rhs)} right-hand sides"
            )
        for i, row in enumerate(self.lhs):
            if len(row) != n:
                raise LpInputError(f"constraint row {i} has length {len(row)}, expected {n}")

    @property
    def num_vars(self) -> int:
        return len(self.objective)


def make_lp(objective, lhs, rhs) -> LinearProgram:
    """Convenience constructor converting entries to exact rationals."""
    return LinearProgram(
        objective=tuple(rat(v) for v in objective),
        lhs=tuple(tuple(rat(v) for v in row) for row in lhs),
        rhs=tuple(rat(v) for v in rhs),
    )


@dataclass(frozen=True)
class LpOutcome:
    status: LpStatus
    optimal_value: object = None
    witness_point: tuple = None
    improving_ray: tuple = None

    def require_optimal(self) -> "LpOutcome":
        if self.status is not LpStatus.OPTIMAL:
            raise LpPreconditionError(f"expected an optimal program, got {self.status.value}")
        return self


def _pivot(tableau, red, basis, row, col):
    piv_row = tableau[row]
    inv = ONE / piv_row[col]
    tableau[row] = piv_row = [v * inv for v in piv_row]
    for i, other in enumerate(tableau):
        if i != row:
            factor = other[col]
            if factor != 0:
                tableau[i] = [v - factor * w for v, w in zip(other, piv_row)]
    factor = red[col]
    if factor != 0:
        red[:] = [v - factor * w for v, w in zip(red, piv_row)]
    basis[row] = col


def _run_simplex(tableau, red, basis, banned):
    """Minimize; returns None at optimality or the entering column index
    witnessing unboundedness.  Bland's rule throughout."""
    ncols = len(red) - 1
    while True:
        entering = None
        for j in range(ncols):
            if not banned[j] and red[j] < 0:
                entering = j
                break
        if entering is None:
            return None
        leaving = None
        best_ratio = None
        for i, row in enumerate(tableau):
            coeff = row[entering]
            if coeff > 0:
                ratio = row[-1] / coeff
                if best_ratio is None or ratio < best_ratio or (
                    ratio == best_ratio and basis[i] < basis[leaving]
                ):
                    best_ratio = ratio
                    leaving = i
        if leaving is None:
            return entering
        _pivot(tableau, red, basis, leaving, entering)


def solve_lp(lp: LinearProgram) -> LpOutcome:
    """Exact status, optimum, and witness for an inequality-form LP."""
    n = lp.num_vars
    m = len(lp.lhs)

    # Standard form z = (x+, x-, slack) >= 0; rows with negative rhs are
    # negated, which flips their slack sign and forces a phase-I artificial.
    rows = []
    rhs = []
    art_rows = []
    for i in range(m):
        row = list(lp.lhs[i])
        b = lp.rhs[i]
        if b < 0:
            row = [-v for v in row]
            b = -b
            slack = -ONE
            art_rows.append(i)
        else:
            slack = ONE
        full = [ZERO] * (2 * n + m)
        for j, v in enumerate(row):
            if v != 0:
                full[j] = v
                full[n + j] = -v
        full[2 * n + i] = slack
        rows.append(full)
        rhs.append(b)

    n_art = len(art_rows)
    ncols = 2 * n + m + n_art
    tableau = []
    basis = [0] * m
    for i in range(m):
        full = rows[i] + [ZERO] * n_art + [rhs[i]]
        tableau.append(full)
    for k, i in enumerate(art_rows):
        tableau[i][2 * n + m + k] = ONE
        basis[i] = 2 * n + m + k
    for i in range(m):
        if i not in art_rows:
            basis[i] = 2 * n + i

    banned = [False] * ncols

    if n_art:
        # Phase I: minimize the artificial sum, expressed over the nonbasics.
        red = [ZERO] * (ncols + 1)
        for k in range(n_art):
            red[2 * n + m + k] = ONE
        for i in art_rows:
            red = [v - w for v, w in zip(red, tableau[i])]
        if _run_simplex(tableau, red, basis, banned) is not None:
            raise AssertionError("phase-I objective is bounded below by zero")
        if -red[-1] > 0:
            return LpOutcome(status=LpStatus.INFEASIBLE)
        # Drive leftover (degenerate) artificials out of the basis.
        for i in range(m):
            if basis[i] >= 2 * n + m:
                col = next(
                    (j for j in range(2 * n + m) if tableau[i][j] != 0),
                    None,
                )
                if col is None:
                    continue  # redundant row; harmless to keep
                _pivot(tableau, red, basis, i, col)
        for k in range(n_art):
            banned[2 * n + m + k] = True

    # Phase II with the true objective.
    cost = [ZERO] * (ncols + 1)
    for j, v in enumerate(lp.objective):
        cost[j] = v
        cost[n + j] = -v
    red = list(cost)
    for i in range(m):
        factor = red[basis[i]]
        if factor != 0:
            red = [v - factor * w for v, w in zip(red, tableau[i])]

    entering = _run_simplex(tableau, red, basis, banned)

    point = [ZERO] * (2 * n + m + n_art)
    for i in range(m):
        point[basis[i]] = tableau[i][-1]
    x = tuple(point[j] - point[n + j] for j in range(n))

    if entering is not None:
        direction = [ZERO] * (2 * n + m + n_art)
        direction[entering] = ONE
        for i in range(m):
            direction[basis[i]] = -tableau[i][entering]
        ray = tuple(direction[j] - direction[n + j] for j in range(n))
        return LpOutcome(status=LpStatus.UNBOUNDED, witness_point=x, improving_ray=ray)

    return LpOutcome(
        status=LpStatus.OPTIMAL,
        optimal_value=dot(lp.objective, x),
        witness_point=x,
    )


def optimal_face(lp: LinearProgram) -> "Polyhedron":
    """H-representation of the full optimizer set of an Optimal program:
    the feasible set intersected with {objective = optimal value}."""
    from .polyhedra import Polyhedron

    outcome = solve_lp(lp).require_optimal()
    return Polyhedron(
        dim=lp.num_vars,
        inequalities=tuple(zip(lp.lhs, lp.rhs)),
        equalities=((lp.objective, outcome.optimal_value),),
    )


def dual_lp(lp: LinearProgram) -> LinearProgram:
    """Lagrangian dual of min c.x s.t. Ax <= b, expressed in the same
    inequality form:  min b.y  s.t.  A^T y = -c, y >= 0  (dual optimum is
    the negated solved value).  Used by the duality cross-checks."""
    n, m = lp.num_vars, len(lp.lhs)
    if m == 0:
        raise LpInputError("dual of an unconstrained program is not representable")
    rows = []
    rhs = []
    for j in range(n):
        col = tuple(lp.lhs[i][j] for i in range(m))
        rows.append(col)
        rhs.append(-lp.objective[j])
        rows.append(tuple(-v for v in col))
        rhs.append(lp.objective[j])
    for i in range(m):
        rows.append(tuple(-ONE if k == i else ZERO for k in range(m)))
        rhs.append(ZERO)
    return LinearProgram(objective=lp.rhs, lhs=tuple(rows), rhs=tuple(rhs))
