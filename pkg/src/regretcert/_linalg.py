"""Dense exact linear algebra over rationals (desk-scale dimensions only)."""

from __future__ import annotations

from .rational import ZERO, ONE, Rational


def _eliminate(rows, ncols):
    """Row-reduce in place; returns list of pivot column indices."""
    pivots = []
    r = 0
    for c in range(ncols):
        pivot_row = None
        for i in range(r, len(rows)):
            if rows[i][c] != 0:
                pivot_row = i
                break
        if pivot_row is None:
            continue
        rows[r], rows[pivot_row] = rows[pivot_row], rows[r]
        inv = ONE / rows[r][c]
        rows[r] = [v * inv for v in rows[r]]
        for i in range(len(rows)):
            if i != r and rows[i][c] != 0:
                factor = rows[i][c]
                rows[i] = [v - factor * w for v, w in zip(rows[i], rows[r])]
        pivots.append(c)
        r += 1
        if r == len(rows):
            break
    return pivots


def rank(matrix) -> int:
    if not matrix:
        return 0
    rows = [list(row) for row in matrix]
    return len(_eliminate(rows, len(rows[0])))


def solve_unique(matrix, rhs):
    """Solve A x = b; returns the solution tuple or None when A x = b has
    no solution or the solution is not unique."""
    if not matrix:
        return None
    n = len(matrix[0])
    rows = [list(row) + [b] for row, b in zip(matrix, rhs)]
    pivots = _eliminate(rows, n)
    if len(pivots) < n:
        return None
    for i in range(len(pivots), len(rows)):
        if rows[i][n] != 0:
            return None
    x = [ZERO] * n
    for i, c in enumerate(pivots):
        x[c] = rows[i][n]
    return tuple(x)


def null_space_direction(matrix, n: int):
    """A direction spanning ker(A) when it is one-dimensional, else None."""
    rows = [list(row) for row in matrix]
    if not rows:
        return (ONE,) + (ZERO,) * (n - 1) if n == 1 else None
    pivots = _eliminate(rows, n)
    if len(pivots) != n - 1:
        return None
    free = next(c for c in range(n) if c not in pivots)
    x = [ZERO] * n
    x[free] = ONE
    for i, c in enumerate(pivots):
        x[c] = -rows[i][free]
    return tuple(x)


def primitive_directed(vector) -> tuple:
    """Scale a nonzero rational vector to coprime integers, preserving its
    direction."""
    from math import gcd

    lcm = 1
    for v in vector:
        d = int(v.denominator)
        lcm = lcm // gcd(lcm, d) * d
    ints = [int(v.numerator) * (lcm // int(v.denominator)) for v in vector]
    g = 0
    for v in ints:
        g = gcd(g, abs(v))
    if g == 0:
        raise ValueError("zero vector has no primitive form")
    return tuple(Rational(v // g) for v in ints)


def primitive(vector) -> tuple:
    """Canonical form of a nonzero rational vector: coprime integer entries
    with the first nonzero entry positive."""
    ints = primitive_directed(vector)
    lead = next(v for v in ints if v != 0)
    if lead < 0:
        ints = tuple(-v for v in ints)
    return ints
