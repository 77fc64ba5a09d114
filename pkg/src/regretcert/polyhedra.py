"""Exact polyhedral geometry: vertex enumeration, containment, distances,
interior points, and hyperplane-arrangement cell enumeration.

Everything is H-representation first: a polyhedron is a list of inequalities
a.x <= b plus equalities a.x = b over exact rationals.  Enumeration routines
are exhaustive (choose-a-basis) and intended for desk-scale dimensions; they
trade asymptotics for exactness and zero dependencies.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from ._linalg import null_space_direction, primitive, primitive_directed, rank, solve_unique
from .rational import ONE, ZERO, Rational, dot, rat
from .exact_lp import LinearProgram, LpStatus, solve_lp


class EmptyPolyhedronError(ValueError):
    """Operation requires a nonempty polyhedron."""


class NoVertexError(ValueError):
    """Polyhedron has a nontrivial lineality space, hence no vertex."""


class UnsupportedScaleError(ValueError):
    """Enumeration requested beyond the supported desk-scale dimension."""


@dataclass(frozen=True)
class Polyhedron:
    """{x : a.x <= b for inequalities, a.x = b for equalities}.

    The representation may be redundant; removing redundancy is an explicit
    operation, never an invariant.
    """

    dim: int
    inequalities: tuple = ()
    equalities: tuple = ()

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dimension must be >= 1")
        for a, _ in tuple(self.inequalities) + tuple(self.equalities):
            if len(a) != self.dim:
                raise ValueError("constraint normal has wrong dimension")

    def lp_rows(self):
        """All constraints as inequality rows (equalities become pairs)."""
        lhs, rhs = [], []
        for a, b in self.inequalities:
            lhs.append(tuple(a))
            rhs.append(b)
        for a, b in self.equalities:
            lhs.append(tuple(a))
            rhs.append(b)
            lhs.append(tuple(-v for v in a))
            rhs.append(-b)
        return lhs, rhs

    def minimize(self, objective):
        lhs, rhs = self.lp_rows()
        return solve_lp(LinearProgram(tuple(objective), tuple(lhs), tuple(rhs)))

    def feasible_point(self):
        out = self.minimize((ZERO,) * self.dim)
        if out.status is LpStatus.INFEASIBLE:
            raise EmptyPolyhedronError("polyhedron is empty")
        return out.witness_point

    def is_empty(self) -> bool:
        return self.minimize((ZERO,) * self.dim).status is LpStatus.INFEASIBLE

    def contains_point(self, x) -> bool:
        return all(dot(a, x) <= b for a, b in self.inequalities) and all(
            dot(a, x) == b for a, b in self.equalities
        )

    def intersect(self, other: "Polyhedron") -> "Polyhedron":
        if other.dim != self.dim:
            raise ValueError("dimension mismatch in intersection")
        return Polyhedron(
            dim=self.dim,
            inequalities=self.inequalities + other.inequalities,
            equalities=self.equalities + other.equalities,
        )


def make_polyhedron(dim, inequalities=(), equalities=()) -> Polyhedron:
    """Constructor converting all entries to exact rationals."""
    return Polyhedron(
        dim=dim,
        inequalities=tuple((tuple(rat(v) for v in a), rat(b)) for a, b in inequalities),
        equalities=tuple((tuple(rat(v) for v in a), rat(b)) for a, b in equalities),
    )


def box(lo, hi) -> Polyhedron:
    """Axis-aligned box, handy in tests and sweeps."""
    lo, hi = [rat(v) for v in lo], [rat(v) for v in hi]
    dim = len(lo)
    ineqs = []
    for i in range(dim):
        e = tuple(ONE if j == i else ZERO for j in range(dim))
        ineqs.append((e, hi[i]))
        ineqs.append((tuple(-v for v in e), -lo[i]))
    return Polyhedron(dim=dim, inequalities=tuple(ineqs))


@dataclass(frozen=True)
class VertexDescription:
    vertices: tuple
    rays: tuple
    is_bounded: bool


@dataclass(frozen=True)
class MaxAffine:
    """u -> max_k (w_k.u + z_k); convex and polyhedral by construction."""

    pieces: tuple  # of (w: tuple, z)

    def __post_init__(self):
        if not self.pieces:
            raise ValueError("a max-affine function needs at least one piece")

    @property
    def dim(self) -> int:
        return len(self.pieces[0][0])

    def value(self, u):
        return max(dot(w, u) + z for w, z in self.pieces)

    def active_piece(self, u) -> int:
        """Lowest-index maximizing piece (deterministic tie-break)."""
        best, best_k = None, None
        for k, (w, z) in enumerate(self.pieces):
            v = dot(w, u) + z
            if best is None or v > best:
                best, best_k = v, k
        return best_k


def make_max_affine(pieces) -> MaxAffine:
    return MaxAffine(tuple((tuple(rat(v) for v in w), rat(z)) for w, z in pieces))


def _all_normals(P: Polyhedron):
    return [a for a, _ in P.inequalities] + [a for a, _ in P.equalities]


def vertices(P: Polyhedron) -> VertexDescription:
    """Exact vertex/ray description by exhaustive active-set enumeration.

    Raises EmptyPolyhedronError on empty input and NoVertexError when the
    polyhedron has a line (nontrivial lineality space): such sets have no
    vertex and no silent answer is given.
    """
    P.feasible_point()  # raises when empty
    n = P.dim
    if rank(_all_normals(P)) < n:
        raise NoVertexError("polyhedron contains a line; no vertex exists")

    eq_rows = [list(a) for a, _ in P.equalities]
    eq_rhs = [b for _, b in P.equalities]
    r_eq = rank(eq_rows) if eq_rows else 0
    k = n - r_eq

    ineqs = list(P.inequalities)
    verts = set()
    for combo in itertools.combinations(range(len(ineqs)), k):
        rows = eq_rows + [list(ineqs[i][0]) for i in combo]
        rhs = eq_rhs + [ineqs[i][1] for i in combo]
        x = solve_unique(rows, rhs)
        if x is None:
            continue
        if all(dot(a, x) <= b for a, b in ineqs):
            verts.add(x)

    rays = set()
    if k >= 1:
        hom_eq = eq_rows
        for combo in itertools.combinations(range(len(ineqs)), k - 1):
            rows = hom_eq + [list(ineqs[i][0]) for i in combo]
            w = null_space_direction(rows, n)
            if w is None:
                continue
            for cand in (w, tuple(-v for v in w)):
                if all(dot(a, cand) <= 0 for a, _ in ineqs) and all(
                    dot(a, cand) == 0 for a, _ in P.equalities
                ):
                    rays.add(primitive_directed(cand))

    return VertexDescription(
        vertices=tuple(sorted(verts)),
        rays=tuple(sorted(rays)),
        is_bounded=not rays,
    )


def linf_distance(P: Polyhedron, Q: Polyhedron):
    """inf over u in P, v in Q of the sup-norm of u - v, as one exact LP."""
    if P.dim != Q.dim:
        raise ValueError("distance requires equal dimensions")
    n = P.dim
    # Variables (u, v, t); minimize t.
    lhs, rhs = [], []

    def shift(rows, offset):
        out = []
        for a in rows:
            row = [ZERO] * (2 * n + 1)
            for j, val in enumerate(a):
                row[offset + j] = val
            out.append(tuple(row))
        return out

    p_lhs, p_rhs = P.lp_rows()
    q_lhs, q_rhs = Q.lp_rows()
    lhs += shift(p_lhs, 0)
    rhs += p_rhs
    lhs += shift(q_lhs, n)
    rhs += q_rhs
    for j in range(n):
        row = [ZERO] * (2 * n + 1)
        row[j], row[n + j], row[2 * n] = ONE, -ONE, -ONE
        lhs.append(tuple(row))
        rhs.append(ZERO)
        row = [ZERO] * (2 * n + 1)
        row[j], row[n + j], row[2 * n] = -ONE, ONE, -ONE
        lhs.append(tuple(row))
        rhs.append(ZERO)
    objective = tuple([ZERO] * 2 * n + [ONE])
    out = solve_lp(LinearProgram(objective, tuple(lhs), tuple(rhs)))
    if out.status is LpStatus.INFEASIBLE:
        raise EmptyPolyhedronError("distance between polyhedra requires both nonempty")
    assert out.status is LpStatus.OPTIMAL  # bounded below by 0
    return out.optimal_value


def contains(P: Polyhedron, Q: Polyhedron):
    """Decide Q subset-of P; on failure return a witness point in Q \\ P.

    The witness is found by maximizing each constraint of P over Q.  An empty
    Q is contained in everything.
    """
    if P.dim != Q.dim:
        raise ValueError("containment requires equal dimensions")
    try:
        Q.feasible_point()
    except EmptyPolyhedronError:
        return True, None

    def violation(a, b, flip=False):
        # maximize a.x over Q, i.e. minimize -a.x
        out = Q.minimize(tuple(-v for v in a))
        if out.status is LpStatus.UNBOUNDED:
            x, w = out.witness_point, out.improving_ray
            gain = dot(a, w)
            assert gain > 0
            steps = (b - dot(a, x)) / gain
            t = steps + 1 if steps > 0 else ONE
            return tuple(p + t * q for p, q in zip(x, w))
        if -out.optimal_value > b:
            return out.witness_point
        return None

    for a, b in P.inequalities:
        w = violation(a, b)
        if w is not None:
            return False, w
    for a, b in P.equalities:
        w = violation(a, b)
        if w is not None:
            return False, w
        w = violation(tuple(-v for v in a), -b)
        if w is not None:
            return False, w
    return True, None


def interior_point(P: Polyhedron):
    """A point in the relative interior of P.

    Pointed polyhedra use the centroid of the vertex description plus a unit
    step along each extreme ray.  Polyhedra with lines fall back to a
    maximum-slack LP, promoting implicit equalities until a relative-interior
    point appears.
    """
    try:
        desc = vertices(P)
    except NoVertexError:
        return _relative_interior_by_slack(P)
    pts = desc.vertices
    k = Rational(len(pts))
    centroid = tuple(sum(col, ZERO) / k for col in zip(*pts))
    for r in desc.rays:
        centroid = tuple(c + v for c, v in zip(centroid, r))
    return centroid


def _relative_interior_by_slack(P: Polyhedron):
    ineqs = list(P.inequalities)
    eqs = list(P.equalities)
    n = P.dim
    while True:
        lhs, rhs = [], []
        for a, b in ineqs:
            lhs.append(tuple(a) + (ONE,))
            rhs.append(b)
        for a, b in eqs:
            lhs.append(tuple(a) + (ZERO,))
            rhs.append(b)
            lhs.append(tuple(-v for v in a) + (ZERO,))
            rhs.append(-b)
        lhs.append((ZERO,) * n + (ONE,))
        rhs.append(ONE)
        objective = (ZERO,) * n + (-ONE,)
        out = solve_lp(LinearProgram(objective, tuple(lhs), tuple(rhs)))
        if out.status is LpStatus.INFEASIBLE:
            raise EmptyPolyhedronError("polyhedron is empty")
        assert out.status is LpStatus.OPTIMAL
        slack = -out.optimal_value
        x = out.witness_point[:n]
        if slack > 0:
            return x
        # Lower-dimensional: inequalities tight on all of P become equalities.
        current = Polyhedron(n, tuple(ineqs), tuple(eqs))
        promoted = False
        still = []
        for a, b in ineqs:
            low = current.minimize(tuple(a))
            if low.status is LpStatus.OPTIMAL and low.optimal_value == b:
                eqs.append((a, b))
                promoted = True
            else:
                still.append((a, b))
        ineqs = still
        if not promoted:
            raise AssertionError("no relative-interior progress; inconsistent state")


def remove_redundancy(P: Polyhedron) -> Polyhedron:
    """Drop inequality rows implied by the rest (equalities untouched)."""
    if P.is_empty():
        raise EmptyPolyhedronError("redundancy removal expects a nonempty polyhedron")
    # Cheap pre-pass: drop trivial rows, keep tightest among parallel rows.
    # Scaling must preserve direction, so the positive primitive form is used.
    seen = {}
    order = []
    for a, b in P.inequalities:
        if all(v == 0 for v in a):
            continue  # 0.x <= b with b >= 0 (nonempty), trivially true
        key_vec = primitive_directed(a)
        scale = next(v / w for v, w in zip(key_vec, a) if w != 0)
        b_norm = b * scale
        if key_vec not in seen or b_norm < seen[key_vec]:
            if key_vec not in seen:
                order.append(key_vec)
            seen[key_vec] = b_norm
    ineqs = [(k, seen[k]) for k in order]

    kept = list(ineqs)
    i = 0
    while i < len(kept):
        a, b = kept[i]
        others = kept[:i] + kept[i + 1 :]
        probe = Polyhedron(P.dim, tuple(others), P.equalities)
        out = probe.minimize(tuple(-v for v in a))
        redundant = out.status is LpStatus.OPTIMAL and -out.optimal_value <= b
        if redundant:
            kept.pop(i)
        else:
            i += 1
    return Polyhedron(P.dim, tuple(kept), P.equalities)


def distance_as_max_affine(S: Polyhedron) -> MaxAffine:
    """Explicit piecewise-linear form of u -> d_inf(u, S).

    Every basic dual solution of the parametric distance LP contributes one
    affine piece; their pointwise maximum equals the distance everywhere.
    Requires S nonempty with at least one vertex.
    """
    vertices(S)  # raises on empty or line-containing input
    n = S.dim
    c_lhs, c_rhs = S.lp_rows()
    m = len(c_lhs)

    # Dual variables y = (lam_1..lam_m, mu_1..mu_n, nu_1..nu_n) >= 0 with
    # C^T lam + mu - nu = 0 and sum(mu) + sum(nu) = 1.  The dual objective
    # for parameter u is (nu - mu).u - e.lam, affine in u.
    dim_y = m + 2 * n
    eqs = []
    for j in range(n):
        row = [ZERO] * dim_y
        for i in range(m):
            row[i] = c_lhs[i][j]
        row[m + j] = ONE
        row[m + n + j] = -ONE
        eqs.append((tuple(row), ZERO))
    row = [ZERO] * dim_y
    for j in range(2 * n):
        row[m + j] = ONE
    eqs.append((tuple(row), ONE))
    nonneg = []
    for i in range(dim_y):
        row = [ZERO] * dim_y
        row[i] = -ONE
        nonneg.append((tuple(row), ZERO))
    dual = Polyhedron(dim=dim_y, inequalities=tuple(nonneg), equalities=tuple(eqs))

    pieces = set()
    for y in vertices(dual).vertices:
        lam = y[:m]
        mu = y[m : m + n]
        nu = y[m + n :]
        w = tuple(a - b for a, b in zip(nu, mu))
        z = -dot(tuple(c_rhs), lam)
        pieces.add((w, z))

    kept = sorted(pieces)
    # Prune pieces dominated by the max of the others.
    i = 0
    while i < len(kept) and len(kept) > 1:
        w_i, z_i = kept[i]
        others = kept[:i] + kept[i + 1 :]
        # min over u of max_j (piece_j - piece_i): epigraph LP in (u, s).
        lhs, rhs = [], []
        for w_j, z_j in others:
            lhs.append(tuple(a - b for a, b in zip(w_j, w_i)) + (-ONE,))
            rhs.append(z_i - z_j)
        objective = (ZERO,) * n + (ONE,)
        out = solve_lp(LinearProgram(objective, tuple(lhs), tuple(rhs)))
        if out.status is LpStatus.OPTIMAL and out.optimal_value >= 0:
            kept.pop(i)
        else:
            i += 1
    return MaxAffine(pieces=tuple(kept))


def _canonical_hyperplane(a, b):
    vec = primitive(tuple(a) + (b,))
    return vec[:-1], vec[-1]


def _fulldim_witness(ineqs, dim):
    """Interior witness of {x : a.x <= b strictly} or None: max slack LP."""
    lhs, rhs = [], []
    for a, b in ineqs:
        lhs.append(tuple(a) + (ONE,))
        rhs.append(b)
    lhs.append((ZERO,) * dim + (ONE,))
    rhs.append(ONE)
    objective = (ZERO,) * dim + (-ONE,)
    out = solve_lp(LinearProgram(objective, tuple(lhs), tuple(rhs)))
    if out.status is not LpStatus.OPTIMAL or -out.optimal_value <= 0:
        return None
    return out.witness_point[:dim]


def arrangement_cells(functions, region: Polyhedron):
    """Full-dimensional closed cells of `region` on which every max-affine
    input is affine, with the active piece index recorded per function.

    Cells cover the region with pairwise disjoint interiors; boundary values
    agree by continuity.  Lower-dimensional cells are not emitted.  Supports
    dimension <= 3 (desk-scale enumeration limit).
    """
    dim = region.dim
    if dim > 3:
        raise UnsupportedScaleError(f"arrangement enumeration limited to dim <= 3, got {dim}")
    if region.equalities:
        raise ValueError("arrangement region must be full-dimensional (no equalities)")
    for f in functions:
        if f.dim != dim:
            raise ValueError("function dimension does not match region")
    witness = _fulldim_witness(list(region.inequalities), dim)
    if witness is None:
        if region.is_empty():
            raise EmptyPolyhedronError("arrangement region is empty")
        raise ValueError("arrangement region must be full-dimensional")

    hyperplanes = set()
    for f in functions:
        for (w1, z1), (w2, z2) in itertools.combinations(f.pieces, 2):
            a = tuple(p - q for p, q in zip(w1, w2))
            if all(v == 0 for v in a):
                continue
            hyperplanes.add(_canonical_hyperplane(a, z2 - z1))
    ordered = sorted(hyperplanes)

    cells = [(list(region.inequalities), witness)]
    for a, b in ordered:
        neg_a = tuple(-v for v in a)
        new_cells = []
        for ineqs, wit in cells:
            low = ineqs + [(a, b)]
            high = ineqs + [(neg_a, -b)]
            w_low = _fulldim_witness(low, dim)
            w_high = _fulldim_witness(high, dim)
            if w_low is not None and w_high is not None:
                new_cells.append((low, w_low))
                new_cells.append((high, w_high))
            else:
                new_cells.append((ineqs, wit))
        cells = new_cells

    out = []
    for ineqs, wit in cells:
        active = tuple(f.active_piece(wit) for f in functions)
        out.append((Polyhedron(dim, tuple(ineqs), ()), active, wit))
    out.sort(key=lambda item: item[2])
    return [(cell, active) for cell, active, _ in out]
