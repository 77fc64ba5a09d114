"""Bayes risks, optimal-set correspondences, and the finite level-set atlas
of a polyhedral surrogate.

The atlas is the computational backbone: a polyhedral surrogate's Bayes risk
is a concave piecewise-linear function of the conditional distribution, so
finitely many representative surrogate points u suffice, each optimal on a
polytope of distributions.  Candidate representatives are the vertices of the
per-label piece-tie arrangement; the construction then certifies, by exact
vertex checks, that those candidates realize the Bayes risk everywhere.  The
certified identity  risk(p) = min over representatives of <p, L(u)>  is what
lets every downstream verifier evaluate exact regrets without re-solving LPs.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass

from ._linalg import rank, solve_unique
from .exact_lp import LinearProgram, LpStatus, solve_lp
from .loss_model import DiscreteLoss, Distribution, PolyhedralLink, PolyhedralLoss, link_eval
from .polyhedra import (
    EmptyPolyhedronError,
    Polyhedron,
    UnsupportedScaleError,
    contains,
    vertices,
)
from .rational import ONE, ZERO, Rational, dot


class AtlasConstructionError(ValueError):
    """The surrogate admits no vertex-representable minimizer for some
    distribution; the witness distribution is attached."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class CellConstancyError(AssertionError):
    """Optimal sets failed the constancy spot-check on a cell interior."""


# ---------------------------------------------------------------------------
# Conditional risks and regrets

def expected_loss(L: PolyhedralLoss, p: Distribution, u):
    """<p, L(u)>, exactly."""
    return dot(p.probs, L.value_vector(u))


def surrogate_risk_value(L: PolyhedralLoss, p: Distribution):
    """Bayes risk of the surrogate at p via the epigraph LP, with an optimal
    point as witness.  Independent of the atlas shortcut."""
    support = p.support()
    d = L.dim
    nv = d + len(support)
    lhs, rhs = [], []
    for k, y in enumerate(support):
        for a, c in L.pieces_per_label[y]:
            row = [ZERO] * nv
            for j, v in enumerate(a):
                row[j] = v
            row[d + k] = -ONE
            lhs.append(tuple(row))
            rhs.append(-c)
    objective = [ZERO] * nv
    for k, y in enumerate(support):
        objective[d + k] = p[y]
    out = solve_lp(LinearProgram(tuple(objective), tuple(lhs), tuple(rhs)))
    if out.status is not LpStatus.OPTIMAL:
        raise AssertionError(
            "epigraph LP unbounded for a nonnegativity-certified loss"
        )
    return out.optimal_value, out.witness_point[:d]


def _flattened_rows(L: PolyhedralLoss, p: Distribution):
    """<p, L(u)> as a single max-affine: one row per choice of an active
    piece for every supported label (distributing the sum over the maxima)."""
    support = p.support()
    rows = set()
    for combo in itertools.product(*(L.pieces_per_label[y] for y in support)):
        coeff = [ZERO] * L.dim
        const = ZERO
        for y, (a, c) in zip(support, combo):
            w = p[y]
            for j, v in enumerate(a):
                coeff[j] += w * v
            const += w * c
        rows.add((tuple(coeff), const))
    return sorted(rows)


def bayes_risk_surrogate(L: PolyhedralLoss, p: Distribution):
    """Bayes risk value and the full optimal set as an H-polyhedron.

    The optimal set {u : <p, L(u)> <= risk} is expressed exactly by bounding
    every flattened affine piece by the risk value; the representation may be
    redundant.
    """
    value, _ = surrogate_risk_value(L, p)
    ineqs = tuple((coeff, value - const) for coeff, const in _flattened_rows(L, p))
    return value, Polyhedron(dim=L.dim, inequalities=ineqs)


def bayes_risk_target(ell: DiscreteLoss, p: Distribution):
    """Bayes risk of the discrete target and the full argmin report set."""
    best = None
    for row in ell.matrix:
        v = dot(p.probs, row)
        if best is None or v < best:
            best = v
    opt = tuple(
        r for r, row in zip(ell.reports, ell.matrix) if dot(p.probs, row) == best
    )
    return best, opt


def regret_surrogate(L: PolyhedralLoss, u, p: Distribution):
    value, _ = surrogate_risk_value(L, p)
    return expected_loss(L, p, u) - value


def regret_target(ell: DiscreteLoss, r, p: Distribution):
    value, _ = bayes_risk_target(ell, p)
    return dot(p.probs, ell.row(r)) - value


# ---------------------------------------------------------------------------
# Level sets in distribution space

def simplex_polyhedron(num_labels: int) -> Polyhedron:
    nonneg = []
    for y in range(num_labels):
        row = [ZERO] * num_labels
        row[y] = -ONE
        nonneg.append((tuple(row), ZERO))
    return Polyhedron(
        dim=num_labels,
        inequalities=tuple(nonneg),
        equalities=(((ONE,) * num_labels, ONE),),
    )


def target_level_set(ell: DiscreteLoss, report) -> Polyhedron:
    """{p in simplex : report minimizes expected target loss}."""
    base = simplex_polyhedron(ell.num_labels)
    row_r = ell.row(report)
    extra = []
    for r, row in zip(ell.reports, ell.matrix):
        if r == report:
            continue
        extra.append((tuple(a - b for a, b in zip(row_r, row)), ZERO))
    return Polyhedron(
        dim=base.dim,
        inequalities=base.inequalities + tuple(extra),
        equalities=base.equalities,
    )


@dataclass(frozen=True)
class LevelSet:
    representative: tuple  # u
    polytope: Polyhedron  # in distribution coordinates
    vertex_points: tuple  # of Distribution
    full_dimensional: bool


@dataclass(frozen=True)
class LevelSetAtlas:
    """Finite representatives U, their level-set polytopes, and the vertex
    pool Q of all full-dimensional level sets."""

    loss: PolyhedralLoss
    level_sets: tuple  # of LevelSet
    vertex_pool: tuple  # of Distribution
    loss_at_representatives: tuple  # cached L(u) vectors, aligned with level_sets

    @property
    def representatives(self) -> tuple:
        return tuple(ls.representative for ls in self.level_sets)

    def risk(self, p: Distribution):
        """Certified Bayes risk: min over representatives of <p, L(u)>."""
        return min(dot(p.probs, lv) for lv in self.loss_at_representatives)

    def optimal_representatives(self, p: Distribution) -> tuple:
        value = self.risk(p)
        return tuple(
            ls.representative
            for ls, lv in zip(self.level_sets, self.loss_at_representatives)
            if dot(p.probs, lv) == value
        )

    def covering_level_sets(self, p: Distribution) -> tuple:
        return tuple(ls for ls in self.level_sets if ls.polytope.contains_point(p.probs))


def _tie_hyperplanes(L: PolyhedralLoss):
    """Per-label pairwise piece-tie hyperplanes (a, b) meaning a.u = b."""
    from ._linalg import primitive

    planes = set()
    for pieces in L.pieces_per_label:
        for (a1, c1), (a2, c2) in itertools.combinations(pieces, 2):
            a = tuple(x - y for x, y in zip(a1, a2))
            if all(v == 0 for v in a):
                continue
            planes.add(tuple(primitive(a + (c2 - c1,))))
    return sorted(planes)


def _candidate_representatives(L: PolyhedralLoss):
    """Vertices of the arrangement of all per-label tie hyperplanes."""
    d = L.dim
    planes = _tie_hyperplanes(L)
    candidates = set()
    for combo in itertools.combinations(planes, d):
        rows = [list(pl[:-1]) for pl in combo]
        rhs = [pl[-1] for pl in combo]
        x = solve_unique(rows, rhs)
        if x is not None:
            candidates.add(x)
    return sorted(candidates)


def _polytope_dim(points) -> int:
    if not points:
        return -1
    base = points[0]
    return rank([[v - w for v, w in zip(pt, base)] for pt in points[1:]])


def level_set_atlas(L: PolyhedralLoss, max_candidates: int = 5000) -> LevelSetAtlas:
    """Build and certify the finite level-set atlas of a polyhedral loss.

    Candidates are arrangement vertices of the per-label piece ties; the
    level set of candidate u is the polytope of distributions where u is
    weakly best among all candidates.  Certification checks, at every vertex
    q of every kept level set, that <q, L(u)> equals the Bayes risk at q
    (exact epigraph LP).  Because a linear function dominated by a concave
    one and equal to it at all vertices of a polytope is equal on the whole
    polytope, passing the checks proves the candidate minimum realizes the
    Bayes risk on all of the simplex.

    Losses with a flat unkinked direction have no arrangement vertex to
    represent some distributions; they are rejected with a witness.
    """
    if L.dim > 3:
        raise UnsupportedScaleError("level-set atlas limited to surrogate dimension <= 3")
    n = L.num_labels
    candidates = _candidate_representatives(L)
    if not candidates:
        raise AtlasConstructionError(
            "no vertex-representable minimizer: the piece-tie arrangement has no "
            "vertex (loss is flat in some direction)",
            witness=Distribution(tuple(Rational(1, n) for _ in range(n))),
        )
    if len(candidates) > max_candidates:
        raise UnsupportedScaleError(
            f"{len(candidates)} candidate representatives exceed the desk-scale cap"
        )

    loss_at = {u: L.value_vector(u) for u in candidates}
    simplex = simplex_polyhedron(n)

    kept = []
    for u in candidates:
        extra = []
        lu = loss_at[u]
        for v in candidates:
            if v == u:
                continue
            extra.append((tuple(a - b for a, b in zip(lu, loss_at[v])), ZERO))
        cell = Polyhedron(
            dim=n,
            inequalities=simplex.inequalities + tuple(extra),
            equalities=simplex.equalities,
        )
        try:
            desc = vertices(cell)
        except EmptyPolyhedronError:
            continue
        assert desc.is_bounded, "level sets inside the simplex must be polytopes"
        full = _polytope_dim(desc.vertices) == n - 1
        if not full:
            continue
        kept.append(LevelSet(u, cell, tuple(Distribution(v) for v in desc.vertices), True))

    # Exact certification at every level-set vertex.
    for ls in kept:
        lu = loss_at[ls.representative]
        for q in ls.vertex_points:
            risk, _ = surrogate_risk_value(L, q)
            if dot(q.probs, lu) != risk:
                raise AtlasConstructionError(
                    "no vertex-representable minimizer at a level-set vertex",
                    witness=q,
                )

    pool = sorted({q.probs for ls in kept for q in ls.vertex_points})
    return LevelSetAtlas(
        loss=L,
        level_sets=tuple(kept),
        vertex_pool=tuple(Distribution(v) for v in pool),
        loss_at_representatives=tuple(loss_at[ls.representative] for ls in kept),
    )


# ---------------------------------------------------------------------------
# Structural checks

def check_nonredundant(ell: DiscreteLoss) -> dict:
    """For each report r, decide whether some distribution makes r uniquely
    optimal, by maximizing the worst gap to the other reports (an LP)."""
    n = ell.num_labels
    verdicts = {}
    for r in ell.reports:
        row_r = ell.row(r)
        lhs, rhs = [], []
        # variables (p, s): maximize s with s <= <p, row(r') - row(r)>.
        for r2 in ell.reports:
            if r2 == r:
                continue
            diff = tuple(b - a for a, b in zip(row_r, ell.row(r2)))
            lhs.append(tuple(-v for v in diff) + (ONE,))
            rhs.append(ZERO)
        for y in range(n):
            e = [ZERO] * (n + 1)
            e[y] = -ONE
            lhs.append(tuple(e))
            rhs.append(ZERO)
        lhs.append((ONE,) * n + (ZERO,))
        rhs.append(ONE)
        lhs.append((-ONE,) * n + (ZERO,))
        rhs.append(-ONE)
        objective = (ZERO,) * n + (-ONE,)
        out = solve_lp(LinearProgram(objective, tuple(lhs), tuple(rhs)))
        if out.status is LpStatus.UNBOUNDED:
            verdicts[r] = True  # single-report target: vacuously unique
        else:
            verdicts[r] = -out.optimal_value > 0
    return verdicts


@dataclass(frozen=True)
class RefinementResult:
    ok: bool
    witness_representative: tuple = None
    witness_distribution: Distribution = None


def check_refinement(atlas: LevelSetAtlas, ell: DiscreteLoss, link: PolyhedralLink):
    """Verify each surrogate level set lands inside the target level set of
    its linked report; on failure return the separating distribution."""
    for ls in atlas.level_sets:
        r = link_eval(link, ls.representative)
        gamma_r = target_level_set(ell, r)
        ok, witness = contains(gamma_r, ls.polytope)
        if not ok:
            return RefinementResult(
                ok=False,
                witness_representative=ls.representative,
                witness_distribution=Distribution(witness),
            )
    return RefinementResult(ok=True)


@dataclass(frozen=True)
class SimplexCell:
    """Full-dimensional piece of the simplex on which both optimal-set
    correspondences are constant."""

    region: Polyhedron
    region_vertices: tuple  # of Distribution
    interior: Distribution
    surrogate_optimal_face: Polyhedron  # in surrogate coordinates
    surrogate_risk: object
    target_optimal_set: tuple  # of reports
    representative: tuple  # atlas u owning the level set


def _face_contains_face(L, p_outer: Distribution, outer_value, p_inner: Distribution, inner_value):
    """Is the optimal set at p_inner contained in the optimal set at p_outer?

    The inner face is encoded implicitly (epigraph variables bounded by the
    inner risk); each flattened affine piece of the outer expected loss is
    maximized over it and compared against the outer risk.
    """
    support = p_inner.support()
    d = L.dim
    nv = d + len(support)
    lhs, rhs = [], []
    for k, y in enumerate(support):
        for a, c in L.pieces_per_label[y]:
            row = [ZERO] * nv
            for j, v in enumerate(a):
                row[j] = v
            row[d + k] = -ONE
            lhs.append(tuple(row))
            rhs.append(-c)
    weights = [ZERO] * nv
    for k, y in enumerate(support):
        weights[d + k] = p_inner[y]
    lhs.append(tuple(weights))
    rhs.append(inner_value)
    base_lhs, base_rhs = tuple(lhs), tuple(rhs)

    for coeff, const in _flattened_rows(L, p_outer):
        objective = tuple(-v for v in coeff) + (ZERO,) * len(support)
        out = solve_lp(LinearProgram(objective, base_lhs, base_rhs))
        if out.status is LpStatus.UNBOUNDED:
            return False
        if -out.optimal_value + const > outer_value:
            return False
    return True


def _interior_probes(rng, cell_vertices, count):
    """Random relative-interior points: strictly positive rational convex
    combinations of the cell's vertices."""
    probes = []
    k = len(cell_vertices)
    for _ in range(count):
        weights = [Rational(rng.randint(1, 50)) for _ in range(k)]
        total = sum(weights, ZERO)
        point = tuple(
            sum((w * v[j] for w, v in zip(weights, cell_vertices)), ZERO) / total
            for j in range(len(cell_vertices[0]))
        )
        probes.append(Distribution(point))
    return probes


def cell_decomposition(
    L: PolyhedralLoss,
    ell: DiscreteLoss,
    atlas: LevelSetAtlas,
    spot_checks: int = 3,
    seed: int = 20240,
):
    """Common refinement of surrogate and target level sets.

    Emits the full-dimensional intersections, each annotated with the
    surrogate optimal face and target optimal set at its interior point.
    Constancy of both correspondences on the cell interior is spot-checked
    at `spot_checks` random interior distributions; violations abort.
    """
    n = L.num_labels
    if n > 5:
        raise UnsupportedScaleError("cell decomposition limited to at most 5 labels")
    rng = random.Random(seed)
    cells = []
    for ls in atlas.level_sets:
        for r in ell.reports:
            gamma_r = target_level_set(ell, r)
            region = ls.polytope.intersect(gamma_r)
            try:
                desc = vertices(region)
            except EmptyPolyhedronError:
                continue
            if _polytope_dim(desc.vertices) != n - 1:
                continue
            k = Rational(len(desc.vertices))
            p_hat = Distribution(
                tuple(sum(col, ZERO) / k for col in zip(*desc.vertices))
            )
            risk_hat, face = bayes_risk_surrogate(L, p_hat)
            _, gamma_hat = bayes_risk_target(ell, p_hat)
            cell = SimplexCell(
                region=region,
                region_vertices=tuple(Distribution(v) for v in desc.vertices),
                interior=p_hat,
                surrogate_optimal_face=face,
                surrogate_risk=risk_hat,
                target_optimal_set=gamma_hat,
                representative=ls.representative,
            )
            _spot_check_cell(L, ell, cell, rng, spot_checks)
            cells.append(cell)
    # Deduplicate regions arising from distinct (u, r) pairs with equal cells.
    unique = {}
    for cell in cells:
        key = tuple(sorted(tuple(q.probs) for q in cell.region_vertices))
        unique.setdefault(key, cell)
    return sorted(unique.values(), key=lambda c: tuple(c.interior.probs))


def _spot_check_cell(L, ell, cell: SimplexCell, rng, count):
    if count <= 0:
        return
    for p in _interior_probes(rng, [q.probs for q in cell.region_vertices], count):
        _, gamma_p = bayes_risk_target(ell, p)
        if tuple(gamma_p) != tuple(cell.target_optimal_set):
            raise CellConstancyError(
                f"target optimal set changed on a cell interior: {gamma_p} vs "
                f"{cell.target_optimal_set} at {p.probs}"
            )
        value_p, _ = surrogate_risk_value(L, p)
        same = _face_contains_face(L, cell.interior, cell.surrogate_risk, p, value_p) and \
            _face_contains_face(L, p, value_p, cell.interior, cell.surrogate_risk)
        if not same:
            raise CellConstancyError(
                f"surrogate optimal set changed on a cell interior at {p.probs}"
            )
