import random

from regretcert.constants import (
    INF,
    bad_regret_inf,
    bad_cell_infima,
    check_consistency,
    exact_alpha,
    factored_alpha,
    global_hoffman,
    hoffman_constant,
    hoffman_with_witness,
    loss_spread,
    separation_at,
)
from regretcert.cli import _flip_link
from regretcert.elicitation import (
    bayes_risk_surrogate,
    cell_decomposition,
    level_set_atlas,
    regret_surrogate,
    regret_target,
)
from regretcert.loss_model import Distribution, link_eval
from regretcert.polyhedra import linf_distance, make_polyhedron
from regretcert.rational import ZERO, rat


def dist(*vals):
    return Distribution.of(vals)


# ---------------------------------------------------------------------------
# Hoffman constants

def test_hoffman_hinge_tied(hinge_entry):
    # ratio (u-1)/((u-1)/2) = 2 past the optimal set [-1, 1]
    assert hoffman_constant(hinge_entry.problem.surrogate, dist("1/2", "1/2")) == 2


def test_hoffman_hinge_point_mass(hinge_entry):
    # regret equals the distance to [1, inf) exactly
    assert hoffman_constant(hinge_entry.problem.surrogate, dist(0, 1)) == 1
    assert hoffman_constant(hinge_entry.problem.surrogate, dist(1, 0)) == 1


def test_hoffman_bep_point_mass(bep_entry):
    L = bep_entry.problem.surrogate
    for y in range(4):
        assert hoffman_constant(L, Distribution.point_mass(y, 4)) == 1


def test_hoffman_label_independent():
    from regretcert.loss_model import PolyhedralLoss

    absval = (((rat(1),), rat(0)), ((rat(-1),), rat(0)))
    L = PolyhedralLoss(dim=1, pieces_per_label=(absval, absval))
    assert hoffman_constant(L, dist("1/3", "2/3")) == 1


def test_hoffman_inequality_and_tightness(hinge_entry, hinge_atlas):
    """d(u, opt) <= H * regret on 1e4 random points per the closed-form
    distance oracles, with a ratio-attaining witness produced by the cell
    enumeration."""
    L = hinge_entry.problem.surrogate
    # hand-derived sup-norm distances to the three hinge optimal sets
    distance_oracle = {
        (ZERO, rat(1)): lambda u: max(1 - u, ZERO),  # to [1, inf)
        (rat(1), ZERO): lambda u: max(u + 1, ZERO),  # to (-inf, -1]
        (rat(1, 2), rat(1, 2)): lambda u: max(abs(u) - 1, ZERO),  # to [-1, 1]
    }
    rng = random.Random(31)
    for q in hinge_atlas.vertex_pool:
        H, witness = hoffman_with_witness(L, q)
        oracle = distance_oracle[q.probs]
        risk = hinge_atlas.risk(q)
        from regretcert.elicitation import expected_loss

        for _ in range(3400):
            u = rat(rng.randint(-500, 500), 100)
            regret = expected_loss(L, q, (u,)) - risk
            assert oracle(u) <= H * regret
        assert witness is not None
        regret_w = expected_loss(L, q, witness) - risk
        assert oracle(witness[0]) == H * regret_w
        # and the oracle agrees with the distance LP at the witness
        _, face = bayes_risk_surrogate(L, q)
        assert oracle(witness[0]) == linf_distance(
            make_polyhedron(1, equalities=[[[1], witness[0]]]), face
        )


# ---------------------------------------------------------------------------
# separation and bad-regret infima

def test_separation_hinge(hinge_entry):
    assert separation_at(hinge_entry.problem, dist(0, 1)) == 1
    assert separation_at(hinge_entry.problem, dist(1, 0)) == 1
    assert separation_at(hinge_entry.problem, dist("1/2", "1/2")) == INF


def test_separation_bep_point_mass(bep_entry):
    for y in range(4):
        assert separation_at(bep_entry.problem, Distribution.point_mass(y, 4)) == rat(1, 2)


def test_bad_regret_hinge(hinge_entry):
    assert bad_regret_inf(hinge_entry.problem, dist(0, 1)) == 1
    assert bad_regret_inf(hinge_entry.problem, dist("1/2", "1/2")) == INF


def test_bad_regret_bep_abstain_cell(bep_entry):
    # restricted to the abstain bands the infimum is 1/2; wrong codewords
    # cost at least 3/2
    delta = Distribution.point_mass(2, 4)  # code (+1, +1)
    entries = bad_cell_infima(bep_entry.problem, delta)
    by_report = {}
    for _, report, regret_min, _ in entries:
        by_report.setdefault(report, []).append(regret_min)
    assert min(by_report["abstain"]) == rat(1, 2)
    wrong = [m for r, ms in by_report.items() if r != "abstain" for m in ms]
    assert min(wrong) == rat(3, 2)
    assert bad_regret_inf(bep_entry.problem, delta) == rat(1, 2)


# ---------------------------------------------------------------------------
# scalar constants

def test_loss_spread(hinge_entry, bep_entry):
    assert loss_spread(hinge_entry.problem.target) == 1
    assert loss_spread(bep_entry.problem.target) == 1  # entries {0, 1/2, 1}
    assert loss_spread(hinge_entry.problem.target.scale(3)) == 3


def test_global_hoffman(hinge_entry, hinge_atlas):
    assert global_hoffman(hinge_entry.problem.surrogate, hinge_atlas) == 2


def test_factored_alpha(hinge_entry, hinge_atlas):
    assert factored_alpha(hinge_entry.problem, hinge_atlas) == 2


def test_exact_alpha(hinge_entry, hinge_atlas):
    alpha, breakdown = exact_alpha(hinge_entry.problem, hinge_atlas)
    assert alpha == 1
    assert breakdown[(ZERO, rat(1))] == 1
    assert breakdown[(rat(1, 2), rat(1, 2))] == 0


def test_factored_alpha_single_report(hinge_atlas, hinge_entry):
    from regretcert.loss_model import (
        DiscreteLoss,
        LinkCell,
        PolyhedralLink,
        Problem,
    )

    ell = DiscreteLoss(reports=("only",), matrix=((rat(1), rat(1)),))
    link = PolyhedralLink(
        cells=(LinkCell(make_polyhedron(1, [[[1], 0]]), "only"),),
        fallback_report="only",
    )
    problem = Problem(
        labels=hinge_entry.problem.labels,
        target=ell,
        surrogate=hinge_entry.problem.surrogate,
        link=link,
    )
    assert factored_alpha(problem, hinge_atlas) == 0
    alpha, _ = exact_alpha(problem, hinge_atlas)
    assert alpha == 0


# ---------------------------------------------------------------------------
# the full certificate

def test_hinge_certificate(hinge_certificate):
    cert = hinge_certificate
    assert cert.consistent
    assert cert.loss_spread == 1
    assert cert.hoffman_global == 2
    assert cert.separation_min == 1
    assert cert.factored_alpha == 2
    assert cert.exact_alpha == 1
    by_q = {vc.distribution.probs: vc for vc in cert.per_vertex}
    mid = by_q[(rat(1, 2), rat(1, 2))]
    assert mid.hoffman == 2 and mid.separation == INF and mid.alpha_exact == 0
    for delta in ((ZERO, rat(1)), (rat(1), ZERO)):
        vc = by_q[delta]
        assert vc.hoffman == 1 and vc.separation == 1
        assert vc.bad_regret == 1 and vc.alpha_exact == 1


def test_bep_certificate(bep_certificate):
    cert = bep_certificate
    assert cert.consistent
    assert cert.exact_alpha == 1
    assert cert.separation_min == rat(1, 2)
    for vc in cert.per_vertex:
        if sum(1 for v in vc.distribution.probs if v > 0) == 1:  # point mass
            assert vc.hoffman == 1
            assert vc.separation == rat(1, 2)
            assert vc.alpha_exact == 1
            assert vc.factored == 2  # assembled bound 1 * 1 / (1/2)
        else:
            assert vc.alpha_exact == 1
    assert cert.exact_alpha <= cert.factored_alpha


def test_single_report_target_consistent(hinge_entry, hinge_atlas):
    from regretcert.loss_model import (
        DiscreteLoss,
        LinkCell,
        PolyhedralLink,
        Problem,
    )

    ell = DiscreteLoss(reports=("only",), matrix=((rat(1), rat(1)),))
    link = PolyhedralLink(
        cells=(LinkCell(make_polyhedron(1, [[[1], 0]]), "only"),),
        fallback_report="only",
    )
    problem = Problem(
        labels=hinge_entry.problem.labels,
        target=ell,
        surrogate=hinge_entry.problem.surrogate,
        link=link,
    )
    cells = cell_decomposition(problem.surrogate, problem.target, hinge_atlas)
    cert = check_consistency(problem, hinge_atlas, cells)
    assert cert.consistent
    assert cert.exact_alpha == 0
    assert cert.separation_min == INF
    assert cert.factored_alpha == 0


def test_flipped_link_inconsistent(hinge_entry, hinge_atlas, hinge_cells):
    flipped = _flip_link(hinge_entry.problem)
    atlas = level_set_atlas(flipped.surrogate)
    cells = cell_decomposition(flipped.surrogate, flipped.target, atlas)
    cert = check_consistency(flipped, atlas, cells)
    assert not cert.consistent
    assert cert.witness is not None


def test_inconsistency_without_refinement_failure(hinge_entry):
    """A link that is correct at the atlas representatives but maps a
    far-out region to the wrong report: only the per-vertex separation
    catches it, and it must."""
    from regretcert.loss_model import LinkCell, PolyhedralLink, Problem

    cells_def = (
        LinkCell(make_polyhedron(1, [[[-1], -5]]), "-1"),  # u >= 5 -> "-1"
        LinkCell(make_polyhedron(1, [[[-1], 0], [[1], 5]]), "+1"),  # 0 <= u <= 5
        LinkCell(make_polyhedron(1, [[[1], 0]]), "-1"),  # u <= 0
    )
    link = PolyhedralLink(cells=cells_def, fallback_report="+1")
    problem = Problem(
        labels=hinge_entry.problem.labels,
        target=hinge_entry.problem.target,
        surrogate=hinge_entry.problem.surrogate,
        link=link,
    )
    atlas = level_set_atlas(problem.surrogate)
    from regretcert.elicitation import check_refinement

    assert check_refinement(atlas, problem.target, problem.link).ok  # blind spot
    cells = cell_decomposition(problem.surrogate, problem.target, atlas)
    cert = check_consistency(problem, atlas, cells)
    assert not cert.consistent
    assert cert.witness.kind == "vertex"


def test_consistency_verdict_agrees_with_refinement(hinge_entry, hinge_atlas, hinge_cells):
    # no case of refinement-fail + consistent-true
    flipped = _flip_link(hinge_entry.problem)
    from regretcert.elicitation import check_refinement

    res = check_refinement(hinge_atlas, flipped.target, flipped.link)
    cert = check_consistency(flipped, hinge_atlas, hinge_cells)
    assert not res.ok and not cert.consistent


def test_per_vertex_transfer_inequality(bep_entry, bep_certificate, bep_atlas):
    """The per-vertex bounds hold on random predictions: target regret of
    the linked report is at most alpha_q times surrogate regret, and the
    factored bound dominates it.  (The per-vertex factored form needs the
    separation and Hoffman constants of the same vertex.)"""
    problem = bep_entry.problem
    rng = random.Random(17)
    for vc in bep_certificate.per_vertex:
        q = vc.distribution
        for _ in range(200):
            u = (rat(rng.randint(-30, 30), 10), rat(rng.randint(-30, 30), 10))
            t = regret_target(problem.target, link_eval(problem.link, u), q)
            s = regret_surrogate(problem.surrogate, u, q)
            assert t <= vc.alpha_exact * s
            if vc.separation != INF:
                assert t <= (
                    bep_certificate.loss_spread * vc.hoffman / vc.separation
                ) * s


def test_ordering_exact_below_factored(hinge_certificate, bep_certificate):
    for cert in (hinge_certificate, bep_certificate):
        assert cert.exact_alpha <= cert.factored_alpha
        assert cert.exact_alpha <= cert.factored_alpha_vertexwise


def test_min_cell_distance_vs_vertex_separation(hinge_certificate, bep_certificate):
    # optimal faces only grow toward cell boundaries, so cell-level
    # distances dominate the vertex-level separation minimum
    for cert in (hinge_certificate, bep_certificate):
        assert cert.min_cell_distance >= cert.separation_min
        assert cert.min_cell_distance > 0 and cert.separation_min > 0


def test_scale_covariance(hinge_entry, hinge_atlas, hinge_cells):
    from regretcert.loss_model import Problem

    k = rat(3)
    scaled = Problem(
        labels=hinge_entry.problem.labels,
        target=hinge_entry.problem.target.scale(k),
        surrogate=hinge_entry.problem.surrogate,
        link=hinge_entry.problem.link,
    )
    cells = cell_decomposition(scaled.surrogate, scaled.target, hinge_atlas)
    cert = check_consistency(scaled, hinge_atlas, cells)
    assert cert.consistent
    assert cert.loss_spread == 3
    assert cert.exact_alpha == 3
    assert cert.factored_alpha == 6
    assert cert.separation_min == 1
    assert cert.hoffman_global == 2


def test_threads_identical_certificate(hinge_entry, hinge_atlas, hinge_cells, hinge_certificate):
    cert4 = check_consistency(hinge_entry.problem, hinge_atlas, hinge_cells, threads=4)
    assert cert4 == hinge_certificate


def test_lemma12_style_bound(hinge_entry, hinge_atlas, hinge_certificate):
    """At each vertex with finite separation: linked target regret is at
    most spread * H_q / sep_q times surrogate regret, on 1e4 random points
    (evaluated through the certified atlas risk, which is exact)."""
    from regretcert.elicitation import expected_loss

    problem = hinge_entry.problem
    rng = random.Random(41)
    for vc in hinge_certificate.per_vertex:
        if vc.separation == INF:
            continue
        bound = hinge_certificate.loss_spread * vc.hoffman / vc.separation
        q = vc.distribution
        risk = hinge_atlas.risk(q)
        for _ in range(5000):
            u = (rat(rng.randint(-400, 400), 100),)
            t = regret_target(problem.target, link_eval(problem.link, u), q)
            s = expected_loss(problem.surrogate, q, u) - risk
            assert t <= bound * s
