import random

import pytest

from regretcert.loss_model import (
    DiscreteLoss,
    Distribution,
    FiniteDataDistribution,
    LinkCell,
    PolyhedralLink,
    Problem,
    TabularHypothesis,
)
from regretcert.polyhedra import make_polyhedron
from regretcert.rational import ZERO, rat
from regretcert.verifier import (
    certificate_witness_pairs,
    random_simplex_point,
    verify_conditional,
    verify_coverage,
    verify_distributional,
    verify_distributional_batches,
    verify_linearity,
)

from oracles import hinge_regret, zero_one_regret


def test_conditional_zero_violations_at_optimum(hinge_entry, hinge_atlas, hinge_certificate):
    wit = certificate_witness_pairs(hinge_certificate)
    rep = verify_conditional(
        hinge_entry.problem, hinge_certificate.exact_alpha, 5000, 7,
        atlas=hinge_atlas, inject=wit,
    )
    assert rep.ok
    assert rep.max_ratio == 1  # the bound is tight and the stream hits it


def test_conditional_tightness_violation(hinge_entry, hinge_atlas, hinge_certificate):
    alpha = rat(9, 10)
    wit = certificate_witness_pairs(hinge_certificate)
    rep = verify_conditional(
        hinge_entry.problem, alpha, 2000, 7, atlas=hinge_atlas, inject=wit
    )
    assert not rep.ok
    v = rep.violations[0]
    # e.g. p a point mass, u just inside the bad cell: lhs 1 vs 0.9 * (1 + eps)
    assert v.lhs > v.rhs
    p_plus = v.where[1]
    assert v.lhs == zero_one_regret(p_plus, "-1" if v.prediction[0] < 0 else "+1")


def test_conditional_shaved_alpha_violation(bep_entry, bep_atlas, bep_certificate):
    alpha = (1 - rat(1, 1000)) * bep_certificate.exact_alpha
    wit = certificate_witness_pairs(bep_certificate)
    rep = verify_conditional(
        bep_entry.problem, alpha, 1000, 7, atlas=bep_atlas, inject=wit
    )
    assert not rep.ok


def test_single_report_target_never_violates(hinge_entry, hinge_atlas):
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
    rep = verify_conditional(problem, ZERO, 2000, 5, atlas=hinge_atlas)
    assert rep.ok


def test_reports_reproducible(hinge_entry, hinge_atlas):
    a = verify_conditional(hinge_entry.problem, 1, 1500, 99, atlas=hinge_atlas)
    b = verify_conditional(hinge_entry.problem, 1, 1500, 99, atlas=hinge_atlas)
    assert a == b
    c = verify_conditional(hinge_entry.problem, 1, 1500, 100, atlas=hinge_atlas)
    assert c.seed != a.seed


def test_distributional_two_feature_example(hinge_entry, hinge_atlas):
    """w = 1/2 each, conditionals p(+1) = 3/4 and 1/4, h = (0, 0):
    per-feature surrogate regrets are 1/2 and 1/2; the linked report +1 is
    optimal under the first conditional and costs 1/2 under the second."""
    problem = hinge_entry.problem
    half = rat(1, 2)
    data = FiniteDataDistribution(
        (
            ("a", half, Distribution.of(["1/4", "3/4"])),
            ("b", half, Distribution.of(["3/4", "1/4"])),
        )
    )
    h = TabularHypothesis((("a", (ZERO,)), ("b", (ZERO,))))
    rep = verify_distributional(problem, 1, data, h, atlas=hinge_atlas)
    assert rep.ok
    # per-feature closed forms
    assert hinge_regret("3/4", 0) == half and hinge_regret("1/4", 0) == half
    assert zero_one_regret("3/4", "+1") == 0 and zero_one_regret("1/4", "+1") == half
    # lhs = 1/4 <= rhs = 1/2, with ratio recorded exactly
    assert rep.max_ratio == rat(1, 2)


def test_distributional_optimal_hypothesis_zero_both_sides(hinge_entry, hinge_atlas):
    data = FiniteDataDistribution(
        (
            ("a", rat(1, 3), Distribution.of(["1/4", "3/4"])),
            ("b", rat(2, 3), Distribution.of(["9/10", "1/10"])),
        )
    )
    h = TabularHypothesis((("a", (rat(1),)), ("b", (rat(-1),))))
    rep = verify_distributional(hinge_entry.problem, 1, data, h, atlas=hinge_atlas)
    assert rep.ok
    assert rep.max_ratio is None  # surrogate regret is exactly zero


def test_distributional_missing_feature(hinge_entry, hinge_atlas):
    data = FiniteDataDistribution((("a", rat(1), Distribution.of(["1/2", "1/2"])),))
    h = TabularHypothesis((("other", (ZERO,)),))
    with pytest.raises(ValueError):
        verify_distributional(hinge_entry.problem, 1, data, h, atlas=hinge_atlas)


def test_distributional_batches(hinge_entry, hinge_atlas, hinge_certificate):
    rep = verify_distributional_batches(
        hinge_entry.problem, hinge_certificate.exact_alpha, 300, 11, atlas=hinge_atlas
    )
    assert rep.ok and rep.samples == 300


def test_linearity_reports(bep_entry, bep_atlas):
    rep = verify_linearity(bep_atlas, bep_entry.problem, 1000, 3)
    assert rep.ok and rep.samples == 1000


def test_coverage_hinge(hinge_atlas):
    rep = verify_coverage(hinge_atlas, 2000, 4)
    assert rep.ok


def test_coverage_includes_shared_facet(hinge_atlas):
    # (1/2, 1/2) sits on both hinge level sets
    tied = Distribution.of(["1/2", "1/2"])
    holders = [
        ls for ls in hinge_atlas.level_sets if ls.polytope.contains_point(tied.probs)
    ]
    assert len(holders) == 2


def test_violation_csv_format(hinge_entry, hinge_atlas, hinge_certificate):
    rep = verify_conditional(
        hinge_entry.problem,
        rat(1, 2),
        500,
        7,
        atlas=hinge_atlas,
        inject=certificate_witness_pairs(hinge_certificate),
    )
    assert not rep.ok
    csv = rep.violations_csv()
    lines = csv.strip().split("\n")
    assert lines[0] == "p,u,lhs,rhs"
    first = lines[1].split(",")
    assert len(first) == 4


def test_random_simplex_point_exact():
    rng = random.Random(0)
    for _ in range(200):
        p = random_simplex_point(rng, 4)
        assert sum(p.probs, ZERO) == 1
        q = random_simplex_point(rng, 3, interior=True)
        assert all(v > 0 for v in q.probs)
