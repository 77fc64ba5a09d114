import json

import pytest

from regretcert.loss_model import (
    Distribution,
    FiniteDataDistribution,
    LabelSet,
    LinkCell,
    PolyhedralLink,
    PolyhedralLoss,
    ProblemFormatError,
    SmoothLoss,
    TabularHypothesis,
    link_eval,
    parse_problem,
    serialize_problem,
)
from regretcert.polyhedra import make_polyhedron
from regretcert.rational import rat
from regretcert.zoo import builtin


def test_round_trip_preserves_rationals(tmp_path):
    entry = builtin("hinge_zero_one")
    text = serialize_problem(entry.problem)
    parsed = parse_problem(text)
    assert parsed == entry.problem
    # canonical-form idempotence
    assert serialize_problem(parsed) == text


def test_bep_round_trip():
    entry = builtin("bep_abstain_4")
    text = serialize_problem(entry.problem)
    assert parse_problem(text) == entry.problem


def _doc():
    return json.loads(serialize_problem(builtin("hinge_zero_one").problem))


def test_negative_loss_rejected():
    doc = _doc()
    doc["target"]["loss"][0] = "-1/2"
    with pytest.raises(ProblemFormatError, match="negative loss"):
        parse_problem(json.dumps(doc))


def test_simplex_violation_rejected():
    with pytest.raises(ProblemFormatError, match="sum"):
        Distribution.of(["1/3", "1/3", "1/2"])
    with pytest.raises(ProblemFormatError, match="negative"):
        Distribution.of(["-1/4", "5/4"])


def test_unknown_report_in_link_rejected():
    doc = _doc()
    doc["link"]["cells"][0]["report"] = "nope"
    with pytest.raises(ProblemFormatError, match="unknown report"):
        parse_problem(json.dumps(doc))


def test_bad_rational_literal_located():
    doc = _doc()
    doc["target"]["loss"][2] = "1.5"
    with pytest.raises(ProblemFormatError, match=r"target.loss\[2\]"):
        parse_problem(json.dumps(doc))


def test_negative_surrogate_rejected():
    with pytest.raises(ProblemFormatError, match="nonnegative"):
        PolyhedralLoss(dim=1, pieces_per_label=((((rat(1),), rat(-1)),),))


def test_unbounded_below_surrogate_rejected():
    with pytest.raises(ProblemFormatError, match="unbounded"):
        PolyhedralLoss(dim=1, pieces_per_label=((((rat(1),), rat(0)),),))


def test_empty_link_cell_rejected():
    empty = make_polyhedron(1, [[[1], -1], [[-1], -2]])
    with pytest.raises(ProblemFormatError, match="empty"):
        PolyhedralLink(cells=(LinkCell(empty, "+1"),), fallback_report="+1")


def test_link_eval_tie_policy():
    link = builtin("hinge_zero_one").problem.link
    assert link_eval(link, (rat(-3),)) == "-1"
    assert link_eval(link, (rat(0),)) == "+1"  # "+1" cell listed first
    assert link_eval(link, (rat(2),)) == "+1"


def test_bep_link_eval():
    link = builtin("bep_abstain_4").problem.link
    # min_j |u_j| <= 1/2 means abstain
    assert link_eval(link, (rat(2, 5), rat(2))) == "abstain"
    assert link_eval(link, (rat(1), rat(1))) == "y2"  # codeword (+1, +1)
    assert link_eval(link, (rat(-1), rat(-1))) == "y0"


def test_link_eval_constant_inside_cells():
    link = builtin("bep_abstain_4").problem.link
    import random

    rng = random.Random(2)
    from regretcert.polyhedra import interior_point

    for cell in link.cells:
        base = interior_point(cell.region)
        for _ in range(20):
            jitter = tuple(
                v + rat(rng.randint(-1, 1), 10**6) for v in base
            )
            if cell.region.contains_point(jitter):
                earlier = [c for c in link.cells if c is cell]
                # first matching cell wins; jitter stays in this cell's
                # interior so the report can only come from an earlier cell
                got = link_eval(link, jitter)
                idx = link.cells.index(cell)
                owners = [
                    i for i, c in enumerate(link.cells) if c.region.contains_point(jitter)
                ]
                assert got == link.cells[min(owners)].report


def test_labels_validation():
    with pytest.raises(ProblemFormatError):
        LabelSet(("a",))
    with pytest.raises(ProblemFormatError):
        LabelSet(("a", "a"))


def test_smooth_loss_gradient_validation():
    import math

    good = SmoothLoss(
        dim=1,
        num_labels=2,
        value=lambda y, u: math.exp(-(1 if y else -1) * u[0]),
        gradient=lambda y, u: (-(1 if y else -1) * math.exp(-(1 if y else -1) * u[0]),),
    )
    assert good.validate_gradients(seed=1)
    bad = SmoothLoss(
        dim=1,
        num_labels=2,
        value=lambda y, u: math.exp(-(1 if y else -1) * u[0]),
        gradient=lambda y, u: (0.5,),
    )
    with pytest.raises(ValueError, match="inconsistent"):
        bad.validate_gradients(seed=1)


def test_data_distribution_validation():
    p = Distribution.of(["1/2", "1/2"])
    with pytest.raises(ProblemFormatError, match="sum"):
        FiniteDataDistribution((("a", rat(1, 2), p),))
    with pytest.raises(ProblemFormatError, match="duplicate"):
        FiniteDataDistribution((("a", rat(1, 2), p), ("a", rat(1, 2), p)))
    data = FiniteDataDistribution((("a", rat(1), p),))
    assert data.feature_ids() == ("a",)


def test_hypothesis_missing_feature():
    h = TabularHypothesis((("a", (rat(0),)),))
    with pytest.raises(KeyError):
        h.value("b")
