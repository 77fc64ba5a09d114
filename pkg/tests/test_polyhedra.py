import random

import pytest
from hypothesis import given, settings, strategies as st

from regretcert.polyhedra import (
    EmptyPolyhedronError,
    NoVertexError,
    UnsupportedScaleError,
    arrangement_cells,
    box,
    contains,
    distance_as_max_affine,
    interior_point,
    linf_distance,
    make_max_affine,
    make_polyhedron,
    remove_redundancy,
    vertices,
)
from regretcert.rational import ZERO, dot, rat

from oracles import hinge_risk


def point(*coords):
    return make_polyhedron(
        len(coords),
        equalities=[[[1 if j == i else 0 for j in range(len(coords))], c] for i, c in enumerate(coords)],
    )


# ---------------------------------------------------------------------------
# vertices

def test_unit_square():
    desc = vertices(box([0, 0], [1, 1]))
    assert desc.is_bounded
    assert set(desc.vertices) == {
        (rat(0), rat(0)),
        (rat(0), rat(1)),
        (rat(1), rat(0)),
        (rat(1), rat(1)),
    }


def test_hinge_level_set_vertices():
    # {p : 1/2 <= p <= 1} in one coordinate, from the hinge closed form
    seg = box(["1/2"], [1])
    desc = vertices(seg)
    assert desc.vertices == ((rat(1, 2),), (rat(1),))
    assert hinge_risk(desc.vertices[0][0]) == 1  # oracle anchor for the pin


def test_half_line():
    desc = vertices(make_polyhedron(1, [[[-1], 0]]))
    assert desc.vertices == ((rat(0),),)
    assert desc.rays == ((rat(1),),)
    assert not desc.is_bounded


def test_empty_polyhedron_error():
    empty = make_polyhedron(1, [[[1], -1], [[-1], -2]])
    with pytest.raises(EmptyPolyhedronError):
        vertices(empty)


def test_lineality_flagged():
    band = make_polyhedron(2, [[[1, 0], 1], [[-1, 0], 1]])
    with pytest.raises(NoVertexError):
        vertices(band)


def test_vertex_hrep_round_trip():
    P = make_polyhedron(2, [[[1, 1], 2], [[-1, 0], 0], [[0, -1], 0], [[1, -1], 1]])
    desc = vertices(P)
    for v in desc.vertices:
        assert P.contains_point(v)
    # random convex combinations stay inside, exactly
    rng = random.Random(5)
    for _ in range(50):
        weights = [rat(rng.randint(0, 20)) for _ in desc.vertices]
        total = sum(weights, ZERO)
        if total == 0:
            continue
        mix = tuple(
            sum((w * v[j] for w, v in zip(weights, desc.vertices)), ZERO) / total
            for j in range(2)
        )
        assert P.contains_point(mix)


# ---------------------------------------------------------------------------
# distances

def test_interval_gap():
    assert linf_distance(make_polyhedron(1, [[[1], 0]]), make_polyhedron(1, [[[-1], -1]])) == 1


def test_overlap_zero():
    assert linf_distance(box([0], [2]), box([1], [3])) == 0


def test_bep_band_to_codeword_quadrant():
    band = make_polyhedron(2, [[[1, 0], "1/2"], [[-1, 0], "1/2"]])
    quadrant = make_polyhedron(2, [[[-1, 0], -1], [[0, -1], -1]])
    assert linf_distance(band, quadrant) == rat(1, 2)


def test_distance_symmetry_and_identity():
    P = box([0, 0], [1, 2])
    Q = make_polyhedron(2, [[[1, 1], -1]])
    assert linf_distance(P, Q) == linf_distance(Q, P)
    assert linf_distance(P, P) == 0


def test_distance_empty_error():
    with pytest.raises(EmptyPolyhedronError):
        linf_distance(box([0], [1]), make_polyhedron(1, [[[1], -1], [[-1], -2]]))


# ---------------------------------------------------------------------------
# containment

def test_containment_basics():
    assert contains(box([0], [1]), box([0], ["1/2"])) == (True, None)
    ok, witness = contains(box([0], ["1/2"]), box([0], [1]))
    assert not ok
    assert witness == (rat(1),)


def test_empty_contained_in_everything():
    empty = make_polyhedron(1, [[[1], -1], [[-1], -2]])
    assert contains(box([0], [1]), empty)[0]


def test_containment_unbounded_witness():
    # Q is a half-line escaping P; the witness must actually violate P.
    P = box([0], [10])
    Q = make_polyhedron(1, [[[-1], 0]])
    ok, witness = contains(P, Q)
    assert not ok
    assert witness[0] > 10


# ---------------------------------------------------------------------------
# interior points

def test_interior_examples():
    assert interior_point(box([0], [1])) == (rat(1, 2),)
    tri = make_polyhedron(2, [[[-1, 0], 0], [[0, -1], 0], [[1, 1], 1]])
    assert interior_point(tri) == (rat(1, 3), rat(1, 3))
    assert interior_point(make_polyhedron(1, [[[-1], 0]])) == (rat(1),)


def test_interior_point_with_lineality():
    band = make_polyhedron(2, [[[1, 0], "1/2"], [[-1, 0], "1/2"]])
    pt = interior_point(band)
    assert band.contains_point(pt)
    assert abs(pt[0]) < rat(1, 2)


def test_interior_point_lower_dimensional():
    seg = make_polyhedron(2, [[[0, -1], 0], [[0, 1], 0], [[1, 0], 1], [[-1, 0], 0]])
    pt = interior_point(seg)
    assert pt[1] == 0 and 0 < pt[0] < 1


# ---------------------------------------------------------------------------
# distance as a max-affine function

def test_distance_pieces_to_origin():
    g = distance_as_max_affine(point(0))
    assert set(g.pieces) == {((rat(1),), rat(0)), ((rat(-1),), rat(0))}


def test_distance_pieces_one_sided():
    g = distance_as_max_affine(make_polyhedron(1, [[[-1], -1]]))
    assert set(g.pieces) == {((rat(-1),), rat(1)), ((rat(0),), rat(0))}


def test_distance_max_affine_agrees_with_lp():
    # random polytope in the plane; oracle is the distance LP itself
    rng = random.Random(11)
    S = make_polyhedron(
        2,
        [[[1, 0], 2], [[-1, 0], 1], [[0, 1], 1], [[0, -1], 2], [[1, 1], rat(5, 2)]],
    )
    g = distance_as_max_affine(S)
    for _ in range(1000):
        u = (rat(rng.randint(-60, 60), 10), rat(rng.randint(-60, 60), 10))
        assert g.value(u) == linf_distance(point(*u), S)


def test_distance_requires_vertex():
    band = make_polyhedron(2, [[[1, 0], 1], [[-1, 0], 1]])
    with pytest.raises(NoVertexError):
        distance_as_max_affine(band)


# ---------------------------------------------------------------------------
# arrangements

def test_abs_cells():
    f = make_max_affine([[[1], 0], [[-1], 0]])
    cells = arrangement_cells([f], box([-2], [2]))
    assert len(cells) == 2
    (c1, a1), (c2, a2) = cells
    assert vertices(c1).vertices == ((rat(-2),), (rat(0),))
    assert a1 == (1,)  # the -u piece
    assert vertices(c2).vertices == ((rat(0),), (rat(2),))
    assert a2 == (0,)


def test_hinge_expected_loss_cells():
    # both hinge label functions at the tied distribution: kinks at -1 and 1
    f_neg = make_max_affine([[[1], 1], [[0], 0]])
    f_pos = make_max_affine([[[-1], 1], [[0], 0]])
    cells = arrangement_cells([f_neg, f_pos], box([-3], [3]))
    intervals = sorted(
        (vertices(c).vertices[0][0], vertices(c).vertices[-1][0]) for c, _ in cells
    )
    assert intervals == [(rat(-3), rat(-1)), (rat(-1), rat(1)), (rat(1), rat(3))]


def test_two_generic_lines_four_cells():
    f1 = make_max_affine([[[1, 0], 0], [[0, 0], 0]])
    f2 = make_max_affine([[[0, 1], 0], [[0, 0], 0]])
    cells = arrangement_cells([f1, f2], box([-1, -1], [1, 1]))
    assert len(cells) == 4
    assert sorted(active for _, active in cells) == [(0, 0), (0, 1), (1, 0), (1, 1)]


def test_arrangement_covers_region():
    rng = random.Random(23)
    f1 = make_max_affine([[[1, 2], 0], [[0, 0], 1]])
    f2 = make_max_affine([[[-1, 1], 0], [[2, 0], -1], [[0, 0], 0]])
    region = box([-2, -2], [2, 2])
    cells = arrangement_cells([f1, f2], region)
    for _ in range(300):
        u = (rat(rng.randint(-20, 20), 10), rat(rng.randint(-20, 20), 10))
        holders = [c for c, _ in cells if c.contains_point(u)]
        assert holders, f"uncovered point {u}"
    # on each cell, each function equals its recorded active piece inside
    for cell, active in cells:
        pt = interior_point(cell)
        for f, k in zip((f1, f2), active):
            w, z = f.pieces[k]
            assert f.value(pt) == dot(w, pt) + z


def test_arrangement_dimension_cap():
    f = make_max_affine([[[1, 0, 0, 0], 0], [[0, 0, 0, 0], 0]])
    region = box([-1] * 4, [1] * 4)
    with pytest.raises(UnsupportedScaleError):
        arrangement_cells([f], region)


def test_arrangement_empty_region():
    f = make_max_affine([[[1], 0], [[-1], 0]])
    with pytest.raises(EmptyPolyhedronError):
        arrangement_cells([f], make_polyhedron(1, [[[1], -1], [[-1], -2]]))


# ---------------------------------------------------------------------------
# redundancy removal

def test_remove_redundancy():
    P = make_polyhedron(
        1, [[[1], 1], [[2], 4], [[1], 3], [[-1], 0], [[0], 5]]
    )
    R = remove_redundancy(P)
    assert set(R.inequalities) == {((rat(1),), rat(1)), ((rat(-1),), rat(0))}


def test_remove_redundancy_keeps_direction():
    # parallel rows with opposite signs must both survive normalization
    P = make_polyhedron(1, [[["-1/2"], "1/2"], [["1/2"], "1/2"]])
    R = remove_redundancy(P)
    desc = vertices(R)
    assert desc.vertices == ((rat(-1),), (rat(1),))


@settings(max_examples=30, deadline=None)
@given(st.lists(st.tuples(st.integers(-3, 3), st.integers(-3, 3), st.integers(0, 4)), min_size=1, max_size=6))
def test_remove_redundancy_preserves_set(rows):
    ineqs = [[[a, b], c] for a, b, c in rows]
    P = make_polyhedron(2, ineqs)
    if P.is_empty():
        return
    R = remove_redundancy(P)
    assert contains(P, R)[0] and contains(R, P)[0]
