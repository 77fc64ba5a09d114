"""Built-in, exactly specified problem instances.

The catalog carries the classical binary hinge/0-1 pair, the binary-encoded
predictions surrogate for the four-label abstain loss, and three smooth
binary surrogates (exponential, logistic, Huber) wired with mixture-path
sweep configurations, plus a hinge control sweep.

The abstain entry fixes the label-to-codeword map in binary reflected order
over {-1,1}^2 and stores its link cells pre-clipped with pairwise disjoint
interiors (two abstain bands first, then the four codeword quadrants pushed
past the bands), so closed-cell infima coincide with the closures of the
regions the link actually maps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .loss_model import (
    DiscreteLoss,
    Distribution,
    LabelSet,
    LinkCell,
    PolyhedralLink,
    PolyhedralLoss,
    Problem,
    SmoothLoss,
)
from .lower_bound import SweepConfig, geometric_grid
from .polyhedra import make_polyhedron
from .rational import ONE, ZERO, rat


class ZooLookupError(KeyError):
    pass


@dataclass(frozen=True)
class EnvelopeSpec:
    """Inputs for the quadratic-envelope constants of a sweep entry."""

    strong_convexity: float
    radius: float
    u1: tuple
    smoothness: float = None  # None: measure on the proof's compact interval
    measure_interval: tuple = None


@dataclass(frozen=True)
class ZooEntry:
    name: str
    problem: Problem
    known_values: dict = None
    notes: dict = None
    sweep: SweepConfig = None
    envelope: EnvelopeSpec = None


def _sign_link(flip: bool = False) -> PolyhedralLink:
    pos, neg = ("+1", "-1") if not flip else ("-1", "+1")
    return PolyhedralLink(
        cells=(
            LinkCell(make_polyhedron(1, [[[-1], 0]]), pos),  # u >= 0 first
            LinkCell(make_polyhedron(1, [[[1], 0]]), neg),
        ),
        fallback_report=pos,
    )


def _binary_labels() -> LabelSet:
    return LabelSet(("-1", "+1"))


def _zero_one_loss() -> DiscreteLoss:
    return DiscreteLoss(
        reports=("-1", "+1"),
        matrix=((ZERO, ONE), (ONE, ZERO)),
    )


def _hinge_loss() -> PolyhedralLoss:
    one, zero = rat(1), rat(0)
    return PolyhedralLoss(
        dim=1,
        pieces_per_label=(
            (((one,), one), ((zero,), zero)),  # label -1: max(1 + u, 0)
            (((-one,), one), ((zero,), zero)),  # label +1: max(1 - u, 0)
        ),
    )


def hinge_zero_one(flip_link: bool = False) -> ZooEntry:
    problem = Problem(
        labels=_binary_labels(),
        target=_zero_one_loss(),
        surrogate=_hinge_loss(),
        link=_sign_link(flip=flip_link),
    )
    half = rat(1, 2)
    return ZooEntry(
        name="hinge_zero_one",
        problem=problem,
        known_values={
            "exact_alpha": ONE,
            "hoffman_global": rat(2),
            "separation_min": ONE,
            "loss_spread": ONE,
            "factored_alpha": rat(2),
            "vertex_pool": ((ZERO, ONE), (half, half), (ONE, ZERO)),
            "point_mass": {"separation": ONE, "hoffman": ONE, "alpha": ONE},
            "midpoint": {"hoffman": rat(2)},
        },
        notes={
            "exact_alpha": "classical binary hinge bound: target regret never exceeds surrogate regret",
            "hoffman_global": "expected hinge loss grows at slope 1/2 past the optimal set at the tied distribution",
            "separation_min": "the sign link's bad cell sits one unit from the optimal set at point masses",
        },
    )


# ---------------------------------------------------------------------------
# Binary encoded predictions for the abstain loss, |Y| = 4, d = 2

BEP_CODES = ((-1, -1), (-1, 1), (1, 1), (1, -1))  # binary reflected order
ABSTAIN = "abstain"


def _abstain_loss(labels) -> DiscreteLoss:
    half = rat(1, 2)
    n = len(labels)
    rows = []
    reports = tuple(labels) + (ABSTAIN,)
    for r in labels:
        rows.append(tuple(ZERO if r == y else ONE for y in labels))
    rows.append(tuple(half for _ in range(n)))
    return DiscreteLoss(reports=reports, matrix=tuple(rows))


def _bep_loss() -> PolyhedralLoss:
    one, zero = rat(1), rat(0)
    per_label = []
    for code in BEP_CODES:
        pieces = []
        for j in range(2):
            a = [zero, zero]
            a[j] = -rat(code[j])
            pieces.append((tuple(a), one))
        pieces.append(((zero, zero), zero))
        per_label.append(tuple(pieces))
    return PolyhedralLoss(dim=2, pieces_per_label=tuple(per_label))


def _bep_link(labels) -> PolyhedralLink:
    half = rat(1, 2)
    cells = []
    # Abstain bands: either coordinate within 1/2 of zero.
    for j in range(2):
        a_hi = [0, 0]
        a_hi[j] = 1
        a_lo = [0, 0]
        a_lo[j] = -1
        cells.append(
            LinkCell(make_polyhedron(2, [[a_hi, half], [a_lo, half]]), ABSTAIN)
        )
    # Codeword quadrants, clipped past the bands (disjoint interiors).
    for label, code in zip(labels, BEP_CODES):
        rows = []
        for j in range(2):
            a = [0, 0]
            a[j] = -code[j]
            rows.append([a, -half])  # code_j * u_j >= 1/2
        cells.append(LinkCell(make_polyhedron(2, rows), label))
    return PolyhedralLink(cells=tuple(cells), fallback_report=ABSTAIN)


def bep_abstain_4() -> ZooEntry:
    labels = ("y0", "y1", "y2", "y3")
    problem = Problem(
        labels=LabelSet(labels),
        target=_abstain_loss(labels),
        surrogate=_bep_loss(),
        link=_bep_link(labels),
    )
    half = rat(1, 2)
    return ZooEntry(
        name="bep_abstain_4",
        problem=problem,
        known_values={
            "exact_alpha": ONE,
            "loss_spread": ONE,
            "separation_min": half,
            "point_mass": {
                "separation": half,
                "hoffman": ONE,
                "alpha": ONE,
                "factored": rat(2),
            },
            "vertex_pool_size": 10,
        },
        notes={
            "point_mass.separation": "abstain bands end exactly 1/2 short of the codeword orthant",
            "point_mass.hoffman": "at a point mass the per-label loss equals the distance to its optimal set",
            "point_mass.alpha": "abstain cell trades regret 1/2 against minimal surrogate regret 1/2; wrong codewords sit 3/2 away",
            "point_mass.factored": "assembled bound spread * hoffman / separation = 1 * 1 / (1/2)",
            "exact_alpha": "known tight constant for this surrogate; recomputed here over the full vertex pool",
        },
    )


# ---------------------------------------------------------------------------
# Smooth binary surrogates with sweep configurations

_CODES_BINARY = (-1.0, 1.0)


def _exp_smooth() -> SmoothLoss:
    def value(y, u):
        return math.exp(-_CODES_BINARY[y] * u[0])

    def gradient(y, u):
        c = _CODES_BINARY[y]
        return (-c * math.exp(-c * u[0]),)

    return SmoothLoss(
        dim=1,
        num_labels=2,
        value=value,
        gradient=gradient,
        strong_convexity=1.0 / math.e,
        radius=1.0,
        center=(0.0,),
    )


def _logistic_smooth() -> SmoothLoss:
    def softplus(t):
        return max(t, 0.0) + math.log1p(math.exp(-abs(t)))

    def value(y, u):
        return softplus(-_CODES_BINARY[y] * u[0])

    def gradient(y, u):
        c = _CODES_BINARY[y]
        t = -c * u[0]
        sig = 1.0 / (1.0 + math.exp(-t)) if t < 40 else 1.0
        return (-c * sig,)

    return SmoothLoss(
        dim=1,
        num_labels=2,
        value=value,
        gradient=gradient,
        strong_convexity=3.0 / 16.0,
        smoothness=0.25,
        radius=1.0,
        center=(0.0,),
    )


def _huber_smooth() -> SmoothLoss:
    def hinge_t(y, u):
        return max(0.0, 1.0 - _CODES_BINARY[y] * u[0])

    def value(y, u):
        t = hinge_t(y, u)
        return t * t if t <= 2.0 else 4.0 * (t - 1.0)

    def gradient(y, u):
        t = hinge_t(y, u)
        if t == 0.0:
            return (0.0,)
        slope = 2.0 * t if t <= 2.0 else 4.0
        return (-_CODES_BINARY[y] * slope,)

    return SmoothLoss(
        dim=1,
        num_labels=2,
        value=value,
        gradient=gradient,
        strong_convexity=2.0,
        smoothness=2.0,
        radius=1.0,
        center=(0.0,),
    )


def _binary_sweep() -> SweepConfig:
    return SweepConfig(
        p0=Distribution.of(["1/2", "1/2"]),
        p1=Distribution.of([1, 0]),  # all mass on label -1
        u0=(0.0,),
        lambda_grid=geometric_grid(),
        minimizer_tolerance=1e-10,
    )


def _smooth_entry(name: str, loss: SmoothLoss, envelope: EnvelopeSpec) -> ZooEntry:
    problem = Problem(
        labels=_binary_labels(),
        target=_zero_one_loss(),
        surrogate=loss,
        link=_sign_link(),
    )
    return ZooEntry(
        name=name,
        problem=problem,
        sweep=_binary_sweep(),
        envelope=envelope,
    )


def exp_binary() -> ZooEntry:
    # The mixture endpoint has no surrogate minimizer, so the envelope
    # reference point is the minimizer over the closed strong-convexity
    # interval [-1, 1]; smoothness is measured on the proof's compact set.
    return _smooth_entry(
        "exp_binary",
        _exp_smooth(),
        EnvelopeSpec(
            strong_convexity=1.0 / math.e,
            radius=1.0,
            u1=(-1.0,),
            smoothness=None,
            measure_interval=(-3.0, 1.0),
        ),
    )


def logistic_binary() -> ZooEntry:
    return _smooth_entry(
        "logistic_binary",
        _logistic_smooth(),
        EnvelopeSpec(
            strong_convexity=3.0 / 16.0,
            radius=1.0,
            u1=(-1.0,),
            smoothness=0.25,
        ),
    )


def huber_binary() -> ZooEntry:
    return _smooth_entry(
        "huber_binary",
        _huber_smooth(),
        EnvelopeSpec(
            strong_convexity=2.0,
            radius=1.0,
            u1=(-1.0,),
            smoothness=2.0,
        ),
    )


def hinge_control_sweep() -> ZooEntry:
    problem = Problem(
        labels=_binary_labels(),
        target=_zero_one_loss(),
        surrogate=_hinge_loss(),
        link=_sign_link(),
    )
    return ZooEntry(
        name="hinge_control_sweep",
        problem=problem,
        sweep=_binary_sweep(),
    )


_CATALOG = {
    "hinge_zero_one": hinge_zero_one,
    "bep_abstain_4": bep_abstain_4,
    "exp_binary": exp_binary,
    "logistic_binary": logistic_binary,
    "huber_binary": huber_binary,
    "hinge_control_sweep": hinge_control_sweep,
}


def catalog_names() -> tuple:
    return tuple(sorted(_CATALOG))


def builtin(name: str) -> ZooEntry:
    try:
        factory = _CATALOG[name]
    except KeyError:
        raise ZooLookupError(
            f"unknown zoo entry {name!r}; available: {', '.join(catalog_names())}"
        ) from None
    return factory()
