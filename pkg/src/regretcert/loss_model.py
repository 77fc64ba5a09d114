"""Data model and serialization for target losses, polyhedral surrogates,
polyhedral links, distributions, and finite data/hypothesis pairs.

Problem files are UTF-8 JSON with rationals as "num/den" strings, so parsed
certificates carry every quantity bit-for-bit.  All model objects are
immutable after construction and validate their invariants eagerly: a
negative loss entry, a non-simplex distribution, or an unknown link report is
rejected with a located message.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass

from .exact_lp import LinearProgram, LpStatus, solve_lp
from .polyhedra import Polyhedron
from .rational import (
    ONE,
    ZERO,
    dot,
    format_rational,
    parse_rational,
    rat,
)


class ProblemFormatError(ValueError):
    """Schema or invariant violation in a problem description.

    The message carries a JSON-ish path locating the offending element.
    """

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


@dataclass(frozen=True)
class LabelSet:
    labels: tuple

    def __post_init__(self):
        if len(self.labels) < 2:
            raise ProblemFormatError("labels", "need at least two labels")
        if len(set(self.labels)) != len(self.labels):
            raise ProblemFormatError("labels", "label names must be unique")

    def __len__(self):
        return len(self.labels)

    def index(self, name) -> int:
        return self.labels.index(name)


@dataclass(frozen=True)
class Distribution:
    """Exact-rational point of the probability simplex."""

    probs: tuple

    def __post_init__(self):
        total = ZERO
        for i, p in enumerate(self.probs):
            if p < 0:
                raise ProblemFormatError(f"distribution[{i}]", "negative probability")
            total += p
        if total != 1:
            raise ProblemFormatError(
                "distribution", f"probabilities sum to {format_rational(total)}, not 1"
            )

    def __len__(self):
        return len(self.probs)

    def __getitem__(self, i):
        return self.probs[i]

    def support(self) -> tuple:
        return tuple(i for i, p in enumerate(self.probs) if p > 0)

    @staticmethod
    def point_mass(index: int, size: int) -> "Distribution":
        return Distribution(tuple(ONE if i == index else ZERO for i in range(size)))

    @staticmethod
    def of(values) -> "Distribution":
        return Distribution(tuple(rat(v) for v in values))


@dataclass(frozen=True)
class DiscreteLoss:
    """Finite nonnegative loss matrix indexed (report, label)."""

    reports: tuple
    matrix: tuple  # rows = reports, columns = labels

    def __post_init__(self):
        if not self.reports:
            raise ProblemFormatError("target.reports", "need at least one report")
        if len(set(self.reports)) != len(self.reports):
            raise ProblemFormatError("target.reports", "report names must be unique")
        if len(self.matrix) != len(self.reports):
            raise ProblemFormatError("target.loss", "one row per report required")
        width = len(self.matrix[0])
        for i, row in enumerate(self.matrix):
            if len(row) != width:
                raise ProblemFormatError(f"target.loss[{i}]", "ragged loss matrix")
            for j, v in enumerate(row):
                if v < 0:
                    raise ProblemFormatError(
                        f"target.loss[{i}][{j}]", f"negative loss {format_rational(v)}"
                    )

    @property
    def num_labels(self) -> int:
        return len(self.matrix[0])

    def row(self, report) -> tuple:
        return self.matrix[self.reports.index(report)]

    def scale(self, k) -> "DiscreteLoss":
        k = rat(k)
        return DiscreteLoss(
            self.reports, tuple(tuple(k * v for v in row) for row in self.matrix)
        )


@dataclass(frozen=True)
class PolyhedralLoss:
    """Per-label pointwise maximum of affine pieces over R^dim.

    Construction certifies nonnegativity: for each label the minimum of the
    max-affine (an exact LP) must be >= 0, otherwise the loss is rejected.
    """

    dim: int
    pieces_per_label: tuple  # per label: tuple of (a: tuple, c)

    def __post_init__(self):
        if self.dim < 1:
            raise ProblemFormatError("surrogate.dim", "dimension must be >= 1")
        for y, pieces in enumerate(self.pieces_per_label):
            if not pieces:
                raise ProblemFormatError(
                    f"surrogate.pieces[{y}]", "every label needs at least one piece"
                )
            for k, (a, _) in enumerate(pieces):
                if len(a) != self.dim:
                    raise ProblemFormatError(
                        f"surrogate.pieces[{y}][{k}].a", "wrong dimension"
                    )
            low = self._label_minimum(pieces)
            if low is None or low < 0:
                shown = "unbounded below" if low is None else format_rational(low)
                raise ProblemFormatError(
                    f"surrogate.pieces[{y}]",
                    f"loss not certified nonnegative (minimum {shown})",
                )

    def _label_minimum(self, pieces):
        # min over u of max_j (a_j.u + c_j), as an epigraph LP in (u, t).
        lhs, rhs = [], []
        for a, c in pieces:
            lhs.append(tuple(a) + (-ONE,))
            rhs.append(-c)
        objective = (ZERO,) * self.dim + (ONE,)
        out = solve_lp(LinearProgram(objective, tuple(lhs), tuple(rhs)))
        return out.optimal_value if out.status is LpStatus.OPTIMAL else None

    @property
    def num_labels(self) -> int:
        return len(self.pieces_per_label)

    def label_value(self, y: int, u):
        return max(dot(a, u) + c for a, c in self.pieces_per_label[y])

    def value_vector(self, u) -> tuple:
        return tuple(self.label_value(y, u) for y in range(self.num_labels))


@dataclass(frozen=True)
class LinkCell:
    region: Polyhedron
    report: object


@dataclass(frozen=True)
class PolyhedralLink:
    """Finite list of polyhedral cells mapping surrogate points to reports.

    Evaluation is total and deterministic: the first listed cell containing
    the point wins, the fallback report covers anything left over.
    """

    cells: tuple
    fallback_report: object

    def __post_init__(self):
        for i, cell in enumerate(self.cells):
            if cell.region.is_empty():
                raise ProblemFormatError(f"link.cells[{i}]", "cell region is empty")

    @property
    def dim(self) -> int:
        return self.cells[0].region.dim if self.cells else 0

    def reports_used(self) -> tuple:
        out = [cell.report for cell in self.cells]
        out.append(self.fallback_report)
        return tuple(out)


def link_eval(link: PolyhedralLink, u):
    """Report of the first cell containing u, else the fallback report."""
    for cell in link.cells:
        if cell.region.contains_point(u):
            return cell.report
    return link.fallback_report


@dataclass(frozen=True)
class SmoothLoss:
    """Differentiable surrogate given by per-label value/gradient callables.

    Not serializable: instances come from the built-in catalog or test code.
    Optional metadata records a strong-convexity modulus valid on the ball
    of the given radius around `center`, and a smoothness modulus.
    """

    dim: int
    num_labels: int
    value: object  # (label_index, u: tuple[float]) -> float
    gradient: object  # (label_index, u: tuple[float]) -> tuple[float]
    strong_convexity: float = None
    smoothness: float = None
    radius: float = None
    center: tuple = None

    def validate_gradients(self, seed: int = 0, probes: int = 20, tol: float = 1e-6):
        """Finite-difference consistency of gradient vs value."""
        rng = random.Random(seed)
        h = 1e-6
        for _ in range(probes):
            u = tuple(rng.uniform(-2.0, 2.0) for _ in range(self.dim))
            y = rng.randrange(self.num_labels)
            g = self.gradient(y, u)
            for i in range(self.dim):
                up = tuple(v + (h if j == i else 0.0) for j, v in enumerate(u))
                dn = tuple(v - (h if j == i else 0.0) for j, v in enumerate(u))
                fd = (self.value(y, up) - self.value(y, dn)) / (2 * h)
                scale = max(1.0, abs(g[i]))
                if abs(fd - g[i]) > tol * scale:
                    raise ValueError(
                        f"gradient inconsistent with value at label {y}, u={u}: "
                        f"analytic {g[i]}, finite-difference {fd}"
                    )
        return True


@dataclass(frozen=True)
class Problem:
    """The analyzed triple: target loss, surrogate, link, over one label set."""

    labels: LabelSet
    target: DiscreteLoss
    surrogate: object  # PolyhedralLoss or SmoothLoss
    link: PolyhedralLink

    def __post_init__(self):
        n = len(self.labels)
        if self.target.num_labels != n:
            raise ProblemFormatError("target.loss", "loss matrix width must match labels")
        if self.surrogate.num_labels != n:
            raise ProblemFormatError("surrogate.pieces", "one piece list per label required")
        for i, r in enumerate(self.link.reports_used()):
            if r not in self.target.reports:
                where = "link.fallback" if i == len(self.link.cells) else f"link.cells[{i}].report"
                raise ProblemFormatError(where, f"unknown report name {r!r}")
        if self.link.cells and self.link.dim != self.surrogate.dim:
            raise ProblemFormatError("link.cells", "link cells must match surrogate dimension")

    @property
    def is_polyhedral(self) -> bool:
        return isinstance(self.surrogate, PolyhedralLoss)


@dataclass(frozen=True)
class FiniteDataDistribution:
    """Finitely supported feature distribution with conditional label laws."""

    points: tuple  # of (feature_id, weight, Distribution)

    def __post_init__(self):
        total = ZERO
        ids = set()
        for fid, w, _ in self.points:
            if w < 0:
                raise ProblemFormatError(f"data[{fid}]", "negative weight")
            if fid in ids:
                raise ProblemFormatError(f"data[{fid}]", "duplicate feature id")
            ids.add(fid)
            total += w
        if total != 1:
            raise ProblemFormatError("data", "weights must sum to 1")

    def feature_ids(self) -> tuple:
        return tuple(fid for fid, _, _ in self.points)


@dataclass(frozen=True)
class TabularHypothesis:
    """Surrogate predictions tabulated per feature id."""

    mapping: tuple  # of (feature_id, u: tuple)

    def value(self, fid):
        for key, u in self.mapping:
            if key == fid:
                return u
        raise KeyError(f"feature id {fid!r} not covered by hypothesis")


# ---------------------------------------------------------------------------
# Problem-file schema

def _expect(cond, path, message):
    if not cond:
        raise ProblemFormatError(path, message)


def _parse_rat(value, path):
    try:
        return parse_rational(value)
    except Exception:
        raise ProblemFormatError(path, f"invalid rational literal {value!r}") from None


def _parse_vec(items, path, dim=None):
    _expect(isinstance(items, list), path, "expected an array of rational strings")
    if dim is not None:
        _expect(len(items) == dim, path, f"expected {dim} entries, got {len(items)}")
    return tuple(_parse_rat(v, f"{path}[{i}]") for i, v in enumerate(items))


def parse_problem(text: str) -> Problem:
    """Parse a UTF-8 JSON problem file into a validated Problem.

    Rationals are preserved exactly; any schema violation raises
    ProblemFormatError with the offending path.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProblemFormatError("$", f"not valid JSON: {exc}") from None
    _expect(isinstance(doc, dict), "$", "top level must be an object")
    for key in ("labels", "target", "surrogate", "link"):
        _expect(key in doc, "$", f"missing key {key!r}")

    _expect(isinstance(doc["labels"], list), "labels", "expected an array of strings")
    labels = LabelSet(tuple(doc["labels"]))
    n = len(labels)

    tgt = doc["target"]
    _expect(isinstance(tgt, dict), "target", "expected an object")
    _expect(isinstance(tgt.get("reports"), list), "target.reports", "expected an array")
    reports = tuple(tgt["reports"])
    flat = tgt.get("loss")
    _expect(isinstance(flat, list), "target.loss", "expected a flat row-major array")
    _expect(
        len(flat) == len(reports) * n,
        "target.loss",
        f"expected {len(reports) * n} entries ({len(reports)} reports x {n} labels)",
    )
    values = [_parse_rat(v, f"target.loss[{i}]") for i, v in enumerate(flat)]
    matrix = tuple(tuple(values[i * n : (i + 1) * n]) for i in range(len(reports)))
    target = DiscreteLoss(reports=reports, matrix=matrix)

    sur = doc["surrogate"]
    _expect(isinstance(sur, dict), "surrogate", "expected an object")
    dim = sur.get("dim")
    _expect(isinstance(dim, int) and dim >= 1, "surrogate.dim", "expected a positive integer")
    pieces_doc = sur.get("pieces")
    _expect(isinstance(pieces_doc, dict), "surrogate.pieces", "expected a map label -> pieces")
    _expect(
        set(pieces_doc) == set(labels.labels),
        "surrogate.pieces",
        "piece map keys must be exactly the label set",
    )
    per_label = []
    for label in labels.labels:
        path = f"surrogate.pieces[{label!r}]"
        entries = pieces_doc[label]
        _expect(isinstance(entries, list) and entries, path, "expected a nonempty array")
        pieces = []
        for k, ent in enumerate(entries):
            _expect(isinstance(ent, dict), f"{path}[{k}]", "expected an object with a, c")
            a = _parse_vec(ent.get("a"), f"{path}[{k}].a", dim)
            c = _parse_rat(ent.get("c"), f"{path}[{k}].c")
            pieces.append((a, c))
        per_label.append(tuple(pieces))
    surrogate = PolyhedralLoss(dim=dim, pieces_per_label=tuple(per_label))

    lnk = doc["link"]
    _expect(isinstance(lnk, dict), "link", "expected an object")
    cells_doc = lnk.get("cells")
    _expect(isinstance(cells_doc, list), "link.cells", "expected an array")
    cells = []
    for i, cd in enumerate(cells_doc):
        path = f"link.cells[{i}]"
        _expect(isinstance(cd, dict), path, "expected an object")
        ineqs = []
        _expect(isinstance(cd.get("ineq"), list), f"{path}.ineq", "expected an array")
        for k, row in enumerate(cd["ineq"]):
            a = _parse_vec(row.get("a"), f"{path}.ineq[{k}].a", dim)
            b = _parse_rat(row.get("b"), f"{path}.ineq[{k}].b")
            ineqs.append((a, b))
        eqs = []
        for k, row in enumerate(cd.get("eq", [])):
            a = _parse_vec(row.get("a"), f"{path}.eq[{k}].a", dim)
            b = _parse_rat(row.get("b"), f"{path}.eq[{k}].b")
            eqs.append((a, b))
        _expect("report" in cd, path, "missing report")
        region = Polyhedron(dim=dim, inequalities=tuple(ineqs), equalities=tuple(eqs))
        cells.append(LinkCell(region=region, report=cd["report"]))
    _expect("fallback" in lnk, "link.fallback", "missing fallback report")
    link = PolyhedralLink(cells=tuple(cells), fallback_report=lnk["fallback"])

    return Problem(labels=labels, target=target, surrogate=surrogate, link=link)


def problem_to_document(problem: Problem) -> dict:
    """Canonical JSON document for a polyhedral problem."""
    if not problem.is_polyhedral:
        raise ProblemFormatError(
            "surrogate", "smooth surrogates are callback-based and not serializable"
        )
    n = len(problem.labels)
    flat = []
    for row in problem.target.matrix:
        flat.extend(format_rational(v) for v in row)
    pieces = {
        label: [
            {"a": [format_rational(v) for v in a], "c": format_rational(c)}
            for a, c in problem.surrogate.pieces_per_label[y]
        ]
        for y, label in enumerate(problem.labels.labels)
    }
    cells = []
    for cell in problem.link.cells:
        entry = {
            "ineq": [
                {"a": [format_rational(v) for v in a], "b": format_rational(b)}
                for a, b in cell.region.inequalities
            ],
            "report": cell.report,
        }
        if cell.region.equalities:
            entry["eq"] = [
                {"a": [format_rational(v) for v in a], "b": format_rational(b)}
                for a, b in cell.region.equalities
            ]
        cells.append(entry)
    return {
        "labels": list(problem.labels.labels),
        "target": {"reports": list(problem.target.reports), "loss": flat},
        "surrogate": {"dim": problem.surrogate.dim, "pieces": pieces},
        "link": {"cells": cells, "fallback": problem.link.fallback_report},
    }


def serialize_problem(problem: Problem) -> str:
    """Canonical serialization: parse(serialize(p)) round-trips exactly and
    serialize(parse(text)) is idempotent."""
    return json.dumps(problem_to_document(problem), sort_keys=True, separators=(",", ":")) + "\n"
