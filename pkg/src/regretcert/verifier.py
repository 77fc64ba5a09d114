"""Randomized, exact-arithmetic validation of the regret-transfer
inequalities.

Every check is an exact rational comparison; a violation is data, not a
numerical tolerance call.  Sampling is stratified (atlas vertices, level-set
edge midpoints, link-cell anchors, near-optimal offsets) because uniform
sampling essentially never witnesses tightness; certificate witnesses can be
injected at the head of the stream.  Reports are bit-reproducible from the
seed.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .elicitation import (
    LevelSetAtlas,
    bayes_risk_target,
    level_set_atlas,
    surrogate_risk_value,
)
from .loss_model import (
    Distribution,
    FiniteDataDistribution,
    Problem,
    TabularHypothesis,
    link_eval,
)
from .polyhedra import NoVertexError, interior_point, vertices
from .rational import ONE, ZERO, Rational, dot, format_rational, rat


@dataclass(frozen=True)
class Violation:
    where: tuple  # distribution probs or a batch tag
    prediction: object  # surrogate point, report, or hypothesis tag
    lhs: object
    rhs: object


@dataclass(frozen=True)
class VerificationReport:
    kind: str
    samples: int
    violations: tuple
    max_ratio: object  # largest target/surrogate regret ratio seen, or None
    seed: int

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_document(self) -> dict:
        return {
            "kind": self.kind,
            "samples": self.samples,
            "seed": self.seed,
            "violation_count": len(self.violations),
            "max_ratio": None if self.max_ratio is None else format_rational(self.max_ratio),
            "violations": [
                {
                    "where": [format_rational(v) for v in vio.where],
                    "prediction": _fmt_prediction(vio.prediction),
                    "lhs": format_rational(vio.lhs),
                    "rhs": format_rational(vio.rhs),
                }
                for vio in self.violations[:100]
            ],
        }

    def violations_csv(self) -> str:
        lines = ["p,u,lhs,rhs"]
        for vio in self.violations:
            p_txt = " ".join(format_rational(v) for v in vio.where)
            u_txt = _fmt_prediction_csv(vio.prediction)
            lines.append(
                f"{p_txt},{u_txt},{format_rational(vio.lhs)},{format_rational(vio.rhs)}"
            )
        return "\n".join(lines) + "\n"


def _fmt_prediction(pred):
    if isinstance(pred, tuple):
        return [format_rational(v) for v in pred]
    return str(pred)


def _fmt_prediction_csv(pred):
    if isinstance(pred, tuple):
        return " ".join(format_rational(v) for v in pred)
    return str(pred)


# ---------------------------------------------------------------------------
# Exact evaluation against a certified atlas

class _Evaluator:
    """Exact regrets with the certified atlas risk shortcut (no per-sample
    LPs: the atlas construction proved min over representatives equals the
    Bayes risk)."""

    def __init__(self, problem: Problem, atlas: LevelSetAtlas):
        self.problem = problem
        self.atlas = atlas
        self.loss = problem.surrogate
        self.target = problem.target

    def surrogate_regret(self, u, p: Distribution):
        return dot(p.probs, self.loss.value_vector(u)) - self.atlas.risk(p)

    def target_regret_of_link(self, u, p: Distribution):
        r = link_eval(self.problem.link, u)
        risk, _ = bayes_risk_target(self.target, p)
        return dot(p.probs, self.target.row(r)) - risk, r


def _ensure_atlas(problem: Problem, atlas):
    return atlas if atlas is not None else level_set_atlas(problem.surrogate)


# ---------------------------------------------------------------------------
# Samplers

def random_rational(rng, lo, hi, denominator_cap=1000):
    den = rng.randint(1, denominator_cap)
    num = rng.randint(lo * den, hi * den)
    return Rational(num) / Rational(den)


def random_simplex_point(rng, size, interior=False) -> Distribution:
    total = rng.randint(max(size, 2), 9999)
    if interior:
        cuts = sorted(rng.sample(range(1, total), size - 1))
    else:
        cuts = sorted(rng.choices(range(total + 1), k=size - 1))
    bounds = [0] + cuts + [total]
    parts = [bounds[i + 1] - bounds[i] for i in range(size)]
    return Distribution(tuple(Rational(k) / Rational(total) for k in parts))


class _DistributionStream:
    """Interleaves atlas vertices, level-set edge midpoints, and random
    simplex draws (interior and boundary-inclusive)."""

    def __init__(self, atlas: LevelSetAtlas, rng, size):
        self.rng = rng
        self.size = size
        self.pool = list(atlas.vertex_pool)
        half = Rational(1, 2)
        mids = set()
        for ls in atlas.level_sets:
            pts = [q.probs for q in ls.vertex_points]
            for i in range(len(pts)):
                for j in range(i + 1, len(pts)):
                    mids.add(tuple(half * (a + b) for a, b in zip(pts[i], pts[j])))
        self.midpoints = [Distribution(m) for m in sorted(mids)]
        self.counter = 0

    def next(self) -> Distribution:
        k = self.counter
        self.counter += 1
        mode = k % 4
        if mode == 0 and self.pool:
            return self.pool[(k // 4) % len(self.pool)]
        if mode == 1 and self.midpoints:
            return self.midpoints[(k // 4) % len(self.midpoints)]
        return random_simplex_point(self.rng, self.size, interior=(mode == 2))


class _PredictionStream:
    """Surrogate points stratified across link cells and near optimal sets."""

    def __init__(self, problem: Problem, atlas: LevelSetAtlas, rng):
        self.rng = rng
        self.atlas = atlas
        self.dim = problem.surrogate.dim
        anchors = []
        offsets = [ZERO, Rational(1, 1000), Rational(-1, 1000)]
        for cell in problem.link.cells:
            pts = [interior_point(cell.region)]
            try:
                pts.extend(vertices(cell.region).vertices)
            except NoVertexError:
                pass
            for pt in pts:
                for j in range(self.dim):
                    for off in offsets:
                        anchors.append(
                            tuple(v + (off if j == i else ZERO) for i, v in enumerate(pt))
                        )
        seen = set()
        self.cell_anchors = []
        for a in anchors:
            if a not in seen:
                seen.add(a)
                self.cell_anchors.append(a)
        self.counter = 0

    def next(self, p: Distribution):
        k = self.counter
        self.counter += 1
        mode = k % 3
        if mode == 0 and self.cell_anchors:
            return self.cell_anchors[(k // 3) % len(self.cell_anchors)]
        if mode == 1:
            # Near the optimal set at p: an atlas representative optimal for
            # p, nudged by one part in a thousand along a random coordinate.
            base = self.atlas.optimal_representatives(p)[0]
            j = self.rng.randrange(self.dim)
            off = Rational(self.rng.choice((-1, 1)), 1000)
            return tuple(v + (off if i == j else ZERO) for i, v in enumerate(base))
        return tuple(random_rational(self.rng, -3, 3) for _ in range(self.dim))


# ---------------------------------------------------------------------------
# Verifiers

def verify_conditional(
    problem: Problem,
    alpha,
    n: int,
    seed: int,
    atlas: LevelSetAtlas = None,
    inject=(),
) -> VerificationReport:
    """Exact check of target-regret <= alpha * surrogate-regret on n
    stratified samples (p, u); injected (p, u) pairs run first and count
    toward n."""
    if n < 1:
        raise ValueError("need at least one sample")
    alpha = rat(alpha)
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    atlas = _ensure_atlas(problem, atlas)
    ev = _Evaluator(problem, atlas)
    rng = random.Random(seed)
    p_stream = _DistributionStream(atlas, rng, len(problem.labels))
    u_stream = _PredictionStream(problem, atlas, rng)

    violations = []
    max_ratio = None
    count = 0
    for p, u in inject:
        if count >= n:
            break
        count += 1
        max_ratio = _check_one(ev, alpha, p, u, violations, max_ratio)
    while count < n:
        count += 1
        p = p_stream.next()
        u = u_stream.next(p)
        max_ratio = _check_one(ev, alpha, p, u, violations, max_ratio)
    return VerificationReport(
        kind="conditional",
        samples=count,
        violations=tuple(violations),
        max_ratio=max_ratio,
        seed=seed,
    )


def _check_one(ev, alpha, p, u, violations, max_ratio):
    lhs, _ = ev.target_regret_of_link(u, p)
    surrogate = ev.surrogate_regret(u, p)
    rhs = alpha * surrogate
    if lhs > rhs:
        violations.append(Violation(where=p.probs, prediction=u, lhs=lhs, rhs=rhs))
    if surrogate > 0:
        ratio = lhs / surrogate
        if max_ratio is None or ratio > max_ratio:
            return ratio
    return max_ratio


def certificate_witness_pairs(certificate) -> tuple:
    """(p, u) pairs from a certificate's per-vertex tight witnesses, for
    injection into the conditional sample stream."""
    pairs = []
    for vc in certificate.per_vertex:
        for u in vc.tight_witnesses:
            pairs.append((vc.distribution, u))
    return tuple(pairs)


def verify_distributional(
    problem: Problem,
    alpha,
    data: FiniteDataDistribution,
    hypothesis: TabularHypothesis,
    atlas: LevelSetAtlas = None,
) -> VerificationReport:
    """Exact check of the distributional transfer for one (data, hypothesis)
    pair, including the expectation step: the distributional surrogate regret
    is the weighted sum of conditional regrets, so the conditional bound
    lifts by linearity."""
    alpha = rat(alpha)
    atlas = _ensure_atlas(problem, atlas)
    ev = _Evaluator(problem, atlas)
    lhs = ZERO
    surrogate_total = ZERO
    lifted = ZERO  # sum of per-feature alpha * conditional surrogate regret
    for fid, w, p in data.points:
        try:
            u = hypothesis.value(fid)
        except KeyError as exc:
            raise ValueError(str(exc)) from None
        t_reg, _ = ev.target_regret_of_link(u, p)
        s_reg = ev.surrogate_regret(u, p)
        lhs += w * t_reg
        surrogate_total += w * s_reg
        lifted += w * (alpha * s_reg)
    rhs = alpha * surrogate_total
    assert lifted == rhs  # expectation commutes with the linear bound
    violations = []
    if lhs > rhs:
        violations.append(
            Violation(
                where=tuple(w for _, w, _ in data.points),
                prediction="hypothesis",
                lhs=lhs,
                rhs=rhs,
            )
        )
    ratio = None if surrogate_total == 0 else lhs / surrogate_total
    return VerificationReport(
        kind="distributional",
        samples=1,
        violations=tuple(violations),
        max_ratio=ratio,
        seed=0,
    )


def random_data_batch(problem: Problem, atlas, rng):
    """One random finite data distribution plus tabular hypothesis."""
    size = len(problem.labels)
    m = rng.randint(1, 4)
    total = rng.randint(max(m, 2), 997)
    cuts = sorted(rng.sample(range(1, total), m - 1)) if m > 1 else []
    bounds = [0] + cuts + [total]
    weights = [Rational(bounds[i + 1] - bounds[i]) / Rational(total) for i in range(m)]
    dim = problem.surrogate.dim
    points = []
    mapping = []
    for i in range(m):
        p = random_simplex_point(rng, size)
        points.append((f"x{i}", weights[i], p))
        if rng.random() < 0.5:
            u = atlas.optimal_representatives(p)[0]
            off = Rational(rng.choice((-1, 0, 1)), 1000)
            j = rng.randrange(dim)
            u = tuple(v + (off if k == j else ZERO) for k, v in enumerate(u))
        else:
            u = tuple(random_rational(rng, -3, 3) for _ in range(dim))
        mapping.append((f"x{i}", u))
    return FiniteDataDistribution(tuple(points)), TabularHypothesis(tuple(mapping))


def verify_distributional_batches(
    problem: Problem,
    alpha,
    count: int,
    seed: int,
    atlas: LevelSetAtlas = None,
) -> VerificationReport:
    """Run the distributional check on `count` random (data, hypothesis)
    batches; aggregated report."""
    atlas = _ensure_atlas(problem, atlas)
    rng = random.Random(seed)
    violations = []
    max_ratio = None
    for _ in range(count):
        data, hyp = random_data_batch(problem, atlas, rng)
        rep = verify_distributional(problem, alpha, data, hyp, atlas)
        violations.extend(rep.violations)
        if rep.max_ratio is not None and (max_ratio is None or rep.max_ratio > max_ratio):
            max_ratio = rep.max_ratio
    return VerificationReport(
        kind="distributional",
        samples=count,
        violations=tuple(violations),
        max_ratio=max_ratio,
        seed=seed,
    )


def verify_linearity(
    atlas: LevelSetAtlas,
    problem: Problem,
    n: int,
    seed: int,
) -> VerificationReport:
    """Exact linearity of both conditional regrets along level-set vertex
    mixtures: n random tuples (level set, vertex pair, mixing weight,
    prediction, report)."""
    ev = _Evaluator(problem, atlas)
    rng = random.Random(seed)
    dim = problem.surrogate.dim
    violations = []
    for _ in range(n):
        ls = atlas.level_sets[rng.randrange(len(atlas.level_sets))]
        pts = ls.vertex_points
        q1 = pts[rng.randrange(len(pts))]
        q2 = pts[rng.randrange(len(pts))]
        beta = random_rational(rng, 0, 1)
        p = Distribution(
            tuple(beta * a + (1 - beta) * b for a, b in zip(q1.probs, q2.probs))
        )
        u = tuple(random_rational(rng, -3, 3) for _ in range(dim))
        r = problem.target.reports[rng.randrange(len(problem.target.reports))]

        lhs = ev.surrogate_regret(u, p)
        rhs = beta * ev.surrogate_regret(u, q1) + (1 - beta) * ev.surrogate_regret(u, q2)
        if lhs != rhs:
            violations.append(Violation(where=p.probs, prediction=u, lhs=lhs, rhs=rhs))

        risk_p, _ = bayes_risk_target(problem.target, p)
        risk_1, _ = bayes_risk_target(problem.target, q1)
        risk_2, _ = bayes_risk_target(problem.target, q2)
        row = problem.target.row(r)
        lhs_t = dot(p.probs, row) - risk_p
        rhs_t = beta * (dot(q1.probs, row) - risk_1) + (1 - beta) * (
            dot(q2.probs, row) - risk_2
        )
        if lhs_t != rhs_t:
            violations.append(Violation(where=p.probs, prediction=r, lhs=lhs_t, rhs=rhs_t))
    return VerificationReport(
        kind="linearity",
        samples=n,
        violations=tuple(violations),
        max_ratio=None,
        seed=seed,
    )


def verify_coverage(atlas: LevelSetAtlas, n: int, seed: int) -> VerificationReport:
    """n random distributions: each must lie in at least one level set whose
    representative attains the Bayes risk exactly.  The Bayes risk oracle is
    the epigraph LP, independent of the atlas shortcut."""
    rng = random.Random(seed)
    size = len(atlas.vertex_pool[0])
    stream = _DistributionStream(atlas, rng, size)
    violations = []
    for _ in range(n):
        p = stream.next()
        risk_lp, _ = surrogate_risk_value(atlas.loss, p)
        covered = False
        for ls, lv in zip(atlas.level_sets, atlas.loss_at_representatives):
            if ls.polytope.contains_point(p.probs):
                if dot(p.probs, lv) == risk_lp:
                    covered = True
                else:
                    violations.append(
                        Violation(
                            where=p.probs,
                            prediction=ls.representative,
                            lhs=dot(p.probs, lv),
                            rhs=risk_lp,
                        )
                    )
        if not covered:
            violations.append(
                Violation(where=p.probs, prediction="uncovered", lhs=ONE, rhs=ZERO)
            )
    return VerificationReport(
        kind="coverage",
        samples=n,
        violations=tuple(violations),
        max_ratio=None,
        seed=seed,
    )
