"""Square-root transfer barrier demonstration for smooth surrogates.

For a smooth, locally strongly convex surrogate, target regret along the
mixture path p(lam) = (1-lam) p0 + lam p1 shrinks linearly in lam while
surrogate regret shrinks quadratically, so no transfer function can beat a
square root near zero.  This module runs that sweep numerically (binary64;
the only floating-point corner of the package), fits the two exponents, and
evaluates the analytic envelope constants that bound the quadratic regime.

Deterministic throughout: fixed descent policy, fixed grids, no randomness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .elicitation import bayes_risk_target, expected_loss, surrogate_risk_value
from .loss_model import Distribution, Problem, SmoothLoss, link_eval
from .rational import dot, rat


class NonConvergenceError(RuntimeError):
    """Descent failed to reach the gradient tolerance; carries the final
    gradient norm."""

    def __init__(self, message, gradient_norm):
        super().__init__(message)
        self.gradient_norm = gradient_norm


class SweepConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SweepConfig:
    """Mixture-path sweep: p0 sits on the boundary between two optimal
    target reports with u0 surrogate-optimal there; p1 makes the linked
    report strictly suboptimal."""

    p0: Distribution
    p1: Distribution
    u0: tuple  # floats
    lambda_grid: tuple  # floats, strictly decreasing toward 0
    minimizer_tolerance: float = 1e-10

    def __post_init__(self):
        if self.minimizer_tolerance <= 0:
            raise SweepConfigError("minimizer tolerance must be positive")
        grid = self.lambda_grid
        if not grid or any(not (0 < g < 1) for g in grid):
            raise SweepConfigError("lambda grid must live strictly inside (0, 1)")
        if any(a <= b for a, b in zip(grid, grid[1:])):
            raise SweepConfigError("lambda grid must be strictly decreasing toward 0")


@dataclass(frozen=True)
class SweepRow:
    lam: float
    target_regret: float
    surrogate_regret: float
    u_lambda: tuple


@dataclass(frozen=True)
class EnvelopeConstants:
    strong_convexity: float
    smoothness: float
    radius: float
    lambda_threshold: float  # mixtures below this keep the minimizer local
    lambda_smooth_cap: float  # additional cap alpha / (2 (alpha + beta))
    target_slope: float  # linear coefficient of target regret in lambda
    surrogate_quadratic: float  # quadratic coefficient bounding surrogate regret

    @property
    def lambda_limit(self) -> float:
        return min(self.lambda_threshold, self.lambda_smooth_cap)


def geometric_grid(start: float = 1e-1, stop: float = 1e-3, count: int = 17) -> tuple:
    """Strictly decreasing geometric grid from start down to stop."""
    if count < 2 or not (0 < stop < start < 1):
        raise SweepConfigError("grid needs 0 < stop < start < 1 and count >= 2")
    ratio = (stop / start) ** (1.0 / (count - 1))
    return tuple(start * ratio**k for k in range(count))


# ---------------------------------------------------------------------------
# Smooth minimization

def _expected_value(loss: SmoothLoss, weights, u):
    return sum(w * loss.value(y, u) for y, w in enumerate(weights) if w != 0.0)


def _expected_gradient(loss: SmoothLoss, weights, u):
    total = [0.0] * loss.dim
    for y, w in enumerate(weights):
        if w == 0.0:
            continue
        g = loss.gradient(y, u)
        for j in range(loss.dim):
            total[j] += w * g[j]
    return tuple(total)


def _descend(loss: SmoothLoss, weights, u_init, tol, max_iters=100_000):
    """Gradient descent with backtracking: initial step 1, shrink factor 1/2.

    A step is accepted on Armijo sufficient decrease or, once loss
    differences fall below float resolution near the minimizer, on a strict
    drop of the analytic gradient norm (which has no cancellation and stays
    accurate).  Stops when the sup-norm gradient is within tol."""
    u = tuple(float(v) for v in u_init)
    f = _expected_value(loss, weights, u)
    g = _expected_gradient(loss, weights, u)
    for _ in range(max_iters):
        gnorm = max(abs(v) for v in g)
        if gnorm <= tol:
            return u
        g_sq = sum(v * v for v in g)
        step = 1.0
        while True:
            candidate = tuple(a - step * b for a, b in zip(u, g))
            f_new = _expected_value(loss, weights, candidate)
            g_new = _expected_gradient(loss, weights, candidate)
            if f_new <= f - 1e-4 * step * g_sq or max(abs(v) for v in g_new) < gnorm:
                break
            step *= 0.5
            if step < 1e-18:
                raise NonConvergenceError(
                    f"backtracking stalled at gradient norm {gnorm:.3e}", gnorm
                )
        u, f, g = candidate, f_new, g_new
    gnorm = max(abs(v) for v in g)
    raise NonConvergenceError(
        f"iteration cap reached at gradient norm {gnorm:.3e}", gnorm
    )


def minimize_expected(loss: SmoothLoss, p: Distribution, u_init, tol: float):
    """Minimizer of the expected smooth loss at p, to sup-norm gradient tol."""
    weights = tuple(float(v) for v in p.probs)
    return _descend(loss, weights, u_init, tol)


# ---------------------------------------------------------------------------
# The sweep

def _validate_config(problem: Problem, cfg: SweepConfig):
    ell = problem.target
    r_prime = link_eval(problem.link, tuple(rat(Fraction(v)) for v in cfg.u0))
    _, gamma_p1 = bayes_risk_target(ell, cfg.p1)
    if r_prime in gamma_p1:
        raise SweepConfigError(
            f"linked report {r_prime!r} is still optimal at p1; no regret grows"
        )
    _, gamma_p0 = bayes_risk_target(ell, cfg.p0)
    if r_prime not in gamma_p0:
        raise SweepConfigError(f"linked report {r_prime!r} must be optimal at p0")
    r_opt = next(r for r in ell.reports if r in gamma_p1)
    if r_opt not in gamma_p0:
        raise SweepConfigError("p0 must lie on the boundary of the winning report")
    return r_prime, r_opt


def sweep_lambda(problem: Problem, cfg: SweepConfig):
    """Target and surrogate regrets of the fixed prediction u0 along the
    mixture path, with warm-started minimization for smooth surrogates and
    exact Bayes risks for polyhedral controls."""
    r_prime, r_opt = _validate_config(problem, cfg)
    ell = problem.target
    diff = tuple(
        float(a - b) for a, b in zip(ell.row(r_prime), ell.row(r_opt))
    )
    p0f = tuple(float(v) for v in cfg.p0.probs)
    p1f = tuple(float(v) for v in cfg.p1.probs)
    smooth = isinstance(problem.surrogate, SmoothLoss)
    u0 = tuple(float(v) for v in cfg.u0)

    rows = []
    warm = u0
    prev_surrogate = None
    for lam in cfg.lambda_grid:
        weights = tuple((1.0 - lam) * a + lam * b for a, b in zip(p0f, p1f))
        target_regret = sum(w * d for w, d in zip(weights, diff))
        if smooth:
            u_lam = _descend(problem.surrogate, weights, warm, cfg.minimizer_tolerance)
            warm = u_lam
            surrogate_regret = _expected_value(problem.surrogate, weights, u0) - _expected_value(
                problem.surrogate, weights, u_lam
            )
        else:
            lam_q = rat(Fraction(lam))
            p_lam = Distribution(
                tuple(
                    (1 - lam_q) * a + lam_q * b
                    for a, b in zip(cfg.p0.probs, cfg.p1.probs)
                )
            )
            risk, u_opt = surrogate_risk_value(problem.surrogate, p_lam)
            u0_exact = tuple(rat(Fraction(v)) for v in u0)
            surrogate_regret = float(expected_loss(problem.surrogate, p_lam, u0_exact) - risk)
            u_lam = tuple(float(v) for v in u_opt)
        if surrogate_regret < -1e-12 or target_regret < -1e-12:
            raise AssertionError("regrets must be nonnegative up to roundoff")
        surrogate_regret = max(surrogate_regret, 0.0)
        target_regret = max(target_regret, 0.0)
        if prev_surrogate is not None and surrogate_regret > prev_surrogate + 1e-12:
            raise AssertionError(
                "surrogate regret must shrink monotonically along the grid"
            )
        prev_surrogate = surrogate_regret
        rows.append(
            SweepRow(
                lam=lam,
                target_regret=target_regret,
                surrogate_regret=surrogate_regret,
                u_lambda=u_lam,
            )
        )
    return rows


@dataclass(frozen=True)
class ExponentFit:
    slope_target: float
    slope_surrogate: float
    c_estimate: float
    rows_used: int


def fit_exponents(rows) -> ExponentFit:
    """Least-squares log-log slopes of both regrets against lambda, plus the
    smallest observed target / sqrt(surrogate) ratio."""
    usable = [r for r in rows if r.target_regret > 1e-14 and r.surrogate_regret > 1e-14]
    if len(usable) < 5:
        raise ValueError(f"need at least 5 usable rows, got {len(usable)}")

    def slope(xs, ys):
        n = len(xs)
        mx = sum(xs) / n
        my = sum(ys) / n
        num = sum((x - mx) * (y - my) for x, y in zip(xs, ys))
        den = sum((x - mx) ** 2 for x in xs)
        return num / den

    logs = [math.log(r.lam) for r in usable]
    slope_t = slope(logs, [math.log(r.target_regret) for r in usable])
    slope_s = slope(logs, [math.log(r.surrogate_regret) for r in usable])
    c_est = min(r.target_regret / math.sqrt(r.surrogate_regret) for r in usable)
    return ExponentFit(
        slope_target=slope_t,
        slope_surrogate=slope_s,
        c_estimate=c_est,
        rows_used=len(usable),
    )


def analytic_envelope(
    strong_convexity: float,
    smoothness: float,
    radius: float,
    u0,
    u1,
    surrogate_at_u0: float,
    surrogate_at_u1: float,
    p1: Distribution,
    target,
    linked_report,
    optimal_report,
) -> EnvelopeConstants:
    """Closed-form constants of the quadratic envelope.

    lambda_threshold = a d^2 / (2 a d^2 + 4 L1(u0) - 4 L1(u1)) keeps the
    perturbed minimizer inside the strong-convexity ball; below the extra cap
    a / (2 (a + b)) the minimizer drift is linear in lambda and
    surrogate regret <= (2 b^3 / a^2) ||u0 - u1||^2 * lambda^2.
    """
    a, b, d = strong_convexity, smoothness, radius
    if a <= 0 or b <= 0 or d <= 0:
        raise ValueError("moduli and radius must be positive")
    gap = surrogate_at_u0 - surrogate_at_u1
    lambda_threshold = a * d * d / (2 * a * d * d + 4 * gap)
    lambda_smooth_cap = 0.5 * a / (a + b)
    dist_sq = sum((x - y) ** 2 for x, y in zip(u0, u1))
    c_surrogate = 2 * b**3 / (a * a) * dist_sq
    diff = tuple(
        x - y for x, y in zip(target.row(linked_report), target.row(optimal_report))
    )
    c_target = float(dot(p1.probs, diff))
    if c_target <= 0:
        raise ValueError("linked report must have positive regret at p1")
    return EnvelopeConstants(
        strong_convexity=a,
        smoothness=b,
        radius=d,
        lambda_threshold=lambda_threshold,
        lambda_smooth_cap=lambda_smooth_cap,
        target_slope=c_target,
        surrogate_quadratic=c_surrogate,
    )


def measure_gradient_lipschitz(loss: SmoothLoss, lo: float, hi: float, grid: int = 2000):
    """Measured smoothness modulus: the largest per-label gradient difference
    quotient over a fine grid of the interval (dim-1 surrogates)."""
    if loss.dim != 1:
        raise ValueError("measured smoothness implemented for 1-d surrogates")
    step = (hi - lo) / grid
    worst = 0.0
    for y in range(loss.num_labels):
        prev = loss.gradient(y, (lo,))[0]
        for k in range(1, grid + 1):
            u = lo + k * step
            g = loss.gradient(y, (u,))[0]
            worst = max(worst, abs(g - prev) / step)
            prev = g
    return worst


def check_envelope(rows, env: EnvelopeConstants, slack: float = 1e-10):
    """Rows below the lambda limit must satisfy the quadratic envelope.
    Returns (checked_count, violations)."""
    checked = 0
    violations = []
    for r in rows:
        if r.lam < env.lambda_limit:
            checked += 1
            bound = env.surrogate_quadratic * r.lam * r.lam + slack
            if r.surrogate_regret > bound:
                violations.append((r.lam, r.surrogate_regret, bound))
    return checked, violations
