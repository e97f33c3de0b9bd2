"""Universal eigenvalue inequalities: evaluation and bound extraction.

Every inequality has the shape ``sum g_i**2 <= RHS`` with gaps
``g_i = target - lam_i`` over a sorted prefix. Evaluation takes the prefix
plus the known next value; bound extraction finds the largest next value the
inequality admits.
"""
from __future__ import annotations

import enum
import math
from dataclasses import replace
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from . import kernels
from .core import (
    BoundMethod,
    BoundResult,
    DomainKind,
    InequalityReport,
    ProblemKind,
    ProblemSpec,
    RuleId,
    RuleParams,
    Spectrum,
    check_delta_seq,
    gap_moment,
    validate_spectrum,
)
from .errors import RuleError, ValidationError

ABS_TOL = 1e-9
REL_TOL_EXACT = 1e-12
REL_TOL_DISCRETE = 1e-6

BISECT_REL_WIDTH = 1e-12
MAX_DOUBLINGS = 200
DELTA_GRID = 64

QUADRATIC_RULES = frozenset(
    {RuleId.CY_EUCLID, RuleId.CY_IMPROVED, RuleId.CY_CONJECTURE, RuleId.COR12, RuleId.THM11, RuleId.SPHERE}
)
EUCLIDEAN_RULES = frozenset({RuleId.CY_EUCLID, RuleId.CY_IMPROVED, RuleId.CY_CONJECTURE})


class DeltaPolicy(str, enum.Enum):
    FIXED = "fixed"
    OPTIMIZE_UNIFORM = "optimize_uniform"


def theorem_constant(order: int) -> Fraction:
    """``2 l**2 - 11 l / 3 + 5 / 3``; equals 7/3 at l=2 and 26/3 at l=3."""
    return 2 * Fraction(order) ** 2 - Fraction(11, 3) * order + Fraction(5, 3)


def euclid_coefficient(rule: RuleId, n: int) -> Fraction:
    if rule is RuleId.CY_EUCLID:
        return Fraction(4 * (n + 2), n * n)
    if rule is RuleId.CY_IMPROVED:
        return 4 * (n + Fraction(4, 3)) / (n * n)
    if rule is RuleId.CY_CONJECTURE:
        return Fraction(4, n)
    raise ValueError(rule)


def _exponents(order: int):
    return Fraction(order - 2, order - 1), Fraction(1, order - 1)


def _clamped_exponents(order: int):
    return Fraction(order - 1, order), Fraction(1, order)


def _f(x: Fraction) -> float:
    return x.numerator / x.denominator


# -- applicability -----------------------------------------------------------


def check_applicable(rule: RuleId, problem: ProblemSpec) -> None:
    """Raise ``RULE_NOT_APPLICABLE`` unless ``rule`` is a theorem for ``problem``."""
    rule = RuleId(rule)
    if rule is RuleId.SPHERE:
        raise RuleError("RULE_NOT_APPLICABLE", "the sphere rule is evaluator-only; no spherical domains are solved")
    if rule is RuleId.THM31:
        if problem.kind is not ProblemKind.CLAMPED:
            raise RuleError("RULE_NOT_APPLICABLE", "thm31 concerns the clamped problem")
        return
    if problem.kind is not ProblemKind.BUCKLING:
        raise RuleError("RULE_NOT_APPLICABLE", f"{rule.value} concerns the buckling problem")
    if rule in EUCLIDEAN_RULES:
        if problem.order != 2 or problem.domain.kind is not DomainKind.RECTANGLE:
            raise RuleError("RULE_NOT_APPLICABLE", f"{rule.value} needs l=2 on a planar Euclidean domain")


def default_rules(problem: ProblemSpec) -> list[RuleId]:
    out = []
    for rule in RuleId:
        try:
            check_applicable(rule, problem)
        except RuleError:
            continue
        out.append(rule)
    return out


def _check_params(rule: RuleId, params: RuleParams, k: int | None) -> None:
    if rule in EUCLIDEAN_RULES or rule is RuleId.SPHERE:
        if params.order != 2:
            raise RuleError("RULE_NOT_APPLICABLE", f"{rule.value} holds for l=2 only")
        if params.n is None:
            raise RuleError("MISSING_PARAMETER", f"{rule.value} needs the dimension n")
    if rule is RuleId.SPHERE and params.delta is None:
        raise RuleError("MISSING_PARAMETER", "sphere rule needs delta")
    if rule is RuleId.THM11 and k is not None and params.delta_seq is not None:
        if len(params.delta_seq) < k:
            raise ValidationError("BAD_DELTA_SEQ", f"delta sequence has {len(params.delta_seq)} entries, need {k}")


# -- term weights ------------------------------------------------------------


def _quadratic_weights(rule: RuleId, params: RuleParams, lam: np.ndarray, deltas=None):
    """Per-index weights ``(a_i, b_i)`` with inequality ``sum a g**2 - sum b g <= 0``."""
    k = lam.size
    if rule in EUCLIDEAN_RULES:
        coef = _f(euclid_coefficient(rule, params.n))
        return np.ones(k), coef * lam
    if rule is RuleId.COR12:
        return np.ones(k), _f(4 * theorem_constant(params.order)) * lam
    if rule is RuleId.THM11:
        e1, e2 = _exponents(params.order)
        c = _f(theorem_constant(params.order))
        d = np.asarray(deltas, dtype=float)[:k]
        return 1.0 - c * d * lam ** _f(e1), lam ** _f(e2) / d
    if rule is RuleId.SPHERE:
        n, delta = params.n, params.delta
        w = delta * lam + delta**2 * (lam - (n - 2)) / (4.0 * (delta * lam + n - 2))
        return 2.0 - w, (lam + (n - 2) ** 2 / 4.0) / delta
    raise ValueError(rule)


def _sides(rule: RuleId, params: RuleParams, prefix: Sequence[float], target: float, deltas=None):
    """(lhs, rhs) of ``rule`` for the given prefix and next value."""
    lam = np.asarray(prefix, dtype=float)
    gaps = target - lam
    if rule is RuleId.THM31:
        e_hi, e_lo = _clamped_exponents(params.order)
        l = params.order
        lhs = gap_moment(lam, target, 2, 0)
        # the squared gap in the first factor makes both sides degree 2
        p = gap_moment(lam, target, 2, e_hi)
        q = gap_moment(lam, target, 1, e_lo)
        rhs = 2.0 * math.sqrt(l * (2 * l - 1) * max(p, 0.0)) * math.sqrt(max(q, 0.0))
        return lhs, rhs
    if rule is RuleId.SPHERE:
        a, b = _quadratic_weights(rule, params, lam)
        lhs = 2.0 * kernels.ordered_sum(gaps * gaps)
        rhs = kernels.ordered_sum((2.0 - a) * gaps * gaps) + kernels.ordered_sum(b * gaps)
        return lhs, rhs
    lhs = gap_moment(lam, target, 2, 0)
    if rule in EUCLIDEAN_RULES:
        return lhs, _f(euclid_coefficient(rule, params.n)) * gap_moment(lam, target, 1, 1)
    if rule is RuleId.COR12:
        return lhs, _f(4 * theorem_constant(params.order)) * gap_moment(lam, target, 1, 1)
    if rule is RuleId.THM11:
        e1, e2 = _exponents(params.order)
        c = _f(theorem_constant(params.order))
        d = np.asarray(deltas, dtype=float)[: lam.size]
        first = kernels.ordered_sum(d * gaps * gaps * lam ** _f(e1))
        second = kernels.ordered_sum(gaps * lam ** _f(e2) / d)
        return lhs, c * first + second
    raise ValueError(rule)


def _report(rule, k, lhs, rhs, rel_tol, abs_tol=ABS_TOL):
    slack = rhs - lhs
    tol = max(abs_tol, rel_tol * abs(rhs))
    return InequalityReport(
        rule=rule, k=k, lhs=lhs, rhs=rhs, slack=slack, holds=bool(slack >= -tol), tolerance=tol,
        conjecture=rule is RuleId.CY_CONJECTURE,
    )


# -- public operations -------------------------------------------------------


def closed_form_delta(prefix: Sequence[float], target: float, order: int) -> float:
    """Uniform delta minimizing the general-theorem right-hand side for a known next value.

    Raises ``DEGENERATE`` when every gap vanishes and the ratio is 0/0.
    """
    lam = validate_spectrum(prefix)
    e1, e2 = _exponents(order)
    num = gap_moment(lam, target, 1, e2)
    den = _f(theorem_constant(order)) * gap_moment(lam, target, 2, e1)
    if not (num > 0 and den > 0):
        raise RuleError("DEGENERATE", "all gaps vanish; the optimal delta is undefined")
    return math.sqrt(num) / math.sqrt(den)


def eval_rule(rule, params: RuleParams, values: Sequence[float], *, problem: ProblemSpec | None = None,
              rel_tol: float = REL_TOL_EXACT, abs_tol: float = ABS_TOL) -> InequalityReport:
    """Evaluate ``rule`` at k = len(values) - 1 with the last value as the target.

    For the general theorem without an explicit ``delta_seq`` the closed-form
    uniform delta is used (it minimizes the right-hand side).
    """
    rule = RuleId(rule)
    vals = validate_spectrum(values)
    if len(vals) < 2:
        raise ValidationError("INSUFFICIENT_VALUES", "need at least two values")
    if problem is not None:
        check_applicable(rule, problem)
        if problem.order != params.order:
            raise RuleError("RULE_NOT_APPLICABLE", f"params order {params.order} != problem order {problem.order}")
        if rule in EUCLIDEAN_RULES and params.n not in (None, 2):
            raise RuleError("RULE_NOT_APPLICABLE", f"planar domain has n=2, params say n={params.n}")
    k = len(vals) - 1
    _check_params(rule, params, k)
    prefix, target = vals[:k], vals[k]
    deltas = None
    if rule is RuleId.THM11:
        if params.delta_seq is not None:
            deltas = params.delta_seq[:k]
        else:
            try:
                deltas = [closed_form_delta(prefix, target, params.order)] * k
            except RuleError:
                deltas = [1.0] * k
    lhs, rhs = _sides(rule, params, prefix, target, deltas)
    return _report(rule, k, lhs, rhs, rel_tol, abs_tol)


def chebyshev_check(values: Sequence[float], order: int, rel_tol: float = REL_TOL_EXACT) -> InequalityReport:
    """Both sides of the weighted Chebyshev-sum step relating the theorem to its corollary.

    lhs = (sum g**2 lam**((l-2)/(l-1))) * (sum g lam**(1/(l-1)))
    rhs = (sum g**2) * (sum g lam)
    """
    vals = validate_spectrum(values)
    if len(vals) < 2:
        raise ValidationError("INSUFFICIENT_VALUES", "need at least two values")
    if order < 2:
        raise ValidationError("INVALID_ORDER", f"order must be >= 2, got {order}")
    prefix, target = vals[:-1], vals[-1]
    e1, e2 = _exponents(order)
    lhs = gap_moment(prefix, target, 2, e1) * gap_moment(prefix, target, 1, e2)
    rhs = gap_moment(prefix, target, 2, 0) * gap_moment(prefix, target, 1, 1)
    return _report(RuleId.COR12, len(prefix), lhs, rhs, rel_tol, abs_tol=0.0)


def _largest_root(a: float, b: float, c: float):
    """Largest real root of ``a x**2 + b x + c`` (a > 0), cancellation-free; None if none."""
    disc = b * b - 4.0 * a * c
    if disc < 0:
        return None
    sq = math.sqrt(disc)
    q = -0.5 * (b + math.copysign(sq, b))
    roots = [q / a]
    if q != 0:
        roots.append(c / q)
    return max(roots)


def _quadratic_bound(rule, params, lam: np.ndarray, deltas=None):
    """Largest admissible next value via the quadratic in ``x = target - lam_k``."""
    a, b = _quadratic_weights(rule, params, lam, deltas)
    d = lam[-1] - lam
    A = kernels.ordered_sum(a)
    if not A > 0:
        return math.inf, None
    B = 2.0 * kernels.ordered_sum(a * d) - kernels.ordered_sum(b)
    C = kernels.ordered_sum(a * d * d) - kernels.ordered_sum(b * d)
    x = _largest_root(A, B, C)
    return x, (A, B, C)


def _finish(rule, k, lam_k, x, residual_fn, method, delta=None):
    if x is None or x < -1e-12 * lam_k:
        raise RuleError("INCONSISTENT_PREFIX", "no value at or above the last eigenvalue satisfies the inequality")
    bound = float(lam_k + max(x, 0.0))
    return BoundResult(rule=rule, k=k, bound=bound, method=method, residual=float(residual_fn(bound)),
                       delta=delta)


def _feasible_offset(residual, lam_k: float):
    """Some x >= 0 with residual(lam_k + x) <= 0, or None if there is none.

    The residual is convex, so when it is positive at lam_k the feasible set
    (if any) lies past its minimum; search for that minimum over growing windows.
    """
    if residual(lam_k) <= 0:
        return 0.0
    width = lam_k
    for _ in range(MAX_DOUBLINGS):
        res = minimize_scalar(lambda x: residual(lam_k + x), bounds=(0.0, width), method="bounded",
                              options={"xatol": 1e-13 * width})
        if res.fun <= 0:
            return float(res.x)
        if res.x < 0.9 * width:
            return None
        width *= 2.0
    return None


def _bisect(residual, lam_k: float):
    """Largest ``t >= lam_k`` with residual(t) <= 0 for a residual convex in t.

    Returns the offset ``t - lam_k``, ``None`` if no such t, ``inf`` if unbounded.
    """
    x0 = _feasible_offset(residual, lam_k)
    if x0 is None:
        return None
    width = lam_k
    for _ in range(MAX_DOUBLINGS):
        if residual(lam_k + x0 + width) > 0:
            break
        width *= 2.0
    else:
        return math.inf
    lo, hi = x0, x0 + width
    while hi - lo > BISECT_REL_WIDTH * (lam_k + hi):
        mid = 0.5 * (lo + hi)
        if residual(lam_k + mid) > 0:
            hi = mid
        else:
            lo = mid
    return lo


def _thm11_uniform(params: RuleParams, lam: np.ndarray):
    """Minimize the fixed-delta quadratic bound over a uniform delta."""
    k = lam.size
    e1, _ = _exponents(params.order)
    c = _f(theorem_constant(params.order))
    delta_max = k / (c * kernels.ordered_sum(lam ** _f(e1)))

    def gap_for(delta):
        x, _ = _quadratic_bound(RuleId.THM11, params, lam, [delta] * k)
        return math.inf if x is None else x

    grid = delta_max * np.geomspace(1e-8, 1.0 - 1e-9, DELTA_GRID)
    vals = [gap_for(dl) for dl in grid]
    i = int(np.argmin(vals))
    if 0 < i < DELTA_GRID - 1:
        res = minimize_scalar(gap_for, bracket=(grid[i - 1], grid[i], grid[i + 1]), method="golden",
                              options={"xtol": 1e-12})
    else:
        lo = grid[max(i - 1, 0)] if i > 0 else 0.0
        hi = grid[min(i + 1, DELTA_GRID - 1)]
        res = minimize_scalar(gap_for, bounds=(lo, hi), method="bounded", options={"xatol": 1e-14 * hi})
    if res.fun <= vals[i]:
        return float(res.fun), float(res.x)
    return float(vals[i]), float(grid[i])


def bound_from_rule(rule, params: RuleParams, values: Sequence[float],
                    delta_policy: DeltaPolicy = DeltaPolicy.FIXED, *,
                    problem: ProblemSpec | None = None, method: BoundMethod | None = None) -> BoundResult:
    """Largest value of eigenvalue k+1 allowed by ``rule`` given eigenvalues 1..k.

    Quadratic rules use the closed-form root unless ``method`` forces
    bisection; the clamped rule always bisects. A ``+inf`` bound means the
    inequality never binds. Raises ``UNBOUNDED_FOR_DELTA`` when a fixed delta
    makes the inequality vacuous.
    """
    rule = RuleId(rule)
    delta_policy = DeltaPolicy(delta_policy)
    lam = np.asarray(validate_spectrum(values), dtype=float)
    k = lam.size
    if problem is not None:
        check_applicable(rule, problem)
    _check_params(rule, params, k)
    lam_k = float(lam[-1])

    deltas = None
    if rule is RuleId.THM11:
        if delta_policy is DeltaPolicy.OPTIMIZE_UNIFORM:
            x, delta = _thm11_uniform(params, lam)
            deltas = [delta] * k
            if method is not BoundMethod.BISECTION:
                return _finish(rule, k, lam_k, x, _residual_fn(rule, params, lam, deltas),
                               BoundMethod.CLOSED_FORM_QUADRATIC, delta)
        else:
            if params.delta_seq is None:
                raise ValidationError("BAD_DELTA_SEQ", "fixed delta policy needs a delta sequence")
            deltas = params.delta_seq[:k]
            check_delta_seq(deltas)
    residual = _residual_fn(rule, params, lam, deltas)

    if rule in QUADRATIC_RULES:
        a, _ = _quadratic_weights(rule, params, lam, deltas)
        if not kernels.ordered_sum(a) > 0:
            raise RuleError("UNBOUNDED_FOR_DELTA", "leading coefficient is not positive; the inequality never binds")
    if rule in QUADRATIC_RULES and method is not BoundMethod.BISECTION:
        x, _ = _quadratic_bound(rule, params, lam, deltas)
        return _finish(rule, k, lam_k, x, residual, BoundMethod.CLOSED_FORM_QUADRATIC,
                       deltas[0] if deltas is not None else None)

    x = _bisect(residual, lam_k)
    if x is not None and math.isinf(x):
        return BoundResult(rule=rule, k=k, bound=math.inf, method=BoundMethod.BISECTION, residual=math.nan)
    return _finish(rule, k, lam_k, x, residual, BoundMethod.BISECTION,
                   deltas[0] if deltas is not None else None)


def _residual_fn(rule, params, lam, deltas):
    def residual(t):
        lhs, rhs = _sides(rule, params, lam, t, deltas)
        return lhs - rhs

    return residual


def verify_spectrum(spectrum, rules: Iterable, k_max: int, params: RuleParams | None = None,
                    rel_tol: float | None = None) -> list[InequalityReport]:
    """One report per (rule, k) for k = 1..k_max.

    ``spectrum`` may be a :class:`Spectrum` (solver output, checked for rule
    applicability, discretization headroom 1e-6) or a plain sequence of
    values (synthetic input, tolerance 1e-12).
    """
    if isinstance(spectrum, Spectrum):
        values = list(spectrum.values)
        problem = spectrum.problem
        tol = REL_TOL_DISCRETE if rel_tol is None else rel_tol
    else:
        values = validate_spectrum(spectrum)
        problem = None
        tol = REL_TOL_EXACT if rel_tol is None else rel_tol
    if k_max < 1:
        raise ValidationError("BAD_K", "k_max must be >= 1")
    if len(values) < k_max + 1:
        raise ValidationError("INSUFFICIENT_VALUES", f"need {k_max + 1} values, have {len(values)}")
    if params is None:
        params = RuleParams(order=problem.order if problem else 2)
    if problem is not None and problem.domain.kind is DomainKind.RECTANGLE and params.n is None:
        params = replace(params, n=2)
    rules = [RuleId(r) for r in rules]
    if problem is not None:
        for rule in rules:
            check_applicable(rule, problem)
    reports = []
    for rule in rules:
        for k in range(1, k_max + 1):
            reports.append(eval_rule(rule, params, values[: k + 1], problem=problem, rel_tol=tol))
    return reports
