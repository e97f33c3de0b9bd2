import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from buckspec.core import BoundMethod, DomainSpec, ProblemSpec, RuleId, RuleParams, Spectrum
from buckspec.errors import RuleError, ValidationError
from buckspec.inequalities import (
    DeltaPolicy,
    bound_from_rule,
    chebyshev_check,
    check_applicable,
    closed_form_delta,
    eval_rule,
    theorem_constant,
    verify_spectrum,
)
from oracles import rod_buckling_eigenvalues

P = RuleParams


def C(l):
    return 2 * l * l - 11 * l / 3 + 5 / 3


def test_theorem_constant():
    assert theorem_constant(2) == pytest.approx(7 / 3) and theorem_constant(3) == pytest.approx(26 / 3)
    for l in range(2, 9):
        assert float(theorem_constant(l)) == pytest.approx(C(l), rel=1e-15)


# -- eval_rule ----------------------------------------------------------------


def test_cor12_equal_values():
    r = eval_rule("cor12", P(2), [1, 1, 1, 2])
    assert (r.lhs, r.rhs, r.slack, r.holds) == (3.0, pytest.approx(28.0), pytest.approx(25.0), True)


def test_cy_euclid_fails_on_impossible_pair():
    r = eval_rule("cy-euclid", P(2, n=2), [1, 6])
    assert (r.lhs, r.rhs, r.slack, r.holds) == (25.0, 20.0, -5.0, False)


def test_thm31_equality_point():
    # k = 1: the rule reduces to gam_2 <= (1 + 4 l (2l - 1)) gam_1
    r = eval_rule("thm31", P(2), [1.0, 25.0])
    assert (r.lhs, r.rhs) == (576.0, pytest.approx(576.0, rel=1e-14))
    assert abs(r.slack) < 1e-9 and r.holds


def test_thm31_literal_unsquared_form_fails_on_rod():
    # Without the squared gap in the first factor the rule would cap the
    # clamped rod at gam_1 + 2 sqrt(6 gam_1); the true second value is ~7.6 gam_1.
    from oracles import rod_clamped_eigenvalues
    g1, g2 = rod_clamped_eigenvalues(2)
    assert g2 > g1 + 2 * math.sqrt(6 * g1)
    assert eval_rule("thm31", P(2), [g1, g2]).holds


def _sphere_oracle(values, n, delta):
    *pre, t = values
    lhs = 2 * sum((t - v) ** 2 for v in pre)
    rhs = sum((t - v) ** 2 * (delta * v + delta**2 * (v - (n - 2)) / (4 * (delta * v + n - 2))) for v in pre)
    rhs += sum((t - v) * (v + (n - 2) ** 2 / 4) for v in pre) / delta
    return lhs, rhs


def test_sphere_evaluation():
    values, n, delta = [2.0, 3.5, 7.0], 3, 0.4
    r = eval_rule("sphere", P(2, n=n, delta=delta), values)
    lhs, rhs = _sphere_oracle(values, n, delta)
    assert r.lhs == pytest.approx(lhs, rel=1e-14) and r.rhs == pytest.approx(rhs, rel=1e-14)


def test_thm11_explicit_sequence():
    values, seq = [1.0, 2.0, 5.0], (0.5, 0.2)
    r = eval_rule("thm11", P(3, delta_seq=seq), values)
    c = C(3)
    rhs = sum(c * d * (5 - v) ** 2 * v ** 0.5 + (5 - v) * v ** 0.5 / d for d, v in zip(seq, values[:2]))
    assert r.rhs == pytest.approx(rhs, rel=1e-14)


def test_conjecture_flagged():
    r = eval_rule("cy-conjecture", P(2, n=2), [1, 2, 3])
    assert r.conjecture and not eval_rule("cy-improved", P(2, n=2), [1, 2, 3]).conjecture


@pytest.mark.parametrize("rule, params, prob", [
    ("cy-euclid", P(2, n=2), ProblemSpec(2, "buckling", DomainSpec("interval", (1,)))),
    ("cy-euclid", P(3, n=2), ProblemSpec(3, "buckling", DomainSpec("rectangle", (1, 1)))),
    ("thm31", P(2), ProblemSpec(2, "buckling", DomainSpec("interval", (1,)))),
    ("cor12", P(2), ProblemSpec(2, "clamped", DomainSpec("interval", (1,)))),
    ("sphere", P(2, n=3, delta=1.0), ProblemSpec(2, "buckling", DomainSpec("rectangle", (1, 1)))),
])
def test_not_applicable(rule, params, prob):
    with pytest.raises(RuleError) as exc:
        eval_rule(rule, params, [1, 2], problem=prob)
    assert exc.value.code == "RULE_NOT_APPLICABLE"


def test_euclid_rules_need_l2():
    with pytest.raises(RuleError):
        eval_rule("cy-improved", P(3, n=2), [1, 2])


def test_bad_delta_seq():
    with pytest.raises(ValidationError) as exc:
        eval_rule("thm11", P(2, delta_seq=(1.0,)), [1, 2, 3])
    assert exc.value.code == "BAD_DELTA_SEQ"


# -- chebyshev ----------------------------------------------------------------


def test_chebyshev_constant_sequence():
    r = chebyshev_check([3.0] * 5, 4)
    assert r.lhs == r.rhs == 0.0 and r.holds


def test_chebyshev_l2_identical_sides():
    r = chebyshev_check([1.0, 2.5, 4.0, 9.0], 2)
    assert r.slack == 0.0


def test_chebyshev_l3_strict():
    values = [1.0, 4.0, 9.0, 16.0]
    r = chebyshev_check(values, 3)
    g = [16 - v for v in values[:3]]
    lhs = sum(x * x * v ** 0.5 for x, v in zip(g, values)) * sum(x * v ** 0.5 for x, v in zip(g, values))
    rhs = sum(x * x for x in g) * sum(x * v for x, v in zip(g, values))
    assert (r.lhs, r.rhs) == (pytest.approx(lhs, rel=1e-14), pytest.approx(rhs, rel=1e-14))
    assert (lhs, rhs) == (39600.0, 52668.0)
    assert r.slack > 0 and r.holds


# -- closed-form delta --------------------------------------------------------


def test_closed_form_delta_examples():
    assert closed_form_delta([1.0], 2.0, 2) == pytest.approx(math.sqrt(3 / 7), rel=1e-15)
    for l in (2, 3, 5):
        assert closed_form_delta([1.0], 4.0, l) == pytest.approx(1 / math.sqrt(3 * C(l)), rel=1e-14)
    assert closed_form_delta([1.0, 2.0], 3.0, 2) == pytest.approx(2 / math.sqrt(35 / 3), rel=1e-14)


@pytest.mark.parametrize("values, target, l", [([1.0, 2.0], 3.0, 2), ([1.0, 1.5, 4.0], 6.0, 3), ([2.0, 3.0], 3.5, 4)])
def test_closed_form_delta_minimizes_rhs(values, target, l):
    deltas = np.geomspace(1e-3, 1e2, 200001)
    e1, e2 = (l - 2) / (l - 1), 1 / (l - 1)
    g = np.array([target - v for v in values])
    lam = np.array(values)
    s2 = np.sum(g * g * lam**e1)
    s1 = np.sum(g * lam**e2)
    rhs = C(l) * deltas * s2 + s1 / deltas
    best = deltas[np.argmin(rhs)]
    assert closed_form_delta(values, target, l) == pytest.approx(best, rel=1e-4)


def test_closed_form_delta_degenerate():
    with pytest.raises(RuleError) as exc:
        closed_form_delta([2.0, 2.0], 2.0, 2)
    assert exc.value.code == "DEGENERATE"


# -- bound extraction ---------------------------------------------------------


def test_cor12_k1_bounds():
    assert bound_from_rule("cor12", P(2), [1.0]).bound == pytest.approx(31 / 3, rel=1e-15)
    assert bound_from_rule("cor12", P(3), [1.0]).bound == pytest.approx(107 / 3, rel=1e-15)


def test_cor12_two_values_against_scan():
    # brute force: sign change of F on a 1e-6 grid, then refine
    grid = np.arange(2.0, 20.0, 1e-6)
    F = (grid - 1) ** 2 + (grid - 2) ** 2 - 28 / 3 * ((grid - 1) * 1 + (grid - 2) * 2)
    i = np.nonzero(F <= 0)[0][-1]
    lo, hi = grid[i], grid[i + 1]
    f = lambda x: 2 * x * x - 34 * x + 155 / 3
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        lo, hi = (mid, hi) if f(mid) <= 0 else (lo, mid)
    res = bound_from_rule("cor12", P(2), [1.0, 2.0])
    assert res.method is BoundMethod.CLOSED_FORM_QUADRATIC
    assert res.bound == pytest.approx(lo, abs=1e-6)
    assert res.bound == pytest.approx(15.3130, abs=1e-4)


def test_thm11_k1_optimizer():
    res = bound_from_rule("thm11", P(2), [1.0], DeltaPolicy.OPTIMIZE_UNIFORM)
    assert res.delta == pytest.approx(3 / 14, rel=1e-6)
    assert res.bound == pytest.approx(31 / 3, rel=1e-12)


def test_thm11_fixed_delta_is_quadratic_root():
    values, seq = [1.0, 2.0], (0.1, 0.1)
    res = bound_from_rule("thm11", P(2, delta_seq=seq), values, DeltaPolicy.FIXED)
    assert eval_rule("thm11", P(2, delta_seq=seq), values + [res.bound]).slack == pytest.approx(0.0, abs=1e-9)
    assert abs(res.residual) < 1e-9 * res.bound**2


def test_thm11_fixed_delta_unbounded():
    with pytest.raises(RuleError) as exc:
        bound_from_rule("thm11", P(2, delta_seq=(1.0,)), [1.0], DeltaPolicy.FIXED)
    assert exc.value.code == "UNBOUNDED_FOR_DELTA"


def test_thm11_fixed_needs_sequence():
    with pytest.raises(ValidationError):
        bound_from_rule("thm11", P(2), [1.0], DeltaPolicy.FIXED)


def test_inconsistent_prefix():
    values = [1.0] * 10 + [1000.0]
    for method in (None, BoundMethod.BISECTION):
        with pytest.raises(RuleError) as exc:
            bound_from_rule("cor12", P(2), values, method=method)
        assert exc.value.code == "INCONSISTENT_PREFIX"


def test_feasible_interval_above_last_value():
    # F(100) > 0, yet larger values satisfy the inequality: the bound is the upper root
    q = bound_from_rule("cor12", P(2), [1.0, 100.0])
    b = bound_from_rule("cor12", P(2), [1.0, 100.0], method=BoundMethod.BISECTION)
    assert eval_rule("cor12", P(2), [1.0, 100.0, 100.0]).slack < 0
    assert q.bound > 100 and b.bound == pytest.approx(q.bound, rel=1e-10)
    assert eval_rule("cor12", P(2), [1.0, 100.0, q.bound]).slack == pytest.approx(0.0, abs=1e-8 * q.bound**2)


def test_thm31_k1_closed_form():
    for l in (2, 3, 4):
        for g1 in (1.0, 7.5):
            res = bound_from_rule("thm31", P(l), [g1])
            assert res.method is BoundMethod.BISECTION
            assert res.bound == pytest.approx((1 + 4 * l * (2 * l - 1)) * g1, rel=1e-11)


def test_sphere_bound_satisfies_equality():
    params = P(2, n=3, delta=0.05)
    res = bound_from_rule("sphere", params, [2.0, 6.0])
    assert eval_rule("sphere", params, [2.0, 6.0, res.bound]).slack == pytest.approx(0.0, abs=1e-8 * res.bound**2)


def test_bound_respects_applicability():
    prob = ProblemSpec(2, "clamped", DomainSpec("interval", (1,)))
    with pytest.raises(RuleError):
        bound_from_rule("cor12", P(2), [1.0], problem=prob)


# -- properties ----------------------------------------------------------------

prefixes = st.lists(st.floats(1.0, 2.0), min_size=1, max_size=25).map(sorted)


@settings(max_examples=60, deadline=None)
@given(prefixes, st.sampled_from([2, 3, 4, 6]))
def test_dominance(values, l):
    thm = bound_from_rule("thm11", P(l), values, DeltaPolicy.OPTIMIZE_UNIFORM).bound
    cor = bound_from_rule("cor12", P(l), values).bound
    assert thm <= cor * (1 + 1e-9)


@given(st.floats(1e-3, 1e5), st.integers(2, 9))
def test_k1_collapse(lam1, l):
    expected = (1 + 4 * float(theorem_constant(l))) * lam1
    assert bound_from_rule("cor12", P(l), [lam1]).bound == pytest.approx(expected, rel=1e-12)
    assert bound_from_rule("thm11", P(l), [lam1], DeltaPolicy.OPTIMIZE_UNIFORM).bound == pytest.approx(expected, rel=1e-12)


@settings(max_examples=60)
@given(prefixes)
def test_rule_ordering_l2_n2(values):
    p = P(2, n=2)
    b = [bound_from_rule(r, p, values).bound for r in ("cy-conjecture", "cy-improved", "cy-euclid", "cor12")]
    assert b[0] <= b[1] <= b[2] <= b[3]


@settings(max_examples=60, deadline=None)
@given(prefixes, st.sampled_from([0.01, 0.5, 3.0, 1e4]),
       st.sampled_from(["cy-euclid", "cy-improved", "cy-conjecture", "cor12", "thm11", "thm31"]))
def test_scale_covariance(values, c, rule):
    l = 2 if rule.startswith("cy") else 3
    policy = DeltaPolicy.OPTIMIZE_UNIFORM
    base = bound_from_rule(rule, P(l, n=2), values, policy).bound
    scaled = bound_from_rule(rule, P(l, n=2), [c * v for v in values], policy).bound
    assert scaled == pytest.approx(c * base, rel=1e-10)


@settings(max_examples=60)
@given(prefixes, st.sampled_from(["cy-euclid", "cy-improved", "cy-conjecture", "cor12"]), st.sampled_from([2, 3]))
def test_bisection_agrees_with_quadratic(values, rule, l):
    p = P(2 if rule.startswith("cy") else l, n=2)
    q = bound_from_rule(rule, p, values).bound
    b = bound_from_rule(rule, p, values, method=BoundMethod.BISECTION).bound
    assert b == pytest.approx(q, rel=1e-9)


def test_chebyshev_randomized():
    rng = np.random.default_rng(20261016)
    for l in (2, 3, 4, 7):
        for _ in range(250):
            values = np.sort(10 ** rng.uniform(-2, 4, rng.integers(2, 31)))
            r = chebyshev_check(values, l)
            assert r.slack >= -1e-12 * r.rhs


# -- verify_spectrum ------------------------------------------------------------


def test_verify_rod_oracle():
    rod = rod_buckling_eigenvalues(5)
    reports = verify_spectrum(rod, ["cor12"], 4, P(2))
    assert len(reports) == 4 and all(r.holds for r in reports)


def test_verify_constant_spectrum():
    for rule, params in [("cor12", P(2)), ("thm11", P(3)), ("cy-euclid", P(2, n=2)), ("thm31", P(2)),
                         ("sphere", P(2, n=3, delta=0.5))]:
        for r in verify_spectrum([1.0] * 4, [rule], 3, params):
            assert r.holds and r.slack == r.rhs == 0.0


def test_verify_insufficient():
    with pytest.raises(ValidationError) as exc:
        verify_spectrum([1.0, 2.0, 3.0], ["cor12"], 5)
    assert exc.value.code == "INSUFFICIENT_VALUES"


def test_verify_checks_applicability():
    prob = ProblemSpec(2, "clamped", DomainSpec("interval", (1,)))
    spec = Spectrum(prob, (1.0, 2.0), (0.0, 0.0))
    with pytest.raises(RuleError):
        verify_spectrum(spec, ["cor12"], 1)
    assert verify_spectrum(spec, ["thm31"], 1)[0].tolerance == pytest.approx(max(1e-9, 1e-6 * verify_spectrum(spec, ["thm31"], 1)[0].rhs))


def test_check_applicable_rectangle_accepts_cy():
    check_applicable(RuleId.CY_IMPROVED, ProblemSpec(2, "buckling", DomainSpec("rectangle", (2, 1))))
