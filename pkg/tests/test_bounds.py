"""Bound evaluators against independent brute-force recomputation."""

import itertools
import math

import numpy as np
import pytest

from consensus_lab.bounds import (
    BoundQuery,
    WindowTooLargeError,
    conditions_report,
    interval_min_product,
    interval_min_value,
    sufficient_condition,
    tcom_lower_bound,
    tcom_upper_arc_independent,
    tcom_upper_bidirectional_joint,
    tcom_upper_connectivity_independent,
    tcom_upper_uniform_joint,
    window_min_product,
)
from consensus_lab.schedules import (
    ConstantSchedule,
    ExplicitSchedule,
    GeometricSchedule,
    PowerDecaySchedule,
    UnsupportedQueryError,
)


def query(**kw):
    base = dict(n=2, epsilon=0.1, schedule=ConstantSchedule(0.5), eta=0.5)
    base.update(kw)
    return BoundQuery(**base)


# ---------------------------------------------------------------------------
# lower bound


def test_lower_bound_frozen_schedule_unbounded():
    res = tcom_lower_bound(query(schedule=ConstantSchedule(0.0), search_cap=5000))
    assert res.unbounded
    assert res.to_json()["bound"] == "unbounded-within-cap"


def test_lower_bound_hand_value():
    # log 2 <= log(10)/3 but 2 log 2 is too big
    res = tcom_lower_bound(query(n=3, epsilon=0.1, eta=1 / 3))
    assert res.value == 1


def test_lower_bound_lenient_epsilon_small():
    res = tcom_lower_bound(query(n=3, epsilon=0.99, eta=1 / 3))
    assert res.value <= 1


def test_lower_bound_direct_recomputation():
    sched = PowerDecaySchedule(c=0.8, beta=0.7, cap=0.9)
    qy = query(n=4, epsilon=0.05, schedule=sched, eta=0.25)
    res = tcom_lower_bound(qy)
    k = res.value
    thr = math.log(1 / 0.05) / 4
    s_k = math.fsum(-math.log1p(-sched.value(i)) for i in range(k))
    s_k1 = s_k - math.log1p(-sched.value(k))
    assert s_k <= thr < s_k1
    assert res.audit["partial_sum"] == pytest.approx(s_k, rel=1e-12)


# ---------------------------------------------------------------------------
# connectivity-independent upper bound


def test_upper_connectivity_independent_hand_value():
    res = tcom_upper_connectivity_independent(query(q=0.5))
    assert res.value == 72


def test_upper_connectivity_independent_requires_q():
    with pytest.raises(ValueError, match="'q'"):
        tcom_upper_connectivity_independent(query())


def test_upper_connectivity_independent_requires_monotone_schedule():
    with pytest.raises(ValueError, match="non-increasing"):
        tcom_upper_connectivity_independent(query(q=0.5, schedule=ExplicitSchedule((0.1, 0.9))))


def test_upper_connectivity_independent_convergent_schedule_unbounded():
    # sum P_k^{n-1} finite -> the defining sum stalls
    res = tcom_upper_connectivity_independent(
        query(n=3, q=0.5, schedule=PowerDecaySchedule(c=0.5, beta=1.0), search_cap=50_000)
    )
    assert res.unbounded


def test_upper_connectivity_independent_direct_recomputation():
    sched = PowerDecaySchedule(c=0.9, beta=0.2, cap=0.9)
    qy = query(n=3, epsilon=0.2, schedule=sched, eta=0.3, q=0.6)
    res = tcom_upper_connectivity_independent(qy)
    span = 4
    coef = (0.6 * 0.3) ** span / 2
    m = res.value // span
    terms = [-math.log1p(-coef * sched.value((i + 1) * span) ** 2) for i in range(m)]
    assert math.fsum(terms) >= 2 * math.log(1 / 0.2)
    assert math.fsum(terms[:-1]) < 2 * math.log(1 / 0.2)


# ---------------------------------------------------------------------------
# window products


def test_window_min_product_singleton_window():
    sched = ExplicitSchedule((0.9, 0.8, 0.7), tail=0.5)
    # n=2, B=1: window s holds the single index s
    for s in range(3):
        assert window_min_product(sched, 2, 1, s) == sched.value(s)


def test_window_min_product_hand_value():
    sched = ExplicitSchedule((0.9, 0.8, 0.7, 0.6), tail=0.5)
    assert window_min_product(sched, 3, 1, 0) == pytest.approx(0.42)


def test_window_min_product_constant():
    assert window_min_product(ConstantSchedule(0.3), 4, 2, 1) == pytest.approx(0.3**3)


def test_window_min_product_matches_subset_brute_force():
    gen = np.random.default_rng(99)
    for _ in range(40):
        n = int(gen.integers(2, 5))
        B = int(gen.integers(1, 3))
        span = (n - 1) ** 2 * B
        if span > 12:
            continue
        probs = tuple(gen.random(2 * span) * 0.9)
        sched = ExplicitSchedule(probs, tail=0.1)
        for s in (0, 1):
            window = range(s * span, (s + 1) * span)
            brute = min(
                np.prod([sched.value(i) for i in combo])
                for combo in itertools.combinations(window, n - 1)
            )
            assert window_min_product(sched, n, B, s) == pytest.approx(brute, rel=1e-12)


def test_window_min_product_monotone_shortcut_for_non_increasing():
    sched = PowerDecaySchedule(c=0.9, beta=0.4, cap=0.9)
    n, B, s = 3, 2, 1
    span = (n - 1) ** 2 * B
    last = [sched.value(i) for i in range((s + 1) * span - (n - 1), (s + 1) * span)]
    assert window_min_product(sched, n, B, s) == pytest.approx(float(np.prod(last)), rel=1e-12)


# ---------------------------------------------------------------------------
# uniform-joint upper bound


def test_upper_uniform_joint_b1_matches_connectivity_independent_on_constant():
    # constant schedules: window infimum equals the shifted value
    qy = query(n=3, q=0.4, B=1, eta=0.3, schedule=ConstantSchedule(0.5))
    a = tcom_upper_uniform_joint(qy)
    b = tcom_upper_connectivity_independent(qy)
    assert a.value == b.value


def test_upper_uniform_joint_requires_params():
    with pytest.raises(ValueError, match="'q'"):
        tcom_upper_uniform_joint(query(B=2))
    with pytest.raises(ValueError, match="'B'"):
        tcom_upper_uniform_joint(query(q=0.5))


def test_upper_uniform_joint_closed_form_constant():
    p, q, eta, n, B, eps = 0.5, 0.5, 0.5, 2, 3, 0.1
    res = tcom_upper_uniform_joint(query(n=n, q=q, B=B, eta=eta, epsilon=eps))
    coef = (q * eta) ** 1 / 2
    per_term = -math.log1p(-coef * p)
    m = math.ceil(2 * math.log(1 / eps) / per_term)
    assert res.value == m * (n - 1) ** 2 * B


# ---------------------------------------------------------------------------
# bidirectional-joint upper bound


def test_interval_min_product_unit_intervals():
    ends = tuple(range(0, 50))
    sched = ExplicitSchedule(tuple([0.9, 0.8, 0.7, 0.6] * 10), tail=0.5)
    # n=2: window s is the single interval [C_s, C_{s+1}) = {s}
    for s in range(4):
        assert interval_min_product(sched, 2, ends, s) == sched.value(s)


def test_interval_min_product_window_too_large():
    with pytest.raises(WindowTooLargeError):
        interval_min_product(ConstantSchedule(0.5), 2, (0, 20_000), 0)


def test_upper_bidirectional_joint_constant_closed_form():
    n, q, eta, eps, p = 2, 0.5, 0.5, 0.1, 0.5
    ends = tuple(range(0, 4000))
    res = tcom_upper_bidirectional_joint(query(n=n, q=q, eta=eta, epsilon=eps, interval_ends=ends))
    coef = (q * eta) ** (n - 1)
    per_term = -math.log1p(-coef * p)
    s = math.ceil(2 * math.log(1 / eps) / per_term)
    assert res.value == ends[s * (n - 1)]


def test_upper_bidirectional_joint_exhausted_ends():
    res = tcom_upper_bidirectional_joint(query(q=0.5, interval_ends=(0, 1, 2)))
    assert res.unbounded
    assert res.audit.get("interval_ends_exhausted")


def test_upper_bidirectional_joint_requires_interval_ends():
    with pytest.raises(ValueError, match="interval_ends"):
        tcom_upper_bidirectional_joint(query(q=0.5))


def test_interval_min_value():
    sched = ExplicitSchedule((0.5, 0.9, 0.1), tail=0.3)
    assert interval_min_value(sched, (0, 3, 5), 0) == pytest.approx(0.1)
    assert interval_min_value(ConstantSchedule(0.4), (0, 3, 5), 1) == pytest.approx(0.4)
    # non-increasing schedule: minimum sits at the right end
    sched2 = PowerDecaySchedule(c=0.9, beta=1.0, cap=0.9)
    assert interval_min_value(sched2, (0, 4), 0) == sched2.value(3)


# ---------------------------------------------------------------------------
# arc-independent upper bound


def test_upper_arc_independent_hand_value():
    res = tcom_upper_arc_independent(query(theta0=1.0, basic_arc_count=2))
    assert res.value == 222


def test_upper_arc_independent_direct_recomputation():
    # independent recomputation at higher precision via fsum
    n, eta, theta0, e_star, eps, p = 2, 0.5, 1.0, 2, 0.1, 0.5
    e0 = (n - 1) * e_star
    a_const = 1 - (eta * theta0 / n) ** e0
    rhs = e0 / math.log(a_const) * math.log(a_const * eps**2 / n)
    assert rhs == pytest.approx(166.1809, abs=2e-3)
    k = math.ceil(rhs / (1 - (1 - p) ** n))
    assert k == 222


def test_upper_arc_independent_frozen_unbounded():
    res = tcom_upper_arc_independent(
        query(schedule=ConstantSchedule(0.0), theta0=1.0, basic_arc_count=2, search_cap=10_000)
    )
    assert res.unbounded


def test_upper_arc_independent_requires_params():
    with pytest.raises(ValueError, match="theta0"):
        tcom_upper_arc_independent(query(basic_arc_count=2))
    with pytest.raises(ValueError, match="basic_arc_count"):
        tcom_upper_arc_independent(query(theta0=0.5))


def test_upper_arc_independent_finite_even_near_one_epsilon():
    vals = []
    for eps in (0.2, 0.5, 0.9, 0.99):
        res = tcom_upper_arc_independent(query(epsilon=eps, theta0=1.0, basic_arc_count=2))
        assert res.value is not None
        vals.append(res.value)
    # decreasing in epsilon
    assert vals == sorted(vals, reverse=True)


# ---------------------------------------------------------------------------
# monotonicity and bracketing


def test_upper_bounds_monotone_in_epsilon_q_eta_and_schedule():
    eps_grid = (0.05, 0.1, 0.3, 0.6)
    vals = [tcom_upper_connectivity_independent(query(q=0.5, epsilon=e)).value for e in eps_grid]
    assert vals == sorted(vals, reverse=True)

    q_grid = (0.2, 0.4, 0.8)
    vals = [tcom_upper_connectivity_independent(query(q=q)).value for q in q_grid]
    assert vals == sorted(vals, reverse=True)

    eta_grid = (0.1, 0.3, 0.5)
    vals = [tcom_upper_connectivity_independent(query(q=0.5, eta=e)).value for e in eta_grid]
    assert vals == sorted(vals, reverse=True)

    p_grid = (0.2, 0.4, 0.6)
    vals = [
        tcom_upper_arc_independent(query(schedule=ConstantSchedule(p), theta0=1.0, basic_arc_count=2)).value
        for p in p_grid
    ]
    assert vals == sorted(vals, reverse=True)


def test_lower_bound_below_upper_bounds_when_both_apply():
    gen = np.random.default_rng(123)
    for _ in range(30):
        n = int(gen.integers(2, 5))
        eps = float(gen.uniform(0.02, 0.5))
        p = float(gen.uniform(0.1, 0.9))
        eta = 1.0 / n
        sched = ConstantSchedule(p)
        lo = tcom_lower_bound(BoundQuery(n=n, epsilon=eps, schedule=sched, eta=eta)).value
        up_arc = tcom_upper_arc_independent(
            BoundQuery(n=n, epsilon=eps, schedule=sched, eta=eta, theta0=1.0, basic_arc_count=n * (n - 1))
        ).value
        up_conn = tcom_upper_connectivity_independent(
            BoundQuery(n=n, epsilon=eps, schedule=sched, eta=eta, q=0.9)
        ).value
        assert lo <= up_arc
        assert lo <= up_conn


# ---------------------------------------------------------------------------
# divergence conditions


def test_sufficient_conditions_basic():
    assert sufficient_condition("arc_independent", ConstantSchedule(0.3))
    assert not sufficient_condition("arc_independent", GeometricSchedule(c=0.5, rho=0.5))
    # n=3: needs sum P^2; beta=1 gives exponent 2 -> converges
    assert not sufficient_condition("connectivity_independent", PowerDecaySchedule(c=1.0, beta=1.0), n=3)
    assert sufficient_condition("connectivity_independent", PowerDecaySchedule(c=1.0, beta=0.4), n=3)


def test_sufficient_conditions_subsampled():
    ends = tuple(range(0, 100, 5))
    assert sufficient_condition("bidirectional_joint", ConstantSchedule(0.2), n=3, interval_ends=ends)
    assert sufficient_condition("acyclic_joint", PowerDecaySchedule(c=1.0, beta=1.0), interval_ends=ends)
    with pytest.raises(UnsupportedQueryError):
        sufficient_condition("acyclic_joint", ConstantSchedule(0.2), interval_ends=(0, 1, 3, 7))


def test_conditions_report_keys():
    rep = conditions_report(query(n=3, schedule=ConstantSchedule(0.3)))
    assert rep["thm4_sufficient"] is True
    assert rep["coro1_sufficient"] is True
    rep2 = conditions_report(query(n=3, schedule=ConstantSchedule(0.3), interval_ends=tuple(range(0, 30, 3))))
    assert rep2["coro2_sufficient"] is True and rep2["prop3_sufficient"] is True


def test_audit_matches_recomputation_upper_arc():
    sched = PowerDecaySchedule(c=0.9, beta=0.3, cap=0.9)
    qy = query(n=3, epsilon=0.1, schedule=sched, eta=0.25, theta0=0.7, basic_arc_count=4)
    res = tcom_upper_arc_independent(qy)
    k = res.value
    direct = math.fsum(1 - (1 - sched.value(i)) ** 3 for i in range(k))
    assert res.audit["partial_sum"] == pytest.approx(direct, rel=1e-12)
    assert direct >= res.audit["threshold"]
    assert math.fsum(1 - (1 - sched.value(i)) ** 3 for i in range(k - 1)) < res.audit["threshold"]
