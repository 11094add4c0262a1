import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from pricing_lab import Bounds, ConvexCost, DomainError, OsccInstance, OspInstance, cdf, eval_price
from pricing_lab import adversary, harness, oscc, osp
from pricing_lab.core import integrate_price

QUAD = ConvexCost([0, 0, 1, 3])  # marginals 0, 1, 2


def _h(cost, v):
    """Conjugate by enumerating every production count."""
    return max(v * y - cost(y) for y in range(cost.capacity + 1))


def test_effective_capacity_examples():
    assert oscc.effective_capacity(ConvexCost.zero(7), 1.0) == 7
    five = ConvexCost.from_marginals(range(5))
    assert oscc.effective_capacity(five, 3.0) == 4
    assert oscc.effective_capacity(QUAD, 3.0) == 3


def test_zero_cost_law_is_osp_law():
    b = Bounds(1.0, 10.0)
    law = oscc.build_static_law(ConvexCost.zero(4), b)
    ref = osp.build_static_law(b)
    assert law.alpha == ref.alpha
    xs = np.linspace(0, 1, 101)
    assert np.array_equal(eval_price(law, xs), eval_price(ref, xs))


def test_quadratic_cost_alpha():
    law = oscc.build_static_law(QUAD, Bounds(1.0, 3.0))
    assert law.alpha == pytest.approx(1 + math.log(6), rel=1e-15)
    assert eval_price(law, 1.0) == 3.0
    assert eval_price(law, 0.5 / law.alpha) == 1.0


@pytest.mark.parametrize("c,L,U", [(0.5, 1.0, 3.0), (0.2, 1.0, 10.0), (1.9, 2.0, 7.0)])
def test_linear_cost_alpha(c, L, U):
    cost = ConvexCost.from_marginals([c] * 6)
    alpha = oscc.static_alpha(cost, Bounds(L, U))
    assert alpha == pytest.approx(1 + math.log((U - c) / (L - c)), rel=1e-10)


def test_example_column_is_linear_cost_at_half_floor():
    for theta in (1.5, 2.0, 10.0):
        cost = ConvexCost.from_marginals([0.5] * 3)
        assert harness.oscc_example_alpha(theta) == pytest.approx(
            oscc.static_alpha(cost, Bounds(1.0, theta)), rel=1e-12)


def test_unprofitable_floor_is_rejected():
    with pytest.raises(DomainError):
        oscc.static_alpha(ConvexCost.from_marginals([1.0, 2.0]), Bounds(1.0, 3.0))


def test_run_static_examples():
    b = Bounds(1.0, 3.0)
    out = oscc.run_static(OsccInstance(QUAD, b, [3, 3, 1]), 2.0)
    assert out.decisions == [1, 1, 0]
    assert out.welfare == 5.0 and out.welfare == out.revenue + out.utility - out.cost
    assert oscc.run_static(OsccInstance(QUAD, b, []), 3.0).welfare == 0.0
    with pytest.raises(DomainError):
        oscc.run_static(OsccInstance(QUAD, b, [2.0]), 1.0, capacity_rule="greedy")


def test_capacity_rules_differ_below_cost():
    cost = ConvexCost.from_marginals(range(5))  # f(y) = y(y-1)/2
    inst = OsccInstance(cost, Bounds(1.0, 3.0), [3.0] * 6)
    marginal = oscc.run_static(inst, 1.0)
    assert marginal.units_sold == [2] and marginal.welfare == 5.0
    effective = oscc.run_static(inst, 1.0, capacity_rule="effective")
    assert effective.units_sold == [4] and effective.welfare == 6.0


def test_effective_rule_can_lose_money():
    cost = ConvexCost.from_marginals(range(20))
    inst = OsccInstance(cost, Bounds(1.0, 10.0), [1.0] * 20)
    law = oscc.build_static_law(cost, inst.bounds)
    assert oscc.exact_expected(inst, law).passed
    literal = oscc.exact_expected(inst, law, capacity_rule="effective")
    assert literal.expected < 0 and not literal.passed


def test_offline_examples():
    b = Bounds(1.0, 3.0)
    assert oscc.offline_opt(OsccInstance(QUAD, b, [3, 3, 1])) == (5.0, 2)
    pricey = ConvexCost.from_marginals([1.5, 2.0])
    assert oscc.offline_opt(OsccInstance(pricey, b, [1.0, 1.2])) == (0.0, 0)


def test_exact_single_buyer_at_floor():
    b = Bounds(1.0, 3.0)
    law = oscc.build_static_law(QUAD, b)
    rep = oscc.exact_expected(OsccInstance(QUAD, b, [1.0]), law)
    assert rep.expected == pytest.approx(1.0 / law.alpha, rel=1e-14)


def test_zero_cost_reduces_to_osp():
    rng = np.random.default_rng(21)
    for _ in range(30):
        C, theta = int(rng.integers(1, 8)), float(rng.uniform(1.5, 10))
        b = Bounds(1.0, theta)
        values = rng.uniform(1.0, theta, int(rng.integers(0, 30))).tolist()
        for objective in ("welfare", "revenue"):
            a = oscc.exact_expected(OsccInstance(ConvexCost.zero(C), b, values),
                                    oscc.build_static_law(ConvexCost.zero(C), b), objective)
            r = osp.exact_expected(OspInstance(C, b, values), osp.build_static_law(b), objective)
            assert a.expected == pytest.approx(r.expected, rel=1e-12, abs=1e-12)
            assert a.opt == pytest.approx(r.opt, rel=1e-12)


def test_batched_quadratic_tightness():
    b = Bounds(1.0, 3.0)
    cost = ConvexCost.from_marginals([0.0, 1.0, 2.0])
    inst = adversary.oscc_batched_increasing(cost, b, 400)
    rep = oscc.exact_expected(inst, oscc.build_static_law(cost, b))
    assert rep.passed
    assert rep.ratio >= 0.98 * rep.alpha


marginal_lists = st.lists(st.floats(0.0, 4.0), min_size=1, max_size=8).map(sorted)


@settings(max_examples=100)
@given(marginals=marginal_lists, theta=st.floats(1.2, 8.0))
def test_cdf_identity_on_grid(marginals, theta):
    cost = ConvexCost.from_marginals(marginals)
    b = Bounds(1.0, theta)
    h_low = _h(cost, b.L)
    if h_low <= 0:
        return
    law = oscc.build_static_law(cost, b)
    for v in np.linspace(b.L, b.U, 100):
        expected = (1 + math.log(_h(cost, v) / h_low)) / law.alpha
        assert cdf(law, float(v)) == pytest.approx(expected, abs=1e-10)
    assert cdf(law, b.U) == 1.0


@settings(max_examples=60, deadline=None)
@given(marginals=marginal_lists, theta=st.floats(1.2, 8.0))
def test_integral_matches_quadrature(marginals, theta):
    cost = ConvexCost.from_marginals(marginals)
    if cost.marginals[0] >= 1.0:
        return
    law = oscc.build_static_law(cost, Bounds(1.0, theta))
    pts = sorted({x for x in law.boundaries[1:-1]} | {float(cdf(law, c)) for c in cost.marginals if 1.0 < c < theta})
    numeric, _ = integrate.quad(lambda x: eval_price(law, x), 0.0, 1.0, points=pts or None,
                                epsabs=1e-13, epsrel=1e-11, limit=400)
    assert integrate_price(law, 0.0, 1.0) == pytest.approx(numeric, rel=1e-8)


@settings(max_examples=100)
@given(marginals=marginal_lists, values=st.lists(st.floats(1.0, 5.0), max_size=25))
def test_offline_never_exceeds_effective_capacity(marginals, values):
    cost = ConvexCost.from_marginals(marginals)
    inst = OsccInstance(cost, Bounds(1.0, 5.0), values)
    _, count = oscc.offline_opt(inst)
    assert count <= oscc.effective_capacity(cost, 5.0)


@settings(max_examples=80, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_static_guarantee_property(seed):
    inst = harness.random_oscc(np.random.default_rng(seed), max_capacity=10, max_buyers=40)
    rep = oscc.exact_expected(inst, oscc.build_static_law(inst.cost, inst.bounds))
    assert rep.passed, rep


def test_exact_matches_monte_carlo():
    inst = harness.random_oscc(np.random.default_rng(4), max_capacity=8, max_buyers=30)
    exact = harness.evaluate(inst)
    mc = harness.evaluate(inst, mode="mc", trials=400_000, seed=4)
    assert abs(exact.expected - mc.expected) <= 4 * mc.stderr
