"""Online selection with convex production cost: static pricing and exact evaluation.

At a posted price p the seller supplies a unit only while its marginal cost is
at most p, i.e. at most y_inv(p) units, never more than the effective capacity
y_inv(U). ``capacity_rule="effective"`` caps at the effective capacity alone,
which can sell units below cost and is kept for comparison only.
"""

from __future__ import annotations

import math

import numpy as np

from .core import (
    Bounds,
    ConjugateInvExp,
    Constant,
    ConvexCost,
    DomainError,
    EvalReport,
    OsccInstance,
    Outcome,
    PriceLaw,
    Segment,
    exact_report,
    settle,
)
from .numerics import Conjugate, conjugate_value
from . import osp

CAPACITY_RULES = ("marginal", "effective")


def effective_capacity(cost: ConvexCost, U: float) -> int:
    """Largest unit count whose marginal cost does not exceed U."""
    return int(Conjugate(cost).y_inv(U))


def static_alpha(cost: ConvexCost, bounds: Bounds) -> float:
    conj = Conjugate(cost)
    h_low, _ = conjugate_value(conj, bounds.L)
    h_high, _ = conjugate_value(conj, bounds.U)
    if h_low <= 0.0:
        raise DomainError(
            f"h(L) = {h_low} <= 0: a unit at price L is never profitable, the ratio is undefined"
        )
    return 1.0 + math.log(h_high / h_low)


def build_static_law(cost: ConvexCost, bounds: Bounds) -> PriceLaw:
    """Atom at L of mass 1/alpha, then h^{-1}(h(L) e^{alpha x - 1}) up to U."""
    alpha = static_alpha(cost, bounds)
    conj = Conjugate(cost)
    h_low, _ = conjugate_value(conj, bounds.L)
    constants = {"h_low": h_low, "h_high": conjugate_value(conj, bounds.U)[0], "conjugate": conj}
    if alpha == 1.0:
        segments = (Segment(0.0, 1.0, Constant(bounds.L)),)
    elif cost.is_zero:
        segments = osp.build_static_law(bounds).segments
    else:
        segments = (
            Segment(0.0, 1.0 / alpha, Constant(bounds.L)),
            Segment(1.0 / alpha, 1.0, ConjugateInvExp(conj, h_low, alpha)),
        )
    return PriceLaw(segments, alpha=alpha, name="oscc-static", upper=bounds.U, constants=constants)


def _cap_function(instance: OsccInstance, capacity_rule: str):
    if capacity_rule not in CAPACITY_RULES:
        raise DomainError(f"unknown capacity rule {capacity_rule!r}")
    conj = Conjugate(instance.cost)
    c_bar = int(conj.y_inv(instance.bounds.U))
    if capacity_rule == "effective":
        return lambda p: c_bar
    return lambda p: min(c_bar, int(conj.y_inv(p)))


def run_static(instance: OsccInstance, price: float, capacity_rule: str = "marginal") -> Outcome:
    if price < 0:
        raise DomainError(f"negative price {price}")
    cap = _cap_function(instance, capacity_rule)(price)
    decisions, sold = [], []
    for v in instance.valuations:
        take = v >= price and len(sold) < cap
        decisions.append(int(take))
        if take:
            sold.append(v)
    production = instance.cost(len(sold))
    welfare, revenue, utility = settle(sold, [price] * len(sold), production)
    return Outcome(decisions, [len(sold)], welfare, revenue, utility, production)


def offline_opt(instance: OsccInstance):
    """(value, count): best prefix of the descending valuations, net of production cost."""
    v = sorted(instance.valuations, reverse=True)
    best, best_k = 0.0, 0
    for k in range(1, min(len(v), instance.capacity) + 1):
        value = math.fsum(v[:k]) - instance.cost(k)
        if value >= best:
            best, best_k = value, k
    return best, best_k


def exact_expected(instance: OsccInstance, law: PriceLaw, objective: str = "welfare",
                   capacity_rule: str = "marginal") -> EvalReport:
    if objective not in ("welfare", "revenue"):
        raise DomainError(f"unknown objective {objective!r}")
    cap = _cap_function(instance, capacity_rule)
    L, U = instance.bounds.L, instance.bounds.U
    # the sellable quantity jumps where the price crosses a marginal cost
    kinks = [float(c) for c in np.unique(instance.cost.marginals) if L < c < U]
    welfare, revenue = osp.piecewise_expectation(
        law, instance.valuations, cap, cost=instance.cost.cumulative, extra_prices=kinks,
    )
    expected = welfare if objective == "welfare" else revenue
    opt, _ = offline_opt(instance)
    return exact_report("oscc", law.name, objective, expected, opt, law.alpha)
