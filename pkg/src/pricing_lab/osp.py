"""Online selection: static and dynamic posted pricing, single-leg laws and exact evaluation."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .core import (
    Bounds,
    Constant,
    DomainError,
    EvalReport,
    OspInstance,
    Outcome,
    PriceLaw,
    ScaledExp,
    Segment,
    cdf,
    eval_price,
    exact_report,
    integrate_price,
    settle,
)
from .numerics import solve_alpha_c


def static_alpha(bounds: Bounds) -> float:
    return 1.0 + math.log(bounds.theta)


def build_static_law(bounds: Bounds) -> PriceLaw:
    """Atom of mass 1/alpha at L, then L * exp(alpha * x - 1) up to U."""
    alpha = static_alpha(bounds)
    L = bounds.L
    if alpha == 1.0:
        return PriceLaw((Segment(0.0, 1.0, Constant(L)),), alpha=1.0, name="osp-static")
    segments = (
        Segment(0.0, 1.0 / alpha, Constant(L)),
        Segment(1.0 / alpha, 1.0, ScaledExp(L / math.e, alpha)),
    )
    return PriceLaw(segments, alpha=alpha, name="osp-static", upper=bounds.U)


@dataclass(frozen=True)
class DynamicSchedule:
    prices: tuple  # price for the z-th unit, z = 1..C
    alpha: float
    gamma: int

    def __len__(self):
        return len(self.prices)


def build_dynamic_schedule(C: int, bounds: Bounds) -> DynamicSchedule:
    sol = solve_alpha_c(C, bounds.theta)
    alpha, gamma, L = sol.alpha, sol.gamma, bounds.L
    prices = []
    for z in range(1, C + 1):
        if z <= gamma:
            prices.append(L)
        else:
            prices.append(gamma * L * alpha / C * (1.0 + alpha / C) ** (z - gamma - 1))
    return DynamicSchedule(tuple(prices), alpha, gamma)


def run_static(instance: OspInstance, price: float, objective: str = "welfare") -> Outcome:
    """One fixed price for everyone; first come, first served up to capacity.

    ``objective`` only labels intent: the outcome carries both welfare and revenue.
    """
    if price < 0:
        raise DomainError(f"negative price {price}")
    decisions, sold = [], []
    for v in instance.valuations:
        take = v >= price and len(sold) < instance.capacity
        decisions.append(int(take))
        if take:
            sold.append(v)
    welfare, revenue, utility = settle(sold, [price] * len(sold))
    return Outcome(decisions, [len(sold)], welfare, revenue, utility)


def run_dynamic(instance: OspInstance, schedule: DynamicSchedule) -> Outcome:
    if len(schedule) != instance.capacity:
        raise DomainError(f"schedule has {len(schedule)} prices for capacity {instance.capacity}")
    decisions, sold, paid = [], [], []
    for v in instance.valuations:
        z = len(sold)
        take = z < instance.capacity and v >= schedule.prices[z]
        decisions.append(int(take))
        if take:
            sold.append(v)
            paid.append(schedule.prices[z])
    welfare, revenue, utility = settle(sold, paid)
    return Outcome(decisions, [len(sold)], welfare, revenue, utility)


def offline_opt(instance: OspInstance):
    """(value, selected buyer indices): the min(C, N) largest valuations, earliest first on ties."""
    order = sorted(range(instance.n_buyers), key=lambda n: (-instance.valuations[n], n))
    chosen = sorted(order[: instance.capacity])
    return math.fsum(instance.valuations[n] for n in chosen), chosen


# ---------------------------------------------------------------------------
# exact expectation over the uniform draw behind a static price


def _breakpoints(law: PriceLaw, prices: Sequence[float]) -> np.ndarray:
    points = {0.0, 1.0, *law.boundaries}
    points.update(cdf(law, p) for p in prices)
    return np.array(sorted(points))


def piecewise_expectation(
    law: PriceLaw,
    valuations: Sequence[float],
    capacity_at: Callable[[float], int],
    cost: Optional[Sequence[float]] = None,
    extra_prices: Sequence[float] = (),
):
    """Exact E[welfare] and E[revenue] for x ~ U[0, 1] with posted price psi(x).

    The sold set only changes where psi crosses a valuation (or a price in
    ``extra_prices``, e.g. where the sellable quantity changes), so it is constant
    between consecutive breakpoints; it is read off at each piece's midpoint and
    weighted by the piece width. Revenue integrates psi in closed form.
    """
    v = np.asarray(valuations, dtype=float)
    distinct = np.unique(v)
    xs = _breakpoints(law, [*distinct.tolist(), *extra_prices])
    welfare, revenue = [], []
    for a, b in zip(xs[:-1], xs[1:]):
        if b <= a:
            continue
        price = eval_price(law, 0.5 * (a + b))
        cap = capacity_at(price)
        eligible = np.flatnonzero(v >= price)[:cap]
        count = len(eligible)
        if count == 0:
            continue
        sold_value = math.fsum(v[eligible])
        if cost is not None:
            sold_value -= cost[count]
        welfare.append((b - a) * sold_value)
        revenue.append(count * integrate_price(law, a, b))
    return math.fsum(welfare), math.fsum(revenue)


def exact_expected(instance: OspInstance, law: PriceLaw, objective: str = "welfare") -> EvalReport:
    if objective not in ("welfare", "revenue"):
        raise DomainError(f"unknown objective {objective!r}")
    welfare, revenue = piecewise_expectation(law, instance.valuations, lambda p: instance.capacity)
    expected = welfare if objective == "welfare" else revenue
    opt, _ = offline_opt(instance)
    return exact_report("osp", law.name, objective, expected, opt, law.alpha)


# ---------------------------------------------------------------------------
# single-leg revenue management


@dataclass(frozen=True)
class SingleLegLaw:
    levels: tuple
    masses: tuple
    q: float
    breakpoints: tuple
    law: PriceLaw


def build_single_leg_law(levels: Sequence[float]) -> SingleLegLaw:
    """Step law over a finite price ladder; mass 1 - V_{i-1}/V_i on level i."""
    V = [float(x) for x in levels]
    if not V or V[0] <= 0 or any(b <= a for a, b in zip(V, V[1:])):
        raise DomainError("price levels must be positive and strictly increasing")
    masses = [1.0 - prev / cur for prev, cur in zip([0.0, *V[:-1]], V)]
    q = math.fsum(masses)
    cum = np.cumsum(masses) / q
    cum[-1] = 1.0
    Q = tuple(float(x) for x in cum)
    starts = (0.0, *Q[:-1])
    segments = tuple(Segment(a, b, Constant(p)) for a, b, p in zip(starts, Q, V))
    law = PriceLaw(segments, alpha=q, name="single-leg")
    return SingleLegLaw(tuple(V), tuple(masses), q, Q, law)
