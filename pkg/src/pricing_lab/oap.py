"""Online assignment: per-item static and dynamic pricing, offline oracles, Monte Carlo."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .core import (
    Bounds,
    DomainError,
    EvalReport,
    OapInstance,
    Outcome,
    PriceLaw,
    ScaledExp,
    Segment,
    competitive_ratio,
    eval_price,
    settle,
)
from .numerics import solve_omega
from .rng import uniforms

# "in-stock": the buyer maximises utility over items that still have stock.
# "walk-away": the buyer picks the best item regardless of stock and leaves if
# it is sold out (the algorithm listing read literally).
STOCK_RULES = ("in-stock", "walk-away")

# items with L == U use the omega limit at this fluctuation ratio
DEGENERATE_THETA = 1.0 + 1e-12
CONTINUITY_TOL = 1e-10


def item_constants(bounds: Bounds):
    """(omega, alpha) for one item."""
    theta = bounds.theta if bounds.theta > 1.0 else DEGENERATE_THETA
    sol = solve_omega(theta)
    return sol.omega, sol.alpha


def build_item_law(bounds: Bounds) -> PriceLaw:
    """(alpha-1)L/alpha * e^x below omega, U * e^{alpha(x-1)} above; both meet at L."""
    omega, alpha = item_constants(bounds)
    L, U = bounds.L, bounds.U
    left = ScaledExp((alpha - 1.0) * L / alpha, 1.0)
    right = ScaledExp(U * math.exp(-alpha), alpha)
    gap = abs(left.value(omega) - right.value(omega))
    if gap > CONTINUITY_TOL * max(1.0, L):
        raise AssertionError(f"item law discontinuous at omega: gap {gap}")
    law = PriceLaw(
        (Segment(0.0, omega, left), Segment(omega, 1.0, right)),
        alpha=alpha, name="oap-static", upper=U,
        constants={"omega": omega, "alpha": alpha},
    )
    return law


@dataclass(frozen=True)
class OapLawSet:
    laws: tuple
    omegas: tuple
    alphas: tuple

    @property
    def alpha(self) -> float:
        return max(self.alphas)

    def prices(self, xs: np.ndarray) -> np.ndarray:
        """Per-item prices for uniform draws ``xs`` of shape (..., K)."""
        xs = np.asarray(xs, dtype=float)
        out = np.empty_like(xs)
        for k, law in enumerate(self.laws):
            out[..., k] = eval_price(law, xs[..., k])
        return out


def build_static_laws(instance: OapInstance) -> OapLawSet:
    laws = tuple(build_item_law(b) for b in instance.bounds)
    return OapLawSet(
        laws,
        tuple(law.constants["omega"] for law in laws),
        tuple(law.constants["alpha"] for law in laws),
    )


@dataclass(frozen=True)
class OapDynSet:
    """Per-item dynamic prices as a function of units already sold."""

    capacities: tuple
    bounds: tuple
    omegas: tuple
    alphas: tuple

    @property
    def alpha(self) -> float:
        return max(self.alphas)

    def price(self, k: int, sold: float) -> float:
        C, b = self.capacities[k], self.bounds[k]
        omega, alpha = self.omegas[k], self.alphas[k]
        if sold < omega * C:
            return b.L * math.expm1(sold / C) / math.expm1(omega)
        return (b.U - b.L) / (math.exp(alpha) - math.exp(omega * alpha)) * math.exp(alpha * sold / C)


def build_dynamic_prices(instance: OapInstance) -> OapDynSet:
    consts = [item_constants(b) for b in instance.bounds]
    return OapDynSet(
        instance.capacities, instance.bounds,
        tuple(c[0] for c in consts), tuple(c[1] for c in consts),
    )


def _check_rule(stock_rule: str) -> None:
    if stock_rule not in STOCK_RULES:
        raise DomainError(f"unknown stock rule {stock_rule!r}")


def _choose(row, prices, open_items):
    """Utility-maximising interested item (lowest index on ties) and its utility."""
    best, best_u = -1, -math.inf
    for k, (v, p) in enumerate(zip(row, prices)):
        if v > 0.0 and open_items[k] and v - p > best_u:
            best, best_u = k, v - p
    return best, best_u


def _run(instance: OapInstance, price_of, stock_rule: str) -> Outcome:
    _check_rule(stock_rule)
    sold = [0] * instance.n_items
    decisions, values, paid = [], [], []
    everything = [True] * instance.n_items
    for row in instance.valuations:
        prices = [price_of(k, sold[k]) for k in range(instance.n_items)]
        if stock_rule == "in-stock":
            open_items = [s < c for s, c in zip(sold, instance.capacities)]
        else:
            open_items = everything
        k, u = _choose(row, prices, open_items)
        if k >= 0 and u >= 0.0 and sold[k] < instance.capacities[k]:
            sold[k] += 1
            decisions.append(k)
            values.append(row[k])
            paid.append(prices[k])
        else:
            decisions.append(-1)
    welfare, revenue, utility = settle(values, paid)
    return Outcome(decisions, sold, welfare, revenue, utility)


def run_static(instance: OapInstance, prices, stock_rule: str = "in-stock") -> Outcome:
    if len(prices) != instance.n_items:
        raise DomainError(f"need {instance.n_items} prices, got {len(prices)}")
    prices = [float(p) for p in prices]
    return _run(instance, lambda k, y: prices[k], stock_rule)


def run_dynamic(instance: OapInstance, dyn: OapDynSet, stock_rule: str = "in-stock") -> Outcome:
    if len(dyn.capacities) != instance.n_items:
        raise DomainError("dynamic prices built for a different item set")
    return _run(instance, dyn.price, stock_rule)


# ---------------------------------------------------------------------------
# offline oracles


def offline_opt(instance: OapInstance):
    """(value, assignment) maximising total valuation under capacities and unit demand.

    Each item is expanded into C_k unit slots; with nonnegative weights a maximum
    weight assignment over buyers x slots is the optimum of the capacitated
    problem (pairs of weight 0 count as unassigned).
    """
    N = instance.n_buyers
    if N == 0:
        return 0.0, []
    V = instance.matrix()
    slot_item = np.repeat(np.arange(instance.n_items), instance.capacities)
    weights = V[:, slot_item]
    rows, cols = linear_sum_assignment(weights, maximize=True)
    assignment = [-1] * N
    for r, c in zip(rows, cols):
        if weights[r, c] > 0.0:
            assignment[r] = int(slot_item[c])
    value = math.fsum(V[n, k] for n, k in enumerate(assignment) if k >= 0)
    return value, assignment


BRUTE_FORCE_LIMITS = (10, 3)


def brute_force_opt(instance: OapInstance) -> float:
    """Exhaustive search over every buyer -> {item, none} map (N <= 10, K <= 3)."""
    N, K = instance.n_buyers, instance.n_items
    if N > BRUTE_FORCE_LIMITS[0] or K > BRUTE_FORCE_LIMITS[1]:
        raise DomainError(f"brute force refuses N={N}, K={K} (limits N<=10, K<=3)")
    if N == 0:
        return 0.0
    V = np.hstack([np.zeros((N, 1)), instance.matrix()])  # column 0 = no item
    maps = np.array(list(itertools.product(range(K + 1), repeat=N)), dtype=np.int64)
    feasible = np.ones(len(maps), dtype=bool)
    for k, cap in enumerate(instance.capacities, start=1):
        feasible &= (maps == k).sum(axis=1) <= cap
    totals = V[np.arange(N), maps].sum(axis=1)
    totals[~feasible] = -np.inf
    best = maps[int(np.argmax(totals))]
    return math.fsum(V[n, best[n]] for n in range(N))


# ---------------------------------------------------------------------------
# Monte Carlo over the K independent price draws

MC_CHUNK = 20_000


def simulate_static(V: np.ndarray, capacities, prices: np.ndarray, stock_rule: str = "in-stock"):
    """Vectorised replay over trials. ``prices`` has shape (T, K); ``capacities``
    is (K,) or per-trial (T, K).

    Returns per-trial (welfare, revenue).
    """
    T, K = prices.shape
    stock = np.broadcast_to(np.asarray(capacities, dtype=np.int64), (T, K)).copy()
    welfare = np.zeros(T)
    revenue = np.zeros(T)
    rows = np.arange(T)
    _check_rule(stock_rule)
    for row in V:
        interested = row > 0.0
        if not interested.any():
            continue
        candidates = interested & (stock > 0) if stock_rule == "in-stock" else interested
        util = np.where(candidates, row - prices, -np.inf)
        k = np.argmax(util, axis=1)
        take = (util[rows, k] >= 0.0) & (stock[rows, k] > 0)
        stock[rows[take], k[take]] -= 1
        welfare[take] += row[k[take]]
        revenue[take] += prices[rows[take], k[take]]
    return welfare, revenue


def mc_samples(instance: OapInstance, laws: OapLawSet, trials: int, seed: int,
               stock_rule: str = "in-stock"):
    V = instance.matrix()
    K = instance.n_items
    welfare, revenue = np.zeros(trials), np.zeros(trials)
    for start in range(0, trials, MC_CHUNK):
        n = min(MC_CHUNK, trials - start)
        xs = uniforms(seed, start, n, K)
        w, r = simulate_static(V, instance.capacities, laws.prices(xs), stock_rule)
        welfare[start:start + n] = w
        revenue[start:start + n] = r
    return welfare, revenue


def mc_report(problem, algorithm, objective, samples, opt, alpha, trials, seed, sigmas=3.0):
    mean = float(np.mean(samples))
    stderr = float(np.std(samples, ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    passed = None if alpha is None else bool(opt <= alpha * (mean + sigmas * stderr))
    return EvalReport(problem, algorithm, objective, "mc", mean, stderr, opt,
                      competitive_ratio(opt, mean), alpha, passed, trials, seed)


def mc_expected(instance: OapInstance, laws: OapLawSet, trials: int, seed: int,
                objective: str = "welfare", sigmas: float = 3.0,
                stock_rule: str = "in-stock") -> EvalReport:
    if trials < 1:
        raise DomainError("need at least one trial")
    if objective not in ("welfare", "revenue"):
        raise DomainError(f"unknown objective {objective!r}")
    welfare, revenue = mc_samples(instance, laws, trials, seed, stock_rule)
    opt, _ = offline_opt(instance)
    samples = welfare if objective == "welfare" else revenue
    return mc_report("oap", "oap-static", objective, samples, opt, laws.alpha, trials, seed, sigmas)
