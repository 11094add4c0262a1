"""Root finders and convex-conjugate machinery behind the pricing constants."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import optimize

from .core import ConvexCost, DomainError

# library-wide bisection tolerance; solvers below tighten it where their
# residual targets need full double precision
ROOT_XTOL = 1e-13
ROOT_MAXITER = 200
_FULL_PRECISION = 1e-300


def bisect(fn, lo: float, hi: float, xtol: float = ROOT_XTOL) -> float:
    """Bracketed bisection; ``fn(lo)`` and ``fn(hi)`` must differ in sign."""
    return optimize.bisect(fn, lo, hi, xtol=xtol, maxiter=ROOT_MAXITER)


@dataclass(frozen=True)
class RatioSolution:
    alpha: float
    residual: float
    gamma: Optional[int] = None
    omega: Optional[float] = None


# ---------------------------------------------------------------------------
# deterministic dynamic pricing ratio for finite capacity


def _alpha_c_log_residual(alpha, C, gamma, theta):
    # log form of (1 + a/C)^(C - g) = C theta / (g a); increasing in alpha
    return (C - gamma) * np.log1p(alpha / C) + np.log(alpha) + np.log(gamma / (C * theta))


def alpha_c_residual(alpha: float, C: int, gamma: int, theta: float) -> float:
    return abs((1.0 + alpha / C) ** (C - gamma) - C * theta / (gamma * alpha))


def solve_alpha_c(C: int, theta: float) -> RatioSolution:
    """Competitive ratio of the finite-capacity dynamic pricing scheme.

    Enumerates gamma = 1..C; for each, alpha must lie in [C/gamma, C/(gamma-1))
    for ceil(C/alpha) == gamma to hold. The smallest consistent root wins.
    """
    if C < 1 or int(C) != C:
        raise DomainError(f"C must be a positive integer, got {C}")
    if theta < 1.0:
        raise DomainError(f"theta must be >= 1, got {theta}")
    C = int(C)
    if theta == 1.0:
        return RatioSolution(alpha=1.0, residual=0.0, gamma=C)

    gammas = np.arange(1, C + 1, dtype=float)
    lo = C / gammas
    hi = np.empty_like(lo)
    hi[0] = max(float(C), theta) * 2.0
    hi[1:] = C / (gammas[1:] - 1.0)
    f_lo = _alpha_c_log_residual(lo, C, gammas, theta)
    f_hi = _alpha_c_log_residual(hi, C, gammas, theta)
    # A root exactly on a bracket edge C/(gamma-1) solves both neighbouring
    # equations, so edges within rounding of zero count as roots too.
    edge = 1e-13
    candidates = np.flatnonzero(((f_lo <= 0.0) & (f_hi > 0.0)) | (np.abs(f_lo) <= edge) | (np.abs(f_hi) <= edge))

    best = None
    # gamma = C: the exponent vanishes and the equation reads 1 = theta / alpha
    if C == 1 or theta <= C / (C - 1.0) * (1.0 + 1e-12):
        best = (float(theta), C)
    for i in candidates:
        g = int(gammas[i])
        if g == C:
            continue
        if abs(f_lo[i]) <= edge:
            alpha = float(lo[i])
        elif f_lo[i] < 0.0 < f_hi[i]:
            alpha = bisect(
                lambda a: float(_alpha_c_log_residual(a, C, g, theta)),
                float(lo[i]), float(hi[i]), xtol=_FULL_PRECISION,
            )
        else:
            alpha = float(hi[i])
        if math.ceil(C / alpha) != g and not (alpha == hi[i] or alpha == lo[i]):
            continue
        if best is None or alpha < best[0]:
            best = (alpha, g)
    assert best is not None, f"no consistent (gamma, alpha) for C={C}, theta={theta}"
    alpha, g = best
    # alpha_C never exceeds alpha_1 = theta; on the plateau where theta itself
    # is the root, bisection can land an ulp above it
    alpha = min(alpha, float(theta))
    return RatioSolution(alpha=alpha, residual=alpha_c_residual(alpha, C, g, theta), gamma=g)


# ---------------------------------------------------------------------------
# assignment ratio


def omega_to_alpha(omega: float) -> float:
    return -1.0 / math.expm1(-omega)


def omega_residual(omega: float, theta: float) -> float:
    """|alpha * (1 - omega) - ln(theta)|, the defining equation multiplied out."""
    return abs(omega_to_alpha(omega) * (1.0 - omega) - math.log(theta))


def solve_omega(theta: float) -> RatioSolution:
    """Solve e^w / (e^w - 1) = ln(theta) / (1 - w) for w in (0, 1)."""
    if not theta > 1.0:
        raise DomainError(f"theta must exceed 1, got {theta}")
    log_theta = math.log(theta)

    def fn(w):
        # strictly decreasing on (0, 1]
        return omega_to_alpha(w) * (1.0 - w) - log_theta

    lo = 1.0 / (log_theta + 2.0)
    omega = bisect(fn, lo, 1.0, xtol=_FULL_PRECISION)
    return RatioSolution(alpha=omega_to_alpha(omega), residual=omega_residual(omega, theta), omega=omega)


# ---------------------------------------------------------------------------
# conjugate of a convex production cost


class Conjugate:
    """h(v) = max_y v*y - f(y) over y in {0..C}, piecewise linear in v."""

    def __init__(self, cost: ConvexCost):
        self.cost = cost
        self.f = np.asarray(cost.cumulative, dtype=float)
        self.c = cost.marginals  # c_1..c_C, nondecreasing
        # knots: distinct marginal costs, with the piece slope active just right of each
        knots = np.unique(self.c)
        self.knots = knots
        self.knot_slopes = np.searchsorted(self.c, knots, side="right")
        self.knot_values = knots * self.knot_slopes - self.f[self.knot_slopes]

    @property
    def capacity(self) -> int:
        return self.cost.capacity

    def y_inv(self, v):
        """Largest maximiser: the number of marginal costs not above v."""
        return np.searchsorted(self.c, v, side="right")

    def value(self, v):
        y = self.y_inv(v)
        return v * y - self.f[y]

    def inverse(self, target):
        t = np.asarray(target, dtype=float)
        if np.any(t < 0.0):
            raise DomainError("conjugate targets must be nonnegative")
        j = np.searchsorted(self.knot_values, t, side="right") - 1
        j = np.maximum(j, 0)
        y = self.knot_slopes[j]
        out = (t + self.f[y]) / y
        return float(out) if out.ndim == 0 else out

    def pieces(self, t_lo: float, t_hi: float):
        """Linear pieces (t_a, t_b, slope y, f(y)) of h^{-1} covering [t_lo, t_hi]."""
        cuts = [t for t in self.knot_values if t_lo < t < t_hi]
        edges = [t_lo, *cuts, t_hi]
        for a, b in zip(edges, edges[1:]):
            j = max(int(np.searchsorted(self.knot_values, 0.5 * (a + b), side="right")) - 1, 0)
            y = int(self.knot_slopes[j])
            yield a, b, y, float(self.f[y])


def conjugate_value(conj: Conjugate, v: float):
    """(h(v), y_inv(v)) for v >= 0."""
    if v < 0:
        raise DomainError(f"v must be nonnegative, got {v}")
    y = int(conj.y_inv(v))
    return float(v * y - conj.f[y]), y


def inverse_conjugate(conj: Conjugate, target: float) -> float:
    """The v >= c_1 with h(v) = target."""
    if target < 0:
        raise DomainError(f"target {target} below h(0+) = 0")
    return float(conj.inverse(target))


def g_star(C: int, alpha: float, L: float, v: float) -> float:
    """Units sold on the hard-instance family by the ratio-optimal scheme, at top value v."""
    if v < L:
        raise DomainError(f"v={v} below L={L}")
    return C * ((1.0 + math.log(v / L)) / alpha)
