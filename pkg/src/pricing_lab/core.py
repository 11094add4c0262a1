"""Shared domain types: bounds, instances, price laws and outcome accounting."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np


class DomainError(ValueError):
    """An argument lies outside the domain an operation is defined on."""


class InstanceError(ValueError):
    """An instance violates its invariants or cannot be parsed."""


@dataclass(frozen=True)
class Bounds:
    L: float
    U: float

    def __post_init__(self):
        if not (self.L > 0 and self.U > 0):
            raise DomainError(f"bounds must be positive, got L={self.L}, U={self.U}")
        if self.L > self.U:
            raise DomainError(f"need L <= U, got L={self.L}, U={self.U}")

    @property
    def theta(self) -> float:
        return self.U / self.L

    def contains(self, v: float) -> bool:
        return self.L <= v <= self.U


@dataclass(frozen=True)
class OspInstance:
    capacity: int
    bounds: Bounds
    valuations: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "valuations", tuple(float(v) for v in self.valuations))
        if int(self.capacity) != self.capacity or self.capacity < 1:
            raise InstanceError(f"capacity must be a positive integer, got {self.capacity}")
        for n, v in enumerate(self.valuations):
            if not self.bounds.contains(v):
                raise InstanceError(
                    f"valuation {v} of buyer {n} outside [{self.bounds.L}, {self.bounds.U}]"
                )

    @property
    def n_buyers(self) -> int:
        return len(self.valuations)


@dataclass(frozen=True)
class OapInstance:
    capacities: tuple
    bounds: tuple  # one Bounds per item
    valuations: tuple = ()  # one K-vector per buyer, 0 means uninterested

    def __post_init__(self):
        caps = tuple(int(c) for c in self.capacities)
        if any(c < 1 for c in caps) or any(int(c) != c for c in self.capacities):
            raise InstanceError(f"item capacities must be positive integers, got {self.capacities}")
        object.__setattr__(self, "capacities", caps)
        object.__setattr__(self, "bounds", tuple(self.bounds))
        if len(self.bounds) != len(caps):
            raise InstanceError("need one bounds pair per item")
        rows = tuple(tuple(float(v) for v in row) for row in self.valuations)
        object.__setattr__(self, "valuations", rows)
        for n, row in enumerate(rows):
            if len(row) != len(caps):
                raise InstanceError(f"buyer {n} has {len(row)} valuations, expected {len(caps)}")
            for k, v in enumerate(row):
                if v != 0.0 and not self.bounds[k].contains(v):
                    raise InstanceError(
                        f"valuation {v} of buyer {n} for item {k} is neither 0 nor in "
                        f"[{self.bounds[k].L}, {self.bounds[k].U}]"
                    )

    @property
    def n_items(self) -> int:
        return len(self.capacities)

    @property
    def n_buyers(self) -> int:
        return len(self.valuations)

    def matrix(self) -> np.ndarray:
        return np.array(self.valuations, dtype=float).reshape(self.n_buyers, self.n_items)


@dataclass(frozen=True)
class ConvexCost:
    """Cumulative production cost f(0..C) with zero setup cost."""

    cumulative: tuple

    def __post_init__(self):
        f = tuple(float(x) for x in self.cumulative)
        object.__setattr__(self, "cumulative", f)
        if len(f) < 2:
            raise InstanceError("cost needs f(0) and at least one unit")
        if f[0] != 0.0:
            raise InstanceError(f"setup cost must be zero, got f(0)={f[0]}")
        c = np.diff(f)
        slack = 1e-9 * max(1.0, max(abs(x) for x in f))
        if np.any(c < -slack):
            raise InstanceError("marginal costs must be nonnegative")
        if np.any(np.diff(c) < -slack):
            raise InstanceError("marginal costs must be nondecreasing (convex cost)")

    @classmethod
    def from_marginals(cls, marginals: Sequence[float]) -> "ConvexCost":
        return cls((0.0, *np.cumsum(marginals).tolist()))

    @classmethod
    def zero(cls, capacity: int) -> "ConvexCost":
        return cls((0.0,) * (capacity + 1))

    @property
    def capacity(self) -> int:
        return len(self.cumulative) - 1

    @property
    def marginals(self) -> np.ndarray:
        # cumulative max irons out float noise so searchsorted stays valid
        return np.maximum.accumulate(np.maximum(np.diff(self.cumulative), 0.0))

    def __call__(self, y: int) -> float:
        return self.cumulative[y]

    @property
    def is_zero(self) -> bool:
        return all(x == 0.0 for x in self.cumulative)


@dataclass(frozen=True)
class OsccInstance:
    cost: ConvexCost
    bounds: Bounds
    valuations: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "valuations", tuple(float(v) for v in self.valuations))
        for n, v in enumerate(self.valuations):
            if not self.bounds.contains(v):
                raise InstanceError(
                    f"valuation {v} of buyer {n} outside [{self.bounds.L}, {self.bounds.U}]"
                )

    @property
    def capacity(self) -> int:
        return self.cost.capacity

    @property
    def n_buyers(self) -> int:
        return len(self.valuations)


Instance = Union[OspInstance, OapInstance, OsccInstance]


# ---------------------------------------------------------------------------
# price laws


@dataclass(frozen=True)
class Constant:
    price: float

    def value(self, x):
        return np.full_like(np.asarray(x, dtype=float), self.price) if np.ndim(x) else self.price

    def inverse(self, v):
        raise AssertionError("constant segments are never inverted")

    def integral(self, a: float, b: float) -> float:
        return self.price * (b - a)


@dataclass(frozen=True)
class ScaledExp:
    """p(x) = k0 * exp(k1 * x)."""

    k0: float
    k1: float

    def value(self, x):
        return self.k0 * np.exp(self.k1 * x)

    def inverse(self, v):
        return math.log(v / self.k0) / self.k1

    def integral(self, a: float, b: float) -> float:
        if self.k1 == 0.0:
            return self.k0 * (b - a)
        return self.k0 / self.k1 * (math.exp(self.k1 * b) - math.exp(self.k1 * a))


@dataclass(frozen=True)
class ConjugateInvExp:
    """p(x) = h^{-1}(h_low * exp(alpha * x - 1)) for the conjugate h of a convex cost.

    ``conj`` must provide ``value(v) -> h`` (vectorised), ``inverse(t)`` and
    ``pieces(t_lo, t_hi)`` yielding ``(t_a, t_b, slope, intercept)`` for the linear
    pieces of h crossed by targets in [t_lo, t_hi].
    """

    conj: object
    h_low: float
    alpha: float

    def _target(self, x):
        return self.h_low * np.exp(self.alpha * np.asarray(x, dtype=float) - 1.0)

    def value(self, x):
        out = self.conj.inverse(self._target(x))
        return float(out) if np.ndim(x) == 0 else out

    def inverse(self, v):
        h = float(self.conj.value(v))
        return (1.0 + math.log(h / self.h_low)) / self.alpha

    def integral(self, a: float, b: float) -> float:
        # h is piecewise linear, so h^{-1}(t) = (t + f(y)) / y on each piece
        total = 0.0
        t_a, t_b = float(self._target(a)), float(self._target(b))
        for lo, hi, y, fy in self.conj.pieces(t_a, t_b):
            xa = (1.0 + math.log(lo / self.h_low)) / self.alpha
            xb = (1.0 + math.log(hi / self.h_low)) / self.alpha
            total += ((hi - lo) / self.alpha + fy * (xb - xa)) / y
        return total


Form = Union[Constant, ScaledExp, ConjugateInvExp]


@dataclass(frozen=True)
class Segment:
    start: float
    end: float
    form: Form

    def value(self, x):
        return self.form.value(x)


@dataclass(frozen=True)
class PriceLaw:
    """Nondecreasing inverse CDF psi: [0, 1] -> prices, as half-open segments [a, b).

    The point x = 1 belongs to the last segment.
    """

    segments: tuple
    alpha: float
    name: str = "static"
    upper: Optional[float] = None  # exact top price; evaluations are clamped to it
    constants: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        segs = tuple(s for s in self.segments if s.end > s.start)
        object.__setattr__(self, "segments", segs)
        if not segs or segs[0].start != 0.0 or segs[-1].end != 1.0:
            raise DomainError("segments must cover [0, 1]")
        for left, right in zip(segs, segs[1:]):
            if left.end != right.start:
                raise DomainError("segments must be contiguous")
        object.__setattr__(self, "_starts", np.array([s.start for s in segs]))

    @property
    def top(self) -> float:
        if self.upper is not None:
            return self.upper
        return float(self.segments[-1].value(1.0))

    @property
    def bottom(self) -> float:
        return float(self.segments[0].value(0.0))

    @property
    def boundaries(self) -> list:
        return [s.start for s in self.segments] + [1.0]

    def segment_at(self, x: float) -> Segment:
        i = int(np.searchsorted(self._starts, x, side="right")) - 1
        return self.segments[max(i, 0)]

    def __call__(self, x):
        return eval_price(self, x)


def eval_price(law: PriceLaw, x):
    """psi(x). Accepts a scalar or an array of points in [0, 1]."""
    if np.ndim(x) == 0:
        x = float(x)
        if not 0.0 <= x <= 1.0:
            raise DomainError(f"x={x} outside [0, 1]")
        p = float(law.segment_at(x).value(x))
        if law.upper is None:
            return p
        return law.upper if x == 1.0 else min(p, law.upper)
    xs = np.asarray(x, dtype=float)
    if xs.size and (xs.min() < 0.0 or xs.max() > 1.0):
        raise DomainError("points outside [0, 1]")
    out = np.empty_like(xs)
    idx = np.searchsorted(law._starts, xs, side="right") - 1
    for i, seg in enumerate(law.segments):
        mask = idx == i
        if mask.any():
            out[mask] = seg.value(xs[mask])
    if law.upper is not None:
        np.minimum(out, law.upper, out=out)
        out[xs == 1.0] = law.upper
    return out


def cdf(law: PriceLaw, v: float) -> float:
    """sup{x : psi(x) <= v}; 0 below psi(0), 1 at or above the top price."""
    if v >= law.top:
        return 1.0
    for seg in reversed(law.segments):
        start_price = float(seg.value(seg.start))
        if start_price > v:
            continue
        if isinstance(seg.form, Constant):
            return seg.end
        end_price = float(seg.value(seg.end))
        if v >= end_price:
            return seg.end
        return min(max(seg.form.inverse(v), seg.start), seg.end)
    return 0.0


def expected_price(law: PriceLaw) -> float:
    return math.fsum(s.form.integral(s.start, s.end) for s in law.segments)


def integrate_price(law: PriceLaw, a: float, b: float) -> float:
    """Closed-form integral of psi over [a, b]."""
    total = []
    for s in law.segments:
        lo, hi = max(a, s.start), min(b, s.end)
        if hi > lo:
            total.append(s.form.integral(lo, hi))
    return math.fsum(total)


# ---------------------------------------------------------------------------
# outcomes and reports


@dataclass
class Outcome:
    decisions: list  # OSP/OSCC: 0/1 per buyer; OAP: item index or -1
    units_sold: list  # per item (a single entry for OSP/OSCC)
    welfare: float
    revenue: float
    utility: float
    cost: float = 0.0

    @property
    def total_units(self) -> int:
        return int(sum(self.units_sold))

    def objective(self, name: str) -> float:
        if name == "welfare":
            return self.welfare
        if name == "revenue":
            return self.revenue
        raise DomainError(f"unknown objective {name!r}")


def settle(values: Sequence[float], prices: Sequence[float], cost: float = 0.0):
    """(welfare, revenue, utility) for sold units at their paid prices."""
    revenue = math.fsum(prices)
    utility = math.fsum(v - p for v, p in zip(values, prices))
    welfare = revenue + utility - cost
    return welfare, revenue, utility


@dataclass
class EvalReport:
    problem: str
    algorithm: str
    objective: str
    mode: str
    expected: float
    stderr: float
    opt: float
    ratio: float
    alpha: Optional[float]
    passed: Optional[bool]
    trials: int = 0
    seed: Optional[int] = None

    def to_dict(self) -> dict:
        return {
            "problem": self.problem,
            "algorithm": self.algorithm,
            "objective": self.objective,
            "mode": self.mode,
            "expected": self.expected,
            "stderr": self.stderr,
            "opt": self.opt,
            "ratio": self.ratio,
            "alpha": self.alpha,
            "passed": self.passed,
            "trials": self.trials,
            "seed": self.seed,
        }


def competitive_ratio(opt: float, expected: float) -> float:
    if opt == 0.0:
        return 1.0
    if expected <= 0.0:
        return math.inf
    return opt / expected


def exact_report(problem, algorithm, objective, expected, opt, alpha, rel_tol=1e-9) -> EvalReport:
    ratio = competitive_ratio(opt, expected)
    passed = None if alpha is None else bool(opt <= alpha * expected * (1.0 + rel_tol) or opt == 0.0)
    return EvalReport(problem, algorithm, objective, "exact", expected, 0.0, opt, ratio, alpha, passed)
