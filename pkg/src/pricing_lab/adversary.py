"""Hard-instance families from the lower-bound constructions, discretised to m levels."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core import Bounds, ConvexCost, DomainError, OapInstance, OsccInstance, OspInstance


@dataclass(frozen=True)
class BatchSpec:
    copies: int
    levels: tuple

    @property
    def top(self) -> float:
        return self.levels[-1]

    def valuations(self) -> list:
        return [v for v in self.levels for _ in range(self.copies)]


def batch_levels(bounds: Bounds, m: int, top: Optional[float] = None) -> tuple:
    """Equally spaced grid L = V_1 < ... < V_m = U, cut at ``top`` (appended if off-grid).

    A single level means the grid is just L, so ``top`` defaults to L then.
    """
    if m < 1:
        raise DomainError(f"need at least one level, got m={m}")
    if top is None:
        top = bounds.L if m == 1 else bounds.U
    top = float(top)
    if not bounds.contains(top):
        raise DomainError(f"top value {top} outside [{bounds.L}, {bounds.U}]")
    if m == 1:
        grid = np.array([bounds.L])
    else:
        grid = np.linspace(bounds.L, bounds.U, m)
        grid[-1] = bounds.U
    levels = [float(v) for v in grid if v <= top]
    if levels[-1] != top:
        if np.isclose(levels[-1], top, rtol=1e-12, atol=0.0):
            levels[-1] = top
        else:
            levels.append(top)
    return tuple(levels)


def osp_batched_increasing(C: int, bounds: Bounds, m: int, top: Optional[float] = None) -> OspInstance:
    """C buyers at each grid value from L up to ``top``; OPT = C * top."""
    spec = BatchSpec(C, batch_levels(bounds, m, top))
    return OspInstance(C, bounds, spec.valuations())


def osp_det_static_worst(C: int, bounds: Bounds) -> OspInstance:
    """C buyers at L followed by C buyers at U."""
    if not bounds.theta > 1.0:
        raise DomainError("needs theta > 1")
    return OspInstance(C, bounds, [bounds.L] * C + [bounds.U] * C)


def oap_two_stage(K: int, C: int, bounds: Bounds, m: int, target: Optional[int] = None,
                  permutation: Optional[Sequence[int]] = None, top: Optional[float] = None) -> OapInstance:
    """Upper-triangle batches at L, then increasing batches on a single item.

    Stage I: batch j (j = 1..K) holds C buyers valuing L for items
    pi(j)..pi(K) and nothing else. Stage II: C buyers at each grid value above
    L up to ``top`` (default U), interested only in the target item (pi(K)).
    Items are 0-based in the returned instance.
    """
    if K < 2:
        raise DomainError("needs at least two items")
    perm = list(range(K)) if permutation is None else [int(p) for p in permutation]
    if sorted(perm) != list(range(K)):
        raise DomainError(f"not a permutation of 0..{K - 1}: {permutation}")
    target = perm[-1] if target is None else int(target)
    rows = []
    for j in range(K):
        row = [0.0] * K
        for k in perm[j:]:
            row[k] = bounds.L
        rows.extend([tuple(row)] * C)
    for v in batch_levels(bounds, m, top)[1:]:
        row = [0.0] * K
        row[target] = v
        rows.extend([tuple(row)] * C)
    return OapInstance((C,) * K, (bounds,) * K, rows)


def two_stage_opt(K: int, C: int, bounds: Bounds, top: Optional[float] = None) -> float:
    top = bounds.U if top is None else top
    return bounds.L * C * (K - 1) + top * C


def oscc_batched_increasing(cost: ConvexCost, bounds: Bounds, m: int, top: Optional[float] = None) -> OsccInstance:
    spec = BatchSpec(cost.capacity, batch_levels(bounds, m, top))
    return OsccInstance(cost, bounds, spec.valuations())


def single_leg_increasing(levels: Sequence[float], C: int, upto: Optional[int] = None) -> OspInstance:
    """C buyers at each of V_1..V_i (i = ``upto``, default all levels)."""
    V = [float(v) for v in levels]
    if any(b <= a for a, b in zip(V, V[1:])):
        raise DomainError("levels must be strictly increasing")
    i = len(V) if upto is None else int(upto)
    return OspInstance(C, Bounds(V[0], V[-1]), [v for v in V[:i] for _ in range(C)])


# ---------------------------------------------------------------------------
# seeded random families for property suites


def random_osp(rng: np.random.Generator, C: int, bounds: Bounds, max_buyers: int = 200) -> OspInstance:
    """Uniform valuations; one draw in three is sorted ascending, one in six snapped to {L, U}."""
    n = int(rng.integers(0, max_buyers + 1))
    v = rng.uniform(bounds.L, bounds.U, n)
    style = int(rng.integers(0, 6))
    if style == 0:
        v = np.where(rng.random(n) < 0.5, bounds.L, bounds.U)
    if style in (1, 2):
        v = np.sort(v)
    return OspInstance(C, bounds, np.clip(v, bounds.L, bounds.U).tolist())


def random_single_leg(rng: np.random.Generator, max_levels: int = 6, max_capacity: int = 20,
                      max_buyers: int = 100):
    m = int(rng.integers(1, max_levels + 1))
    levels = np.unique(np.round(np.sort(rng.uniform(1.0, 10.0, m)), 6))
    C = int(rng.integers(1, max_capacity + 1))
    n = int(rng.integers(0, max_buyers + 1))
    v = rng.choice(levels, size=n)
    if rng.random() < 0.5:
        v = np.sort(v)
    return levels.tolist(), OspInstance(C, Bounds(float(levels[0]), float(levels[-1])), v.tolist())


def random_oap(rng: np.random.Generator, max_items: int = 4, max_buyers: int = 50,
               max_capacity: int = 10, max_theta: float = np.e) -> OapInstance:
    K = int(rng.integers(1, max_items + 1))
    N = int(rng.integers(0, max_buyers + 1))
    caps = rng.integers(1, max_capacity + 1, K).tolist()
    bounds = []
    for _ in range(K):
        L = float(rng.uniform(0.5, 2.0))
        bounds.append(Bounds(L, L * float(rng.uniform(1.0, max_theta))))
    V = np.zeros((N, K))
    for k, b in enumerate(bounds):
        want = rng.random(N) < rng.uniform(0.3, 1.0)
        V[want, k] = rng.uniform(b.L, b.U, int(want.sum()))
    return OapInstance(caps, bounds, [tuple(r) for r in V.tolist()])


def random_convex_cost(rng: np.random.Generator, capacity: int, scale: float) -> ConvexCost:
    """Marginals are sorted nonnegative uniforms on [0, scale]."""
    return ConvexCost.from_marginals(np.sort(rng.uniform(0.0, scale, capacity)))
