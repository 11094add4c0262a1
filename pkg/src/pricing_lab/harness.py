"""Experiment driver: evaluation dispatch, ratio tables and certification suites."""

from __future__ import annotations

import csv
import io as _io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import adversary, oap, oscc, osp
from . import io as instance_io
from .core import (
    Bounds,
    ConvexCost,
    DomainError,
    EvalReport,
    OapInstance,
    OsccInstance,
    OspInstance,
    competitive_ratio,
    eval_price,
    exact_report,
)
from .numerics import Conjugate, conjugate_value, solve_alpha_c, solve_omega
from .rng import uniforms

ALGORITHMS = {
    "osp": ("static", "dynamic", "single-leg"),
    "oscc": ("static",),
    "oap": ("static", "dynamic"),
}
OBJECTIVES = ("welfare", "revenue")
MODES = ("exact", "mc")
DEFAULT_TRIALS = 100_000
THREADS_ENV = "PRICING_LAB_THREADS"


class UnsupportedModeError(DomainError):
    """The requested evaluation mode is not available for this problem."""


def problem_of(instance) -> str:
    if isinstance(instance, OspInstance):
        return "osp"
    if isinstance(instance, OsccInstance):
        return "oscc"
    if isinstance(instance, OapInstance):
        return "oap"
    raise TypeError(f"not an instance: {type(instance).__name__}")


def default_levels(instance: OspInstance) -> list:
    """Price ladder for single-leg runs without explicit levels: every valuation plus L and U."""
    b = instance.bounds
    return sorted({b.L, b.U, *instance.valuations})


# ---------------------------------------------------------------------------
# Monte Carlo for the single-draw problems


def _mc_single(instance, law, trials, seed, capacity_at=None, cost=None):
    V = np.asarray(instance.valuations, dtype=float)
    welfare, revenue = np.zeros(trials), np.zeros(trials)
    for start in range(0, trials, oap.MC_CHUNK):
        n = min(oap.MC_CHUNK, trials - start)
        p = np.asarray(eval_price(law, uniforms(seed, start, n, 1)[:, 0]), dtype=float)
        if capacity_at is None:
            caps = np.full(n, instance.capacity, dtype=np.int64)
        else:
            caps = np.array([capacity_at(x) for x in p], dtype=np.int64)
        w, r = oap.simulate_static(V[:, None], caps[:, None], p[:, None])
        if cost is not None:
            sold = np.minimum(caps, (V[None, :] >= p[:, None]).sum(axis=1))
            w = w - np.asarray(cost)[sold]
        welfare[start:start + n] = w
        revenue[start:start + n] = r
    return welfare, revenue


def _deterministic_report(problem, algorithm, objective, value, opt, alpha, rel_tol=1e-9):
    report = exact_report(problem, algorithm, objective, value, opt, alpha, rel_tol)
    report.mode = "deterministic"
    return report


def evaluate(instance, algo: str = "static", objective: str = "welfare", mode: str = "exact",
             trials: int = DEFAULT_TRIALS, seed: int = 0, levels: Optional[Sequence[float]] = None,
             capacity_rule: str = "marginal") -> EvalReport:
    """Run ``algo`` on ``instance`` (object or JSON path) and compare with the offline optimum."""
    if isinstance(instance, (str, Path)):
        instance = instance_io.load(instance)
    problem = problem_of(instance)
    if algo not in ALGORITHMS[problem]:
        raise DomainError(f"algorithm {algo!r} not available for {problem}")
    if objective not in OBJECTIVES:
        raise DomainError(f"unknown objective {objective!r}")
    if mode not in MODES:
        raise DomainError(f"unknown mode {mode!r}")
    if mode == "mc" and trials < 1:
        raise DomainError("need at least one trial")

    if problem == "osp" and algo == "dynamic":
        schedule = osp.build_dynamic_schedule(instance.capacity, instance.bounds)
        out = osp.run_dynamic(instance, schedule)
        opt, _ = osp.offline_opt(instance)
        return _deterministic_report("osp", "osp-dynamic", objective, out.objective(objective),
                                     opt, schedule.alpha)

    if problem == "oap":
        if algo == "dynamic":
            dyn = oap.build_dynamic_prices(instance)
            out = oap.run_dynamic(instance, dyn)
            opt, _ = oap.offline_opt(instance)
            value = out.objective(objective)
            # finite-capacity replays of the dynamic rule are reported, not asserted
            return EvalReport("oap", "oap-dynamic", objective, "deterministic", value, 0.0, opt,
                              competitive_ratio(opt, value), dyn.alpha, None)
        if mode == "exact":
            raise UnsupportedModeError("exact mode needs one-dimensional randomness; use mode 'mc' for oap")
        return oap.mc_expected(instance, oap.build_static_laws(instance), trials, seed, objective)

    if problem == "osp":
        if algo == "single-leg":
            ladder = osp.build_single_leg_law(default_levels(instance) if levels is None else levels)
            stray = set(instance.valuations) - set(ladder.levels)
            if stray:
                raise DomainError(f"valuations {sorted(stray)[:3]} are not on the price ladder")
            law = ladder.law
        else:
            law = osp.build_static_law(instance.bounds)
        if mode == "exact":
            return osp.exact_expected(instance, law, objective)
        welfare, revenue = _mc_single(instance, law, trials, seed)
        opt, _ = osp.offline_opt(instance)
        samples = welfare if objective == "welfare" else revenue
        return oap.mc_report("osp", law.name, objective, samples, opt, law.alpha, trials, seed)

    law = oscc.build_static_law(instance.cost, instance.bounds)
    if mode == "exact":
        return oscc.exact_expected(instance, law, objective, capacity_rule)
    welfare, revenue = _mc_single(instance, law, trials, seed,
                                  oscc._cap_function(instance, capacity_rule),
                                  instance.cost.cumulative)
    opt, _ = oscc.offline_opt(instance)
    samples = welfare if objective == "welfare" else revenue
    return oap.mc_report("oscc", law.name, objective, samples, opt, law.alpha, trials, seed)


def report_json(report: EvalReport) -> str:
    return json.dumps(report.to_dict(), sort_keys=True, allow_nan=True)


# ---------------------------------------------------------------------------
# ratio table


TABLE_HEADER = ("theta", "C", "alpha_static", "alpha_dynamic_C", "alpha_oap", "alpha_oscc_example")


@dataclass(frozen=True)
class SweepRow:
    theta: float
    C: float  # math.inf for the large-capacity limit
    alpha_static: float
    alpha_dynamic_C: float
    alpha_oap: float
    alpha_oscc_example: float

    def cells(self) -> list:
        C = "inf" if math.isinf(self.C) else str(int(self.C))
        return [_fmt(self.theta), C, _fmt(self.alpha_static), _fmt(self.alpha_dynamic_C),
                _fmt(self.alpha_oap), _fmt(self.alpha_oscc_example)]


def _fmt(x: float) -> str:
    return repr(float(x))


def oscc_example_alpha(theta: float, L: float = 1.0) -> float:
    """Ratio for the linear cost f(y) = (L/2) y, from its conjugate at L and U."""
    bounds = Bounds(L, L * theta)
    cost = ConvexCost.from_marginals([L / 2.0])
    return oscc.static_alpha(cost, bounds)


def parse_capacity(C) -> float:
    if isinstance(C, str) and C.strip().lower() in ("inf", "infinity"):
        return math.inf
    value = int(C)
    if value < 1:
        raise DomainError(f"capacity must be positive, got {C}")
    return value


def ratio_table(thetas: Sequence[float], capacities: Sequence) -> list:
    rows = []
    for theta in thetas:
        theta = float(theta)
        if theta < 1.0:
            raise DomainError(f"theta must be >= 1, got {theta}")
        a_static = 1.0 + math.log(theta)
        a_oap = solve_omega(theta if theta > 1.0 else oap.DEGENERATE_THETA).alpha
        a_oscc = oscc_example_alpha(theta)
        for C in capacities:
            C = parse_capacity(C)
            a_dyn = a_static if math.isinf(C) else solve_alpha_c(int(C), theta).alpha
            rows.append(SweepRow(theta, C, a_static, a_dyn, a_oap, a_oscc))
    return rows


def table_csv(rows: Sequence[SweepRow]) -> str:
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TABLE_HEADER)
    for row in rows:
        writer.writerow(row.cells())
    return buf.getvalue()


# ---------------------------------------------------------------------------
# certification suites
#
# Every case draws its instance from a generator seeded by (suite seed, case
# index), so results do not depend on thread scheduling.


def _case_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), int(index)])


def _grid(suite: dict):
    return [(float(t), int(c)) for t in suite.get("thetas", [2, 10]) for c in suite.get("capacities", [1, 5, 50])]


def _osp_case(suite: dict, index: int):
    grid = _grid(suite)
    per = int(suite.get("instances", 1000))
    theta, C = grid[index // per]
    rng = _case_rng(suite["seed"], index)
    inst = adversary.random_osp(rng, C, Bounds(1.0, theta), int(suite.get("max_buyers", 200)))
    return inst


def _count_osp(suite: dict) -> int:
    return len(_grid(suite)) * int(suite.get("instances", 1000))


def run_osp_static(suite, index):
    inst = _osp_case(suite, index)
    return osp.exact_expected(inst, osp.build_static_law(inst.bounds), suite.get("objective", "welfare"))


def run_osp_dynamic(suite, index):
    return evaluate(_osp_case(suite, index), "dynamic", suite.get("objective", "welfare"))


def run_osp_tightness(suite, index):
    C, theta, m = int(suite.get("C", 50)), float(suite.get("theta", 10.0)), int(suite.get("m", 2000))
    inst = adversary.osp_batched_increasing(C, Bounds(1.0, theta), m)
    report = osp.exact_expected(inst, osp.build_static_law(inst.bounds))
    lower = float(suite.get("min_fraction", 0.99)) * report.alpha
    report.passed = bool(report.passed and report.ratio >= lower)
    return report


def run_osp_mc(suite, index):
    """Monte Carlo replay of the static law. The "floor" family (C buyers at L) is exactly tight."""
    if suite.get("family", "random") == "floor":
        C = int(suite.get("C", 5))
        inst = OspInstance(C, Bounds(1.0, float(suite.get("theta", 10.0))), [1.0] * C)
    else:
        inst = _osp_case(suite, index)
    law = osp.build_static_law(inst.bounds)
    trials = int(suite.get("trials", 10_000))
    seed = int(suite["seed"]) * 100_003 + index
    welfare, revenue = _mc_single(inst, law, trials, seed)
    objective = suite.get("objective", "welfare")
    samples = welfare if objective == "welfare" else revenue
    opt, _ = osp.offline_opt(inst)
    return oap.mc_report("osp", law.name, objective, samples, opt, law.alpha, trials, seed,
                         float(suite.get("sigmas", 3.0)))


def _count_osp_mc(suite: dict) -> int:
    if suite.get("family", "random") == "floor":
        return int(suite.get("instances", 100))
    return _count_osp(suite)


def run_single_leg(suite, index):
    rng = _case_rng(suite["seed"], index)
    levels, inst = adversary.random_single_leg(rng, int(suite.get("max_levels", 6)))
    return evaluate(inst, "single-leg", "revenue", "exact", levels=levels)


def run_oap_static(suite, index):
    rng = _case_rng(suite["seed"], index)
    inst = adversary.random_oap(rng, int(suite.get("max_items", 4)), int(suite.get("max_buyers", 50)),
                                int(suite.get("max_capacity", 10)))
    laws = oap.build_static_laws(inst)
    return oap.mc_expected(inst, laws, int(suite.get("trials", DEFAULT_TRIALS)), int(suite["seed"]) * 100_003 + index,
                           sigmas=float(suite.get("sigmas", 3.0)))


def run_oap_offline(suite, index):
    rng = _case_rng(suite["seed"], index)
    inst = adversary.random_oap(rng, int(suite.get("max_items", 3)), int(suite.get("max_buyers", 8)),
                                int(suite.get("max_capacity", 3)), max_theta=3.0)
    flow, _ = oap.offline_opt(inst)
    brute = oap.brute_force_opt(inst)
    return EvalReport("oap", "offline-flow", "welfare", "exact", flow, 0.0, brute,
                      competitive_ratio(brute, flow), 1.0, bool(flow == brute))


def random_oscc(rng: np.random.Generator, max_capacity: int = 20, max_buyers: int = 100) -> OsccInstance:
    """Random convex cost with h(L) > 0 and a uniform / sorted valuation stream."""
    C = int(rng.integers(1, max_capacity + 1))
    L = float(rng.uniform(0.5, 2.0))
    U = L * float(rng.uniform(1.2, 10.0))
    bounds = Bounds(L, U)
    while True:
        cost = adversary.random_convex_cost(rng, C, float(rng.uniform(0.1, 1.5)) * U)
        if cost.marginals[0] < L:
            break
    n = int(rng.integers(0, max_buyers + 1))
    v = rng.uniform(L, U, n)
    if rng.random() < 0.4:
        v = np.sort(v)
    return OsccInstance(cost, bounds, v.tolist())


def run_oscc_static(suite, index):
    rng = _case_rng(suite["seed"], index)
    inst = random_oscc(rng, int(suite.get("max_capacity", 20)), int(suite.get("max_buyers", 100)))
    return oscc.exact_expected(inst, oscc.build_static_law(inst.cost, inst.bounds))


def run_oscc_det_worst(suite, index):
    """Price L on the batched instance: ratio should be close to h(U)/h(L)."""
    C, theta, m = int(suite.get("C", 10)), float(suite.get("theta", 5.0)), int(suite.get("m", 400))
    bounds = Bounds(1.0, theta)
    cost = ConvexCost.from_marginals(np.linspace(0.0, 0.5, C))
    inst = adversary.oscc_batched_increasing(cost, bounds, m)
    out = oscc.run_static(inst, bounds.L)
    opt, _ = oscc.offline_opt(inst)
    conj = Conjugate(cost)
    target = conjugate_value(conj, bounds.U)[0] / conjugate_value(conj, bounds.L)[0]
    ratio = competitive_ratio(opt, out.welfare)
    tol = float(suite.get("rel_tol", 0.02))
    return EvalReport("oscc", "price-L", "welfare", "deterministic", out.welfare, 0.0, opt, ratio,
                      target, bool(abs(ratio - target) <= tol * target))


@dataclass(frozen=True)
class SuiteKind:
    runner: object
    count: object
    statistical: bool = False


SUITE_KINDS = {
    "osp_static": SuiteKind(run_osp_static, _count_osp),
    "osp_dynamic": SuiteKind(run_osp_dynamic, _count_osp),
    "osp_tightness": SuiteKind(run_osp_tightness, lambda s: 1),
    "osp_mc": SuiteKind(run_osp_mc, _count_osp_mc, statistical=True),
    "single_leg": SuiteKind(run_single_leg, lambda s: int(s.get("instances", 500))),
    "oap_static": SuiteKind(run_oap_static, lambda s: int(s.get("instances", 200)), statistical=True),
    "oap_offline": SuiteKind(run_oap_offline, lambda s: int(s.get("instances", 500))),
    "oscc_static": SuiteKind(run_oscc_static, lambda s: int(s.get("instances", 500))),
    "oscc_det_worst": SuiteKind(run_oscc_det_worst, lambda s: 1),
}

DEFAULT_CONFIG = {
    "seed": 7,
    "suites": [
        {"name": "osp-static-welfare", "kind": "osp_static", "objective": "welfare", "seed": 1},
        {"name": "osp-static-revenue", "kind": "osp_static", "objective": "revenue", "seed": 1},
        {"name": "osp-dynamic", "kind": "osp_dynamic", "seed": 1},
        {"name": "osp-tightness", "kind": "osp_tightness", "C": 50, "theta": 10, "m": 2000},
        {"name": "single-leg", "kind": "single_leg", "instances": 500, "seed": 2},
        {"name": "oap-static", "kind": "oap_static", "instances": 200, "trials": 100000, "seed": 3},
        {"name": "oap-offline", "kind": "oap_offline", "instances": 500, "seed": 4},
        {"name": "oscc-static", "kind": "oscc_static", "instances": 500, "seed": 5},
        {"name": "oscc-det-worst", "kind": "oscc_det_worst", "m": 400},
    ],
}

SUMMARY_HEADER = ("suite", "kind", "cases", "violations", "statistical", "status", "max_ratio_over_alpha")


class ConfigError(ValueError):
    pass


def load_config(path) -> dict:
    text = Path(path).read_text()
    try:
        config = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}: {exc.msg}") from None
    return validate_config(config)


def validate_config(config: dict) -> dict:
    if not isinstance(config, dict) or not isinstance(config.get("suites"), list):
        raise ConfigError("config must be an object with a 'suites' list")
    seed = int(config.get("seed", 0))
    suites, names = [], set()
    for i, raw in enumerate(config["suites"]):
        if not isinstance(raw, dict) or raw.get("kind") not in SUITE_KINDS:
            raise ConfigError(f"suite {i}: unknown kind {raw.get('kind') if isinstance(raw, dict) else raw!r}")
        suite = dict(raw)
        suite.setdefault("name", f"{suite['kind']}-{i}")
        if suite["name"] in names:
            raise ConfigError(f"duplicate suite name {suite['name']!r}")
        names.add(suite["name"])
        suite.setdefault("seed", seed)
        suites.append(suite)
    return {"seed": seed, "suites": suites}


def thread_count() -> int:
    raw = os.environ.get(THREADS_ENV, "0")
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    return n if n > 0 else (os.cpu_count() or 1)


@dataclass
class SuiteResult:
    name: str
    kind: str
    reports: list
    statistical: bool

    @property
    def violations(self) -> int:
        return sum(1 for r in self.reports if r.passed is False)

    @property
    def status(self) -> str:
        if self.violations == 0:
            return "pass"
        return "statistical-fail" if self.statistical else "fail"

    def max_ratio_over_alpha(self) -> float:
        vals = [r.ratio / r.alpha for r in self.reports if r.alpha]
        return max(vals) if vals else float("nan")

    def summary_cells(self) -> list:
        return [self.name, self.kind, str(len(self.reports)), str(self.violations),
                str(self.statistical).lower(), self.status, f"{self.max_ratio_over_alpha():.9f}"]


def run_suites(config: dict, threads: Optional[int] = None) -> list:
    config = validate_config(config)
    jobs = []
    for suite in config["suites"]:
        kind = SUITE_KINDS[suite["kind"]]
        jobs.extend((suite, kind.runner, i) for i in range(kind.count(suite)))
    workers = thread_count() if threads is None else max(1, threads)
    if workers == 1:
        reports = [runner(suite, i) for suite, runner, i in jobs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            # map yields in submission order, whatever order the cases finish in
            reports = list(pool.map(lambda job: job[1](job[0], job[2]), jobs))
    results, pos = [], 0
    for suite in config["suites"]:
        kind = SUITE_KINDS[suite["kind"]]
        n = kind.count(suite)
        results.append(SuiteResult(suite["name"], suite["kind"], reports[pos:pos + n], kind.statistical))
        pos += n
    return results


def summary_csv(results: Sequence[SuiteResult]) -> str:
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SUMMARY_HEADER)
    for res in results:
        writer.writerow(res.summary_cells())
    return buf.getvalue()


def write_bundle(results: Sequence[SuiteResult], out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for i, res in enumerate(results):
        lines = "".join(report_json(r) + "\n" for r in res.reports)
        (out / f"{i:02d}-{res.name}.jsonl").write_text(lines)
    (out / "summary.csv").write_text(summary_csv(results))
    return out


def certify_suite(config, out_dir, threads: Optional[int] = None):
    """Run every suite, write the bundle, return (exit status, results)."""
    if isinstance(config, (str, Path)):
        config = load_config(config)
    results = run_suites(config, threads)
    write_bundle(results, out_dir)
    status = 0 if all(r.violations == 0 for r in results) else 1
    return status, results
