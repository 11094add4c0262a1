"""Command line entry point: ``pricing-lab <subcommand> ...``.

Exit status: 0 pass, 1 guarantee violation, 2 usage or parse error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import adversary, harness, oap, oscc, osp
from . import io as instance_io
from .core import Bounds, ConvexCost, DomainError, InstanceError, eval_price
from .rng import uniforms

EXIT_PASS, EXIT_VIOLATION, EXIT_USAGE = 0, 1, 2


def _floats(text: str) -> list:
    return [float(x) for x in text.split(",") if x.strip()]


def _emit(text: str, out) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _load(args):
    if args.instance is None:
        raise InstanceError("--instance is required")
    instance = instance_io.load(args.instance)
    if args.problem is not None and harness.problem_of(instance) != args.problem:
        raise InstanceError(f"instance is {harness.problem_of(instance)!r}, --problem says {args.problem!r}")
    if args.algo not in harness.ALGORITHMS[harness.problem_of(instance)]:
        raise DomainError(f"algorithm {args.algo!r} not available for {harness.problem_of(instance)}")
    return instance


def cmd_price(args) -> int:
    """Describe the price law (or schedule) the chosen algorithm would use."""
    instance = _load(args)
    problem = harness.problem_of(instance)
    xs = _floats(args.x) if args.x else [0.0, 0.25, 0.5, 0.75, 1.0]
    doc = {"problem": problem, "algorithm": args.algo}
    if problem == "osp" and args.algo == "dynamic":
        sched = osp.build_dynamic_schedule(instance.capacity, instance.bounds)
        doc.update(alpha=sched.alpha, gamma=sched.gamma, schedule=list(sched.prices))
    elif problem == "oap" and args.algo == "dynamic":
        dyn = oap.build_dynamic_prices(instance)
        doc.update(alpha=dyn.alpha, omega=list(dyn.omegas),
                   first_price=[dyn.price(k, 0) for k in range(instance.n_items)])
    elif problem == "oap":
        laws = oap.build_static_laws(instance)
        doc.update(alpha=laws.alpha, omega=list(laws.omegas), x=xs,
                   prices=[[float(eval_price(law, x)) for x in xs] for law in laws.laws])
    else:
        if problem == "oscc":
            law = oscc.build_static_law(instance.cost, instance.bounds)
        elif args.algo == "single-leg":
            levels = _floats(args.levels) if args.levels else harness.default_levels(instance)
            law = osp.build_single_leg_law(levels).law
        else:
            law = osp.build_static_law(instance.bounds)
        doc.update(alpha=law.alpha, x=xs, prices=[float(eval_price(law, x)) for x in xs])
    _emit(json.dumps(doc) + "\n", args.out)
    return EXIT_PASS


def cmd_run(args) -> int:
    """One replay: static prices from a single draw (``--x`` or seeded), dynamic prices as defined."""
    instance = _load(args)
    problem = harness.problem_of(instance)
    width = instance.n_items if problem == "oap" else 1
    xs = _floats(args.x) if args.x else uniforms(args.seed, 0, 1, width)[0].tolist()
    if len(xs) != width:
        raise DomainError(f"need {width} draw(s), got {len(xs)}")
    if problem == "oap":
        if args.algo == "dynamic":
            out, prices = oap.run_dynamic(instance, oap.build_dynamic_prices(instance)), None
        else:
            prices = oap.build_static_laws(instance).prices(xs).tolist()
            out = oap.run_static(instance, prices)
    elif problem == "osp" and args.algo == "dynamic":
        out, prices = osp.run_dynamic(instance, osp.build_dynamic_schedule(instance.capacity, instance.bounds)), None
    elif problem == "oscc":
        prices = float(eval_price(oscc.build_static_law(instance.cost, instance.bounds), xs[0]))
        out = oscc.run_static(instance, prices)
    else:
        if args.algo == "single-leg":
            levels = _floats(args.levels) if args.levels else harness.default_levels(instance)
            law = osp.build_single_leg_law(levels).law
        else:
            law = osp.build_static_law(instance.bounds)
        prices = float(eval_price(law, xs[0]))
        out = osp.run_static(instance, prices)
    doc = {"problem": problem, "algorithm": args.algo, "x": xs, "prices": prices,
           "decisions": out.decisions, "units_sold": out.units_sold, "welfare": out.welfare,
           "revenue": out.revenue, "utility": out.utility, "cost": out.cost}
    _emit(json.dumps(doc) + "\n", args.out)
    return EXIT_PASS


def cmd_expect(args) -> int:
    instance = _load(args)
    levels = _floats(args.levels) if args.levels else None
    report = harness.evaluate(instance, args.algo, args.objective, args.mode, args.trials, args.seed, levels)
    _emit(harness.report_json(report) + "\n", args.out)
    return EXIT_VIOLATION if report.passed is False else EXIT_PASS


FAMILIES = ("osp-batched", "osp-det-worst", "oap-two-stage", "oscc-batched", "single-leg")


def cmd_adversary(args) -> int:
    bounds = Bounds(args.L, args.U)
    fam = args.family
    if fam == "osp-batched":
        inst = adversary.osp_batched_increasing(args.C, bounds, args.m, args.top)
    elif fam == "osp-det-worst":
        inst = adversary.osp_det_static_worst(args.C, bounds)
    elif fam == "oap-two-stage":
        inst = adversary.oap_two_stage(args.K, args.C, bounds, args.m, top=args.top)
    elif fam == "oscc-batched":
        if not args.cost:
            raise DomainError("--cost (cumulative f(0..C)) is required for oscc-batched")
        inst = adversary.oscc_batched_increasing(ConvexCost(_floats(args.cost)), bounds, args.m, args.top)
    else:
        if not args.levels:
            raise DomainError("--levels is required for single-leg")
        inst = adversary.single_leg_increasing(_floats(args.levels), args.C, args.upto)
    _emit(instance_io.dumps(inst), args.out)
    return EXIT_PASS


def cmd_sweep(args) -> int:
    thetas = _floats(args.thetas)
    caps = [c.strip() for c in args.capacities.split(",") if c.strip()]
    _emit(harness.table_csv(harness.ratio_table(thetas, caps)), args.out)
    return EXIT_PASS


def cmd_certify(args) -> int:
    config = harness.load_config(args.config) if args.config else harness.DEFAULT_CONFIG
    out = args.out or "certify-bundle"
    status, results = harness.certify_suite(config, out)
    sys.stdout.write(harness.summary_csv(results))
    return status


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pricing-lab", description=__doc__.splitlines()[0],
                                     allow_abbrev=False)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, algos=("static", "dynamic", "single-leg")):
        p.add_argument("--instance", help="instance JSON file")
        p.add_argument("--problem", choices=harness.ALGORITHMS.keys())
        p.add_argument("--algo", choices=algos, default="static")
        p.add_argument("--levels", help="comma-separated price ladder for single-leg")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", help="output file (default: standard output)")

    p = sub.add_parser("price", help="show the price law or schedule", allow_abbrev=False)
    common(p)
    p.add_argument("--x", help="comma-separated uniform draws at which to evaluate the law")
    p.set_defaults(fn=cmd_price)

    p = sub.add_parser("run", help="replay one draw of an algorithm", allow_abbrev=False)
    common(p)
    p.add_argument("--x", help="explicit uniform draw(s), one per item")
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("expect", help="expected value, OPT and ratio as one JSON report", allow_abbrev=False)
    common(p)
    p.add_argument("--objective", choices=harness.OBJECTIVES, default="welfare")
    p.add_argument("--mode", choices=harness.MODES, default="exact")
    p.add_argument("--trials", type=int, default=harness.DEFAULT_TRIALS)
    p.set_defaults(fn=cmd_expect)

    p = sub.add_parser("adversary", help="emit a hard instance as JSON", allow_abbrev=False)
    p.add_argument("--family", choices=FAMILIES, required=True)
    p.add_argument("--C", type=int, default=1)
    p.add_argument("--K", type=int, default=2)
    p.add_argument("--L", type=float, default=1.0)
    p.add_argument("--U", type=float, default=10.0)
    p.add_argument("--m", type=int, default=100)
    p.add_argument("--top", type=float)
    p.add_argument("--cost", help="comma-separated cumulative cost f(0..C)")
    p.add_argument("--levels", help="comma-separated price ladder")
    p.add_argument("--upto", type=int, help="number of ladder levels to include")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_adversary)

    p = sub.add_parser("sweep", help="ratio table as CSV", allow_abbrev=False)
    p.add_argument("--thetas", default="1,2,2.718281828459045,5,10,100")
    p.add_argument("--capacities", default="1,2,5,10,100,1000,inf")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_sweep)

    p = sub.add_parser("certify", help="run the certification suites", allow_abbrev=False)
    p.add_argument("--config", help="suite config JSON (default: built-in suites)")
    p.add_argument("--out", help="bundle directory (default: ./certify-bundle)")
    p.set_defaults(fn=cmd_certify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (InstanceError, DomainError, harness.ConfigError, OSError) as exc:
        sys.stderr.write(f"pricing-lab: error: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
