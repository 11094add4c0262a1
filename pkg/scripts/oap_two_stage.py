"""Tightness diagnostic on the two-stage assignment instance.

Reports the Monte Carlo ratio of the static item laws under both buyer rules
("in-stock" and "walk-away") next to alpha. Only the bound direction is
guaranteed, and only for the in-stock rule.

    python3 scripts/oap_two_stage.py --sizes 5x5,10x10,20x20 --trials 20000
"""

import argparse
import math

from pricing_lab import Bounds
from pricing_lab import adversary, oap


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", default="5x5,10x10,20x20", help="comma-separated KxC pairs")
    ap.add_argument("--theta", type=float, default=math.e)
    ap.add_argument("--m", type=int, default=500)
    ap.add_argument("--trials", type=int, default=20_000)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()

    b = Bounds(1.0, args.theta)
    print("K,C,alpha,opt,ratio_in_stock,stderr_in_stock,ratio_walk_away,stderr_walk_away")
    for size in args.sizes.split(","):
        K, C = (int(x) for x in size.lower().split("x"))
        inst = adversary.oap_two_stage(K, C, b, args.m)
        laws = oap.build_static_laws(inst)
        cells = [str(K), str(C), f"{laws.alpha:.6f}"]
        for i, rule in enumerate(oap.STOCK_RULES):
            rep = oap.mc_expected(inst, laws, args.trials, args.seed, stock_rule=rule)
            if i == 0:
                cells.append(f"{rep.opt:.6f}")
            # delta method: stderr of OPT / mean
            cells += [f"{rep.ratio:.6f}", f"{rep.ratio * rep.stderr / rep.expected:.6f}"]
        print(",".join(cells), flush=True)


if __name__ == "__main__":
    main()
