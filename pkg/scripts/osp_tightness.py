"""Static-price ratio on the batched increasing family as the value grid gets finer.

    python3 scripts/osp_tightness.py --C 50 --theta 10 --levels 10,100,1000,2000
"""

import argparse
import math

from pricing_lab import Bounds
from pricing_lab import adversary, osp


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--C", type=int, default=50)
    ap.add_argument("--theta", type=float, default=10.0)
    ap.add_argument("--levels", default="10,100,1000,2000")
    args = ap.parse_args()

    b = Bounds(1.0, args.theta)
    law = osp.build_static_law(b)
    print(f"C={args.C} theta={args.theta} alpha=1+ln(theta)={law.alpha:.6f}")
    print("m,opt,expected,ratio,ratio_over_alpha")
    for m in (int(x) for x in args.levels.split(",")):
        rep = osp.exact_expected(adversary.osp_batched_increasing(args.C, b, m), law)
        print(f"{m},{rep.opt:.6f},{rep.expected:.6f},{rep.ratio:.6f},{rep.ratio / law.alpha:.6f}")
    sched = osp.build_dynamic_schedule(args.C, b)
    gap = sched.alpha - (1 + math.log(args.theta))
    print(f"dynamic alpha^C={sched.alpha:.6f} (gap to the static ratio {gap:.2e})")


if __name__ == "__main__":
    main()
