"""Print the ratio table as CSV (same output as ``pricing-lab sweep``)."""

import argparse
import sys

from pricing_lab import harness


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--thetas", default="1,1.5,2,2.718281828459045,5,10,100")
    ap.add_argument("--capacities", default="1,2,5,10,100,1000,10000,inf")
    args = ap.parse_args()
    thetas = [float(t) for t in args.thetas.split(",")]
    rows = harness.ratio_table(thetas, args.capacities.split(","))
    sys.stdout.write(harness.table_csv(rows))


if __name__ == "__main__":
    main()
