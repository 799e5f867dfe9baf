"""Monte Carlo polymer coefficients against the d = 2, 3 closed forms.

    python scripts/corollary_table.py --samples 1e6 --seed 1 --n-max 6
"""

import argparse
import csv
import sys

from dimred import bp_coefficient, bp_exact_coefficient


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--samples", type=float, default=1e6)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--n-max", type=int, default=6)
    p.add_argument("--dims", type=int, nargs="+", default=[2, 3])
    args = p.parse_args(argv)

    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["d", "n", "method", "mc_mean", "mc_std_error", "exact", "z"])
    for d in args.dims:
        for n in range(1, args.n_max + 1):
            res = bp_coefficient(n, d, n_samples=int(args.samples), seed=args.seed)
            est = res.value
            exact = bp_exact_coefficient(n, d)
            z = est.z_score(exact)
            w.writerow([d, n, res.method, repr(est.mean), repr(est.std_error), repr(exact), f"{z:.3f}"])
            sys.stdout.flush()


if __name__ == "__main__":
    main()
