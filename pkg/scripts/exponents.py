"""Exponent and critical-activity estimates from the exact d = 2, 3 tables.

Prints least-squares and ratio-method estimates for several fit windows,
plus the ratio of the leading d = 3 asymptotic form to the exact values.
"""

import argparse
import math

from dimred import bp_exact_coefficient, exact_bp_table, fit_theta, ratio_extrapolate, stirling_asymptotic


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--windows", nargs="+", default=["10:50", "20:100", "50:200", "100:500"])
    args = p.parse_args(argv)

    for d in (2, 3):
        print(f"d={d}")
        for win in args.windows:
            lo, hi = map(int, win.split(":"))
            table = exact_bp_table(d, hi)
            fit = fit_theta(table, (lo, hi))
            zc, th = ratio_extrapolate(table)
            print(f"  window {lo:>3}-{hi:<3}  fit theta={fit.theta:.5f} z_c={fit.z_c:.8f}  "
                  f"ratio theta={th:.5f} z_c={zc:.8f}")
    print(f"reference: 1/(2pi) = {1 / (2 * math.pi):.8f}, 1/(2pi e) = {1 / (2 * math.pi * math.e):.8f}")
    print("N    asymptotic/exact (d=3)")
    for n in (1, 2, 5, 10, 20, 50, 100, 200):
        print(f"{n:<4} {stirling_asymptotic(n) / bp_exact_coefficient(n, 3):.6f}")


if __name__ == "__main__":
    main()
