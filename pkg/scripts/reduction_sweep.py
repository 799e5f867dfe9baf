"""Pass rates of the order-by-order gas/polymer check over many seeds.

    python scripts/reduction_sweep.py --D 2 --orders 2 3 4 --seeds 20 --samples 1e6
"""

import argparse
import time

from dimred import HARD_CORE, gaussian, verify_order


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--D", type=int, default=2)
    p.add_argument("--orders", type=int, nargs="+", default=[2, 3, 4])
    p.add_argument("--seeds", type=int, default=20)
    p.add_argument("--samples", type=float, default=1e6)
    p.add_argument("--potential", choices=["hard-core", "gaussian"], default="hard-core")
    args = p.parse_args(argv)
    pot = HARD_CORE if args.potential == "hard-core" else gaussian()

    print("n  passed  max_z   mean_lhs          mean_rhs_mapped   seconds")
    for n in args.orders:
        t0 = time.perf_counter()
        reps = [verify_order(n, args.D, pot, int(args.samples), seed) for seed in range(args.seeds)]
        passed = sum(r.passed for r in reps)
        lhs = sum(r.lhs.value.mean for r in reps) / len(reps)
        rhs = sum(r.rhs_mapped.mean for r in reps) / len(reps)
        zmax = max(r.z_score for r in reps)
        print(f"{n}  {passed:2d}/{len(reps):<3d} {zmax:6.2f}  {lhs: .10f}  {rhs: .10f}  {time.perf_counter() - t0:7.1f}")


if __name__ == "__main__":
    main()
