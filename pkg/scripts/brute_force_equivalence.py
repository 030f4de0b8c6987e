"""Exhaustive comparison of the reduction algorithm with brute-force search."""

import argparse
import sys
import time

from swanpsi.oracle import SearchBudget, brute_force_equivalence
from swanpsi.tower import LocalFieldTower, TowerStep


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--q", type=int, default=3)
    ap.add_argument("--no-var", action="store_true", help="residue field F_q instead of F_q(T)")
    ap.add_argument("--pole", type=int, default=4)
    ap.add_argument("--coeff-degree", type=int, default=2)
    args = ap.parse_args()
    p = min(x for x in range(2, args.q + 1) if args.q % x == 0)
    steps = [] if args.no_var else [TowerStep.constant("T")]
    lvl = LocalFieldTower(p, args.q, steps).top
    t0 = time.perf_counter()
    rep = brute_force_equivalence(lvl, args.pole, args.coeff_degree,
                                  SearchBudget(max_pole=args.pole, coeff_degree=args.coeff_degree,
                                               q_max=args.q))
    dt = time.perf_counter() - t0
    print(f"elements={rep['total']} mismatches={len(rep['mismatches'])} "
          f"spot_checks={rep['spot_checks']} spot_agree={rep['spot_agree']} seconds={dt:.1f}")
    for a, x, y in rep["mismatches"][:10]:
        print(f"  {a}: reduction {x}, search {y}")
    return 1 if rep["mismatches"] or not rep["spot_agree"] else 0


if __name__ == "__main__":
    sys.exit(main())
