"""Case counts and mismatches of the Artin-Schreier case split on random best characters."""

import argparse
import sys
from collections import Counter

from swanpsi.oracle import case_split_suite
from swanpsi.tower import LocalFieldTower, TowerStep


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--p", type=int, default=3)
    ap.add_argument("--f", default="u^-1")
    ap.add_argument("--count", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    tower = LocalFieldTower(args.p, args.p, [TowerStep.constant("T"),
                                             TowerStep.artin_schreier(args.f)])
    rep = case_split_suite(tower, args.count, seed=args.seed)
    by_twist = Counter((getattr(r, "twist", 1), r.case) for r in rep["results"])
    print("twist\tcase\tcount")
    for (e, case), k in sorted(by_twist.items()):
        print(f"{e}\t{case}\t{k}")
    for r in rep["boundary"][:10]:
        print(f"# boundary: {r.a}  Sw_K={r.sw_K} Sw_L={r.sw_L}", file=sys.stderr)
    print(f"# total={rep['total']} mismatches={len(rep['mismatches'])}", file=sys.stderr)
    return 1 if rep["mismatches"] else 0


if __name__ == "__main__":
    sys.exit(main())
