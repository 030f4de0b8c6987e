"""Print the psi lower envelope next to the closed-form psi for a degree-p tower.

    python3 scripts/envelope_table.py --p 3 --m 1
"""

import argparse
import csv
import sys

from swanpsi.oracle import SearchBudget, default_grid, envelope_report
from swanpsi.psi import psi_for_tower
from swanpsi.tower import LocalFieldTower, TowerStep


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--p", type=int, default=3)
    ap.add_argument("--m", type=int, default=1)
    ap.add_argument("--f", help="Artin-Schreier polynomial (default u^-m)")
    ap.add_argument("--emax", type=int, default=4)
    ap.add_argument("--twist-max", type=int, default=8)
    args = ap.parse_args()
    f = args.f or f"u^-{args.m}"
    tower = LocalFieldTower(args.p, args.p, [TowerStep.constant("T"),
                                             TowerStep.artin_schreier(f)])
    psi, delta = psi_for_tower(tower)
    rep = envelope_report(tower, psi, default_grid(args.p, args.emax),
                          SearchBudget(twist_max=args.twist_max))
    w = csv.writer(sys.stdout, delimiter="\t", lineterminator="\n")
    w.writerow(["t", "psi", "bound", "raw", "e", "n", "label", "strict", "first_case"])
    for pt in rep["points"]:
        s = pt.source
        w.writerow([pt.t, psi.eval(pt.t), pt.rounded, pt.raw, s.get("e", ""), s.get("n", ""),
                    s.get("label", ""), s.get("strict", ""), s.get("first_case", "")])
    print(f"# delta_tor={delta} exceed={len(rep['exceed'])} miss={len(rep['miss'])}",
          file=sys.stderr)
    return 1 if rep["exceed"] or rep["miss"] else 0


if __name__ == "__main__":
    sys.exit(main())
