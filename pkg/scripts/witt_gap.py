"""Greedy length-2 reduction against exhaustive search; prints every row with a gap."""

import argparse

from swanpsi.oracle import witt_gap_report


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--p", type=int, default=2)
    ap.add_argument("--pole", type=int, default=2)
    ap.add_argument("--search-pole", type=int)
    args = ap.parse_args()
    rep = witt_gap_report(args.p, 2, args.pole, args.search_pole)
    print("vector\tgreedy\tsearch")
    for rep_, g, b in rep["rows"]:
        if g != b:
            print(f"{rep_}\t{g}\t{b}")
    print(f"# {rep['count']} vectors, {rep['nonzero_gaps']} gaps, max gap {rep['max_gap']}")


if __name__ == "__main__":
    main()
