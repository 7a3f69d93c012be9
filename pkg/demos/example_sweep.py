"""Sweep alpha over the four example families and print the value table.

Usage: python demos/example_sweep.py [--step 0.5]
"""

import argparse

from qprelax import ExampleFamily, closed_form_values, example_family
from qprelax.builders import build_R, build_Rplus, build_SR, build_SRplus
from qprelax.conic import solve

PROBLEMS = (("R", build_R), ("R+", build_Rplus), ("SR", build_SR),
            ("SR+", build_SRplus))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--step", type=float, default=1.0)
    args = ap.parse_args()
    count = int(round(8 / args.step)) + 1
    alphas = [-4 + i * args.step for i in range(count)]
    for fam in ExampleFamily:
        print(f"\n{fam.value}")
        print("alpha".rjust(7) + "".join(n.rjust(11) for n, _ in PROBLEMS)
              + "nu*".rjust(11))
        for a in alphas:
            inst = example_family(fam, a)
            cells = [str(solve(b(inst)[0]).value) for _, b in PROBLEMS]
            star = closed_form_values(fam, a).nu_star
            print(f"{a:7.2f}" + "".join(c[:10].rjust(11) for c in cells)
                  + str(star)[:10].rjust(11))


if __name__ == "__main__":
    main()
