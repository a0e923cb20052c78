"""Schauder ratio sweep: LHS/RHS along z = 2^-j e1 for |x|^alpha data on B_1."""

import argparse
import csv
import sys

from fraclap import Ball, DirichletProblem, ModulusSpec, constants
from fraclap.catalog import constant, power
from fraclap.schauder import CascadeConfig, default_pairs, verify_schauder


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--orders", type=float, nargs="+", default=[0.25, 0.75])
    ap.add_argument("--alpha", type=float, default=0.5)
    ap.add_argument("--jmax", type=int, default=8)
    a = ap.parse_args(argv)
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["s", "j", "lhs", "rhs", "ratio"])
    for s in a.orders:
        k = constants(2, s)
        p = DirichletProblem(Ball.unit(2), power(2, a.alpha), constant(2, 0.0), s)
        rep = verify_schauder(p, ModulusSpec.power(1.0, a.alpha), default_pairs(2, range(3, a.jmax + 1)),
                              CascadeConfig(order=s), k)
        for j, pr in zip(range(3, a.jmax + 1), rep.probes):
            w.writerow([s, j, f"{pr.lhs:.6e}", f"{pr.rhs:.6e}", f"{pr.ratio:.4f}"])
        print(f"# s={s} fitted exponent {rep.fitted_exponent:.4f}", file=sys.stderr)


if __name__ == "__main__":
    main()
