"""Hoelder exponent of the Riesz potential across the edge of a plateau, smooth and sharp."""

import argparse

from fraclap import constants
from fraclap.catalog import plateau, smooth_plateau
from fraclap.schauder import default_riesz_pairs, verify_riesz_holder


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--orders", type=float, nargs="+", default=[0.25, 0.75])
    ap.add_argument("--jmax", type=int, default=8)
    a = ap.parse_args(argv)
    js = range(3, a.jmax + 1)
    for name, f in (("smooth", smooth_plateau(2)), ("sharp", plateau(2))):
        for s in a.orders:
            rep = verify_riesz_holder(f, s, default_riesz_pairs((0.5, 0.0), 2, js), constants(2, s))
            print(f"{name:6s} s={s} exponent {rep.fitted_exponent:.3f} "
                  f"target {rep.extras['target_exponent']:.3f} {'pass' if rep.passed else 'FAIL'}")


if __name__ == "__main__":
    main()
