"""Radius scalings of the ball estimates: derivative bounds of s-harmonic fields and bubble-type sup bounds."""

import argparse

from fraclap import constants
from fraclap.catalog import constant, cos_x1, harmonic_exterior, power
from fraclap.schauder import verify_lemma_derivative_estimate, verify_lemma_supnorm_estimate

RADII = [1.0, 0.5, 0.25, 0.125]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--orders", type=float, nargs="+", default=[0.25, 0.5, 0.75])
    a = ap.parse_args(argv)
    for s in a.orders:
        k = constants(2, s)
        d = verify_lemma_derivative_estimate([harmonic_exterior(2, i) for i in range(4)], RADII, 1, k)
        print(f"s={s} |Du| slopes {[round(e, 3) for e in d.extras['exponents']]} "
              f"spread {d.extras['constant_spread']:.2f} {'pass' if d.passed else 'FAIL'}")
        m = verify_lemma_supnorm_estimate([constant(2), cos_x1(2), power(2, 0.5)], RADII, k)
        print(f"s={s} sup slopes {[round(e, 3) for e in m.extras['exponents']]} "
              f"grad {[round(e, 3) for e in m.extras['gradient_exponents']]} {'pass' if m.passed else 'FAIL'}")


if __name__ == "__main__":
    main()
