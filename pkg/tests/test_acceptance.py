"""Acceptance suite A1-A10.

Each criterion prints one ``A<k> PASS|FAIL ...`` line (also repeated in the
pytest terminal summary).  Run directly with ``python tests/test_acceptance.py``.
"""

import json
import os
import sys
import tempfile
import time

import numpy as np
import pytest

from fraclap import Ball, DirichletProblem, ModulusSpec, QuadBudget, ScalarField, constants
from fraclap.catalog import bump, constant, cos_x1, harmonic_exterior, plateau, power, smooth_plateau
from fraclap.cli import run
from fraclap.kernels import bubble_field
from fraclap.quad import exterior_poisson_integral, frac_laplacian, riesz_field
from fraclap.ballsolver import solve_dirichlet
from fraclap.schauder import (CascadeConfig, VerificationReport, default_pairs, default_riesz_pairs,
                              dyadic_cascade, verify_lemma_derivative_estimate, verify_lemma_supnorm_estimate,
                              verify_riesz_holder, verify_schauder)

RESULTS = []
RADII = [1.0, 0.5, 0.25, 0.125]


def _record(name, limit, fn):
    t = time.perf_counter()
    ok, detail = fn()
    dt = time.perf_counter() - t
    in_time = dt <= limit
    line = f"{name} {'PASS' if ok and in_time else 'FAIL'} ({dt:.1f}s / {limit:.0f}s) {detail}"
    if not in_time:
        line += " [over time limit]"
    RESULTS.append(line)
    print(line, flush=True)
    return ok and in_time, line


def a1():
    worst = 0.0
    one = constant(2, 1.0)
    for s in (0.25, 0.5, 0.75):
        k = constants(2, s)
        for r in (1.0, 0.25):
            B = Ball((0.0, 0.0), r)
            for x in ([0, 0], [0.3, 0], [0.6, 0.2]):
                v = exterior_poisson_integral(one, r * np.array(x, float), B, k).value
                worst = max(worst, abs(v - 1))
    return worst <= 1e-4, f"max |int P - 1| = {worst:.2e} (tol 1e-4)"


def a2():
    worst = 0.0
    for s in (0.25, 0.75):
        k = constants(2, s)
        for xi in (1.0, 2.0):
            f = ScalarField(lambda P, xi=xi: np.cos(xi * P[:, 0]), 2, decay=(1.0, 0.0), smoothness="smooth")
            v = frac_laplacian(f, [0, 0], k).value
            worst = max(worst, abs(v / xi ** (2 * s) - 1))
    return worst <= 1e-3, f"max relative symbol error = {worst:.2e} (tol 1e-3)"


def a3():
    worst = 0.0
    for s in (0.25, 0.75):
        k = constants(2, s)
        b = bubble_field(Ball.unit(2), 1.0, k)
        for x in ([0, 0], [0.3, 0], [0, 0.5]):
            worst = max(worst, abs(frac_laplacian(b, x, k).value - 1))
    return worst <= 2e-3, f"max |(-D)^s bubble - 1| = {worst:.2e} (tol 2e-3)"


def a4():
    k = constants(2, 0.5)
    f = bump(2, 1.0)
    u = riesz_field(f, k, QuadBudget(radial_nodes=6, grading_levels=3, arc_nodes=4, arc_levels=1), interfaces=())
    qo = QuadBudget(radial_nodes=6, angular_nodes=32, inner_cutoff=0.05, max_refinements=0)
    worst = 0.0
    for x in ([0, 0], [0.3, 0.1], [0.5, -0.2]):
        worst = max(worst, abs(frac_laplacian(u, x, k, qo).value - f(x)))
    return worst <= 5e-3, f"max |(-D)^s (f*Phi) - f| / sup|f| = {worst:.2e} (tol 5e-3)"


def a5():
    parts, ok = [], True
    for s in (0.25, 0.5, 0.75):
        fam = [harmonic_exterior(2, i) for i in range(4)]
        rep = verify_lemma_derivative_estimate(fam, RADII, 1, constants(2, s))
        ok &= rep.passed
        ex = rep.extras["exponents"]
        parts.append(f"s={s}: slopes {min(ex):.3f}..{max(ex):.3f}, spread {rep.extras['constant_spread']:.2f}")
    return ok, "; ".join(parts) + " (want -1 +- 0.1, spread <= 3)"


def a6():
    parts, ok = [], True
    for s in (0.25, 0.75):
        fam = [constant(2, 1.0), cos_x1(2), power(2, 0.5)]
        rep = verify_lemma_supnorm_estimate(fam, RADII, constants(2, s))
        ok &= rep.passed
        msg = f"s={s}: sup slopes " + ",".join(f"{e:.3f}" for e in rep.extras["exponents"])
        if rep.extras["gradient_exponents"]:
            msg += " grad slopes " + ",".join(f"{e:.3f}" for e in rep.extras["gradient_exponents"])
        parts.append(msg)
    return ok, "; ".join(parts) + " (want 2s, 2s-1 +- 0.1)"


def a7():
    f = smooth_plateau(2)
    anchor = (0.5, 0.0)
    lo = verify_riesz_holder(f, 0.25, default_riesz_pairs(anchor, 2), constants(2, 0.25))
    hi = verify_riesz_holder(f, 0.75, default_riesz_pairs(anchor, 2), constants(2, 0.75))
    sharp = verify_riesz_holder(plateau(2), 0.25, default_riesz_pairs(anchor, 2), constants(2, 0.25))
    ok = lo.passed and hi.passed
    return ok, (f"smooth plateau: s=0.25 exponent {lo.fitted_exponent:.3f} (>= 0.43), "
                f"s=0.75 gradient exponent {hi.fitted_exponent:.3f} (>= 0.43); "
                f"sharp indicator s=0.25: {sharp.fitted_exponent:.3f} [diagnostic]")


def a8():
    s, a = 0.75, 0.5
    k = constants(2, s)
    f = power(2, a)
    u = solve_dirichlet(DirichletProblem(Ball.unit(2), f, constant(2, 0.0), s), k)
    cr = dyadic_cascade(u, f, CascadeConfig(order=s, depth=5), k)
    slope = cr.sup_dev_slope()
    bound = -(2 * s + a) * 0.85
    res = max(abs(r) / sc for r, sc in zip(cr.residuals, cr.scales))
    ok = slope <= bound and res <= 5e-3
    return ok, f"log2 sup_dev slope {slope:.3f} (<= {bound:.3f}); max residual/scale {res:.2e} (<= 5e-3)"


def a9():
    ok, parts = True, []
    f = power(2, 0.5)
    m = ModulusSpec.power(1.0, 0.5)
    for s in (0.25, 0.75):
        k = constants(2, s)
        p = DirichletProblem(Ball.unit(2), f, constant(2, 0.0), s)
        rep = verify_schauder(p, m, default_pairs(2), CascadeConfig(order=s), k)
        q = [pr.rhs / pr.lhs for pr in rep.probes]
        spread = max(q) / min(q)
        target = min(2 * s + 0.5, 1.0) if s <= 0.5 else min(2 * s + 0.5 - 1, 1.0)
        good = abs(rep.fitted_exponent - target) <= 0.07 and spread <= 10
        ok &= good
        parts.append(f"s={s}: exponent {rep.fitted_exponent:.3f} (want {target:g} +- 0.07), "
                     f"RHS/LHS spread {spread:.2f} (<= 10)")
    return ok, "; ".join(parts)


def a10():
    with tempfile.TemporaryDirectory() as d:
        cfgs = [{"command": "verify-riesz", "s": 0.25, "seed": 11},
                {"command": "verify-lemma31", "s": 0.5, "seed": 3},
                {"command": "eval", "s": 0.75, "fields": {"u": {"expr": "cos(x1) * exp(-rnorm)", "decay_M": 1}},
                 "probes": [[0, 0], [0.5, 0.5]]}]
        same, lossless = True, True
        for i, cfg in enumerate(cfgs):
            for fmt in ("json", "csv"):
                blobs = []
                for rep in range(2):
                    path = os.path.join(d, f"{i}-{rep}.{fmt}")
                    c = json.loads(json.dumps(cfg))
                    c["output"] = {"format": fmt, "path": path}
                    if run(c, out=open(os.devnull, "w")) not in (0, 2):
                        return False, f"{cfg['command']} failed to run"
                    with open(path, "rb") as fh:
                        blobs.append(fh.read())
                same &= blobs[0] == blobs[1]
                if fmt == "json" and cfg["command"] != "eval":
                    text = blobs[0].decode()
                    r = VerificationReport.from_json(text)
                    lossless &= r.to_json() + "\n" == text and VerificationReport.from_dict(r.to_dict()) == r
    return same and lossless, f"byte-identical reruns: {same}; lossless JSON round trip: {lossless}"


CRITERIA = [("A1", 30, a1), ("A2", 60, a2), ("A3", 60, a3), ("A4", 90, a4), ("A5", 180, a5), ("A6", 180, a6),
            ("A7", 120, a7), ("A8", 300, a8), ("A9", 480, a9), ("A10", 60, a10)]


@pytest.mark.parametrize("name,limit,fn", CRITERIA, ids=[c[0] for c in CRITERIA])
def test_acceptance(name, limit, fn):
    ok, line = _record(name, limit, fn)
    assert ok, line


if __name__ == "__main__":
    status = 0
    for name, limit, fn in CRITERIA:
        ok, _ = _record(name, limit, fn)
        status |= not ok
    sys.exit(status)
