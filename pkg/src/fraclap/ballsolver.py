"""Dirichlet problems for the fractional Laplacian on a ball.

Homogeneous problems use the Poisson integral; inhomogeneous ones go through
the Riesz potential of an extension of the data plus an s-harmonic
correction, ``u = f~ * Phi + P[g - f~ * Phi]``.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.stats import qmc

from .core import (ArgumentError, Ball, DomainError, FracLapError, FracOrder, Interface, QuadBudget,
                   ScalarField, as_order, as_point)
from .kernels import Constants
from .quad import (_check_exterior_data, concentric_radii, exterior_rule, frac_laplacian, riesz_values)

# budget used for quantities that are themselves integrated again
NESTED = QuadBudget(radial_nodes=5, angular_nodes=32, grading_levels=3, arc_nodes=4, arc_levels=1,
                    max_refinements=0)

GRADIENT_RADIUS = 0.75


class ConditioningError(FracLapError, ValueError):
    pass


@dataclass(frozen=True)
class DirichletProblem:
    ball: Ball
    rhs: ScalarField
    exterior: ScalarField
    order: FracOrder

    def __post_init__(self):
        object.__setattr__(self, "order", as_order(self.order))
        n = self.ball.dim
        if self.rhs.dimension != n or self.exterior.dimension != n:
            raise ArgumentError("problem data must live in the ball's dimension")
        _check_exterior_data(self.exterior)


class _Memo:
    """Pointwise cache keyed by coordinates rounded to 1e-12."""

    def __init__(self, fn: Callable[[np.ndarray], np.ndarray]):
        self.fn = fn
        self.store = {}
        self.lock = threading.Lock()

    def __call__(self, X: np.ndarray) -> np.ndarray:
        keys = [r.tobytes() for r in np.round(X, 12) + 0.0]
        out = np.empty(X.shape[0])
        todo = []
        for i, key in enumerate(keys):
            v = self.store.get(key)
            if v is None:
                todo.append(i)
            else:
                out[i] = v
        if todo:
            vals = self.fn(X[todo])
            out[todo] = vals
            with self.lock:
                for i, v in zip(todo, vals):
                    self.store[keys[i]] = float(v)
        return out


@dataclass(eq=False)
class SolutionField:
    """A solution inside ``ball``; outside it the exterior data.

    ``inner`` evaluates the representation formula on the ball only;
    ``full`` is the field on all of R^n handed to the quadrature engines.
    """

    ball: Ball
    inner_fn: Callable[[np.ndarray], np.ndarray]
    exterior: ScalarField
    gradient_fn: Optional[Callable[[np.ndarray], np.ndarray]] = None
    problem: Optional[DirichletProblem] = None
    residual_probe: Optional[list] = None
    interfaces: tuple = ()
    label: str = ""
    hessian_fn: Optional[Callable[[np.ndarray], np.ndarray]] = None
    _memo: _Memo = field(init=False, repr=False)

    def __post_init__(self):
        self._memo = _Memo(self.inner_fn)

    @property
    def dimension(self) -> int:
        return self.ball.dim

    def values(self, X) -> np.ndarray:
        """The inner representation at points of the ball."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if not self.ball.contains_many(X).all():
            raise DomainError("inner evaluation is defined on the open ball only")
        return self._memo(X)

    def __call__(self, x) -> float:
        return float(self.full(as_point(x, self.dimension)))

    def gradient(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.gradient_fn is None:
            raise ArgumentError("this solution carries no gradient formula")
        self._check_conditioning(X)
        return self.gradient_fn(X)

    def hessian(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.hessian_fn is None:
            raise ArgumentError("this solution carries no second-derivative formula")
        self._check_conditioning(X)
        return self.hessian_fn(X)

    def _check_conditioning(self, X):
        d = np.linalg.norm(X - self.ball.c, axis=1)
        if (d > GRADIENT_RADIUS * self.ball.radius * (1 + 1e-12)).any():
            raise ConditioningError(f"derivatives are evaluated for |x - x0| <= {GRADIENT_RADIUS} r only")

    @property
    def full(self) -> ScalarField:
        B, g = self.ball, self.exterior

        def ev(P):
            inside = B.contains_many(P)
            out = np.empty(P.shape[0])
            if inside.any():
                out[inside] = self._memo(P[inside])
            if (~inside).any():
                out[~inside] = g.evaluate(P[~inside])
            return out

        dec = g.decay
        if dec is not None:
            dec = (max(dec[0], self.bound()), dec[1])
        ifs = tuple(self.interfaces) + (Interface.of_ball(B),)
        return ScalarField(ev, B.dim, None, dec, smoothness="holder", interfaces=ifs,
                           label=self.label or "solution")

    def bound(self) -> float:
        return sup_norm(self, self.ball, 8)


def _exterior_values(rule, g: ScalarField):
    return g.evaluate(rule.Y)


def poisson_extend(g: ScalarField, B: Ball, k: Constants, q: QuadBudget = NESTED) -> SolutionField:
    """x -> int P_r(y, x) g(y) dy on the ball."""
    _check_exterior_data(g)
    rule = exterior_rule(B, k, q, concentric_radii(g, B))
    cache = {}

    def gv():
        if "g" not in cache:
            cache["g"] = _exterior_values(rule, g)
        return cache["g"]

    return SolutionField(B, lambda X: rule.integrate(X, gv()), g,
                         gradient_fn=lambda X: rule.gradient(X, gv()),
                         interfaces=g.interfaces, label=f"P[{g.label}]",
                         hessian_fn=lambda X: rule.hessian(X, gv()))


def poisson_extend_gradient(g: ScalarField, x, B: Ball, k: Constants, q: QuadBudget = NESTED) -> np.ndarray:
    x = as_point(x, B.dim)
    return poisson_extend(g, B, k, q).gradient(x[None])[0]


def poisson_extend_hessian(g: ScalarField, X, B: Ball, k: Constants, q: QuadBudget = NESTED) -> np.ndarray:
    return poisson_extend(g, B, k, q).hessian(X)


def _cutoff(t: np.ndarray) -> np.ndarray:
    """C^1 cubic: 1 on [0, 1], 0 on [3/2, inf)."""
    u = np.clip((t - 1.0) / 0.5, 0.0, 1.0)
    return 1.0 - 3 * u ** 2 + 2 * u ** 3


def holder_extension(f: ScalarField, B: Optional[Ball] = None) -> ScalarField:
    """Extension of f from the closed ball: radial projection times a cubic cutoff.

    Agrees with f on B, vanishes outside the concentric ball of radius 3r/2,
    and never exceeds sup |f| over the closed ball.
    """
    B = B or Ball.unit(f.dimension)
    c, r = B.c, B.radius

    def ev(P):
        Z = P - c
        t = np.sqrt(np.einsum("ij,ij->i", Z, Z)) / r
        # interior points pass through untouched so f~ = f exactly on B
        Q = np.where((t > 1.0)[:, None], c + Z / np.maximum(t, 1.0)[:, None], P)
        return f.evaluate(Q) * _cutoff(t)

    outer = Ball(B.center, 1.5 * r)
    ifs = tuple(i for i in f.interfaces if i.radius > 0 or B.contains(i.center))
    ifs += (Interface.of_ball(B),)
    return ScalarField(ev, f.dimension, support=outer, decay=f.decay, smoothness=f.smoothness,
                       holder_alpha=f.holder_alpha, interfaces=ifs, label=f"ext[{f.label}]",
                       total=True)


def solve_dirichlet(p: DirichletProblem, k: Constants, q: QuadBudget = NESTED,
                    riesz_budget: Optional[QuadBudget] = None, check_residual: bool = False,
                    residual_budget: Optional[QuadBudget] = None) -> SolutionField:
    """u = f~ * Phi + P[g - f~ * Phi] on the ball."""
    if abs(k.s - p.order.s) > 0 or k.n != p.ball.dim:
        raise ArgumentError("constants do not match the problem")
    B, g = p.ball, p.exterior
    fe = holder_extension(p.rhs, B)
    rq = riesz_budget or q
    # the potential is 2s smoother than f~, so only g's interfaces shape the rule
    rule = exterior_rule(B, k, q, concentric_radii(g, B))
    cache = {}

    def data():
        if "w" not in cache:
            cache["w"] = g.evaluate(rule.Y) - riesz_values(fe, rule.Y, k, rq)
        return cache["w"]

    def inner(X):
        return riesz_values(fe, X, k, rq) + rule.integrate(X, data())

    def grad(X):
        return riesz_values(fe, X, k, rq, grad=True) + rule.gradient(X, data())

    sol = SolutionField(B, inner, g, gradient_fn=grad, problem=p,
                        interfaces=tuple(i for i in fe.interfaces if i.radius < B.radius),
                        label=f"u[{p.rhs.label}; {g.label}]")
    if check_residual:
        sol.residual_probe = residuals(sol, k, residual_budget or RESIDUAL)
    return sol


RESIDUAL = QuadBudget(radial_nodes=6, angular_nodes=32, grading_levels=4, arc_nodes=4, arc_levels=2,
                      inner_cutoff=0.02, max_refinements=0)


def default_probes(B: Ball) -> np.ndarray:
    n = B.dim
    pts = [np.zeros(n)]
    for i in range(2):
        for sg in (1, -1):
            e = np.zeros(n)
            e[i] = sg * 0.25
            pts.append(e)
    return B.c + B.radius * np.array(pts)


def residuals(sol: SolutionField, k: Constants, q: QuadBudget = RESIDUAL, probes=None) -> list:
    """Per-probe records {point, lhs, rhs, residual} of (-Delta)^s u - f."""
    P = default_probes(sol.ball) if probes is None else np.asarray(probes, float).reshape(-1, sol.dimension)
    u = sol.full
    out = []
    for x in P:
        res = frac_laplacian(u, x, k, q)
        f = sol.problem.rhs(x) if sol.problem is not None else 0.0
        out.append({"point": [float(c) for c in x], "lhs": res.value, "rhs": float(f),
                    "residual": res.value - float(f), "est_error": res.est_error})
    return out


def ball_samples(B: Ball, count: int) -> np.ndarray:
    """Centre followed by an unscrambled Halton sequence mapped area-preservingly to B."""
    n = B.dim
    H = qmc.Halton(d=n, scramble=False).random(count + 1)[1:]
    if n == 2:
        rad = np.sqrt(H[:, 0])
        ang = 2 * np.pi * H[:, 1]
        Z = np.stack([rad * np.cos(ang), rad * np.sin(ang)], axis=1)
    elif n == 3:
        rad = np.cbrt(H[:, 0])
        mu = 2 * H[:, 1] - 1
        ph = 2 * np.pi * H[:, 2]
        st = np.sqrt(1 - mu ** 2)
        Z = rad[:, None] * np.stack([st * np.cos(ph), st * np.sin(ph), mu], axis=1)
    else:
        raise ArgumentError("ball samples are implemented for n in {2, 3}")
    return np.vstack([B.c, B.c + B.radius * Z])


def sup_norm(u, B: Ball, grid: int = 8) -> float:
    """max |u| over grid^n quasi-uniform points of B (centre included)."""
    if grid < 8:
        raise ArgumentError("grid must be at least 8")
    X = ball_samples(B, grid ** B.dim - 1)
    if isinstance(u, SolutionField):
        inside = u.ball.contains_many(X)
        vals = np.empty(X.shape[0])
        if inside.any():
            vals[inside] = u.values(X[inside])
        if (~inside).any():
            vals[~inside] = u.exterior.evaluate(X[~inside])
    else:
        vals = u.evaluate(X)
    return float(np.max(np.abs(vals)))
