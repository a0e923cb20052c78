"""Closed-form kernels: Riesz fundamental solution, ball Poisson kernel, bubble."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (Ball, DomainError, FracOrder, Interface, ScalarField, SingularityError, as_order,
                   as_point)
from .special import abs_gamma_neg, gamma


@dataclass(frozen=True)
class Constants:
    n: int
    s: float
    riesz_a: float
    poisson_c: float
    flap_C: float
    bubble_k: float

    @property
    def order(self) -> FracOrder:
        return FracOrder(self.s)

    def as_dict(self) -> dict:
        return {"n": self.n, "s": self.s, "riesz_a": self.riesz_a, "poisson_c": self.poisson_c,
                "flap_C": self.flap_C, "bubble_k": self.bubble_k}


def constants(n: int, s) -> Constants:
    s = as_order(s).s
    n = int(n)
    if n < 2:
        raise DomainError("dimension must be at least 2")
    h = n / 2
    flap_C = 4 ** s * gamma(h + s) / (math.pi ** h * abs_gamma_neg(s))
    poisson_c = gamma(h) * math.sin(math.pi * s) / math.pi ** (h + 1)
    riesz_a = gamma(h - s) / (4 ** s * math.pi ** h * gamma(s))
    bubble_k = gamma(h) / (4 ** s * gamma(h + s) * gamma(1 + s))
    return Constants(n, s, riesz_a, poisson_c, flap_C, bubble_k)


def sphere_area(n: int) -> float:
    return 2 * math.pi ** (n / 2) / gamma(n / 2)


def fundamental_solution(x, k: Constants) -> float:
    r = float(np.linalg.norm(as_point(x, k.n)))
    if r == 0:
        raise SingularityError("the fundamental solution is singular at the origin")
    return k.riesz_a * r ** (2 * k.s - k.n)


def fundamental_solution_gradient(x, k: Constants) -> np.ndarray:
    x = as_point(x, k.n)
    r = float(np.linalg.norm(x))
    if r == 0:
        raise SingularityError("the fundamental solution is singular at the origin")
    return -(k.n - 2 * k.s) * k.riesz_a * r ** (2 * k.s - k.n - 2) * x


def _check_pair(y, x, B: Ball):
    xi = as_point(x, B.dim) - B.c
    eta = as_point(y, B.dim) - B.c
    rx, ry = float(np.linalg.norm(xi)), float(np.linalg.norm(eta))
    if not rx < B.radius:
        raise DomainError("x must lie strictly inside the ball")
    if not ry > B.radius:
        raise DomainError("y must lie strictly outside the closed ball")
    return xi, eta


def poisson_kernel(y, x, B: Ball, k: Constants) -> float:
    xi, eta = _check_pair(y, x, B)
    r2 = B.radius ** 2
    ratio = (r2 - xi @ xi) / (eta @ eta - r2)
    return k.poisson_c * ratio ** k.s * float(np.linalg.norm(xi - eta)) ** (-k.n)


def poisson_kernel_many(Y: np.ndarray, X: np.ndarray, B: Ball, k: Constants) -> np.ndarray:
    """Kernel matrix ``P[i, j] = P_r(Y[j], X[i])`` for centred offsets, no domain checks."""
    r2 = B.radius ** 2
    xi = X - B.c
    eta = Y - B.c
    num = (r2 - np.einsum("ij,ij->i", xi, xi))[:, None]
    den = (np.einsum("ij,ij->i", eta, eta) - r2)[None, :]
    d2 = np.einsum("ij,ij->i", xi, xi)[:, None] + np.einsum("ij,ij->i", eta, eta)[None, :] - 2 * xi @ eta.T
    return k.poisson_c * (num / den) ** k.s * d2 ** (-k.n / 2)


def bubble(x, B: Ball, c0: float, k: Constants) -> float:
    x = as_point(x, B.dim)
    return float(bubble_many(x[None, :], B, c0, k)[0])


def bubble_many(X: np.ndarray, B: Ball, c0: float, k: Constants) -> np.ndarray:
    q = 1.0 - np.einsum("ij,ij->i", X - B.c, X - B.c) / B.radius ** 2
    return c0 * k.bubble_k * B.radius ** (2 * k.s) * np.maximum(q, 0.0) ** k.s


def bubble_gradient_many(X: np.ndarray, B: Ball, c0: float, k: Constants) -> np.ndarray:
    """Gradient inside the ball (callers stay away from the boundary)."""
    xi = X - B.c
    r2 = B.radius ** 2
    q = 1.0 - np.einsum("ij,ij->i", xi, xi) / r2
    fac = c0 * k.bubble_k * B.radius ** (2 * k.s) * k.s * np.maximum(q, 1e-300) ** (k.s - 1) * (-2 / r2)
    return fac[:, None] * xi


def bubble_field(B: Ball, c0: float, k: Constants) -> ScalarField:
    M = abs(c0) * k.bubble_k * B.radius ** (2 * k.s)
    return ScalarField(lambda P: bubble_many(P, B, c0, k), B.dim, support=B, decay=(M, 0.0),
                       smoothness="holder", holder_alpha=k.s,
                       label=f"bubble(r={B.radius})")
