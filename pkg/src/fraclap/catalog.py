"""Built-in fields with known moduli, used by the verifiers and the CLI."""

from __future__ import annotations

from typing import Optional

import numpy as np

from .core import ArgumentError, Ball, Interface, ModulusSpec, ScalarField


def _r(P):
    return np.sqrt(np.einsum("ij,ij->i", P, P))


def constant(n: int, c: float = 1.0) -> ScalarField:
    c = float(c)
    return ScalarField(lambda P: np.full(P.shape[0], c), n, decay=(abs(c), 0.0), smoothness="smooth",
                       label=repr(c))


def cos_x1(n: int) -> ScalarField:
    return ScalarField(lambda P: np.cos(P[:, 0]), n, decay=(1.0, 0.0), smoothness="smooth", label="cos(x1)")


def power(n: int, alpha: float) -> ScalarField:
    """|x|^alpha, with a kink at the origin."""
    a = float(alpha)
    return ScalarField(lambda P: _r(P) ** a, n, decay=(1.0, a), smoothness="holder", holder_alpha=min(a, 1.0),
                       interfaces=(Interface((0.0,) * n, 0.0),), label=f"|x|^{a:g}")


def gaussian(n: int, width: float = 1.0) -> ScalarField:
    w2 = float(width) ** 2
    return ScalarField(lambda P: np.exp(-np.einsum("ij,ij->i", P, P) / w2), n, decay=(1.0, 0.0),
                       smoothness="smooth", label="gaussian")


def bump(n: int, radius: float = 1.0, center=None) -> ScalarField:
    """exp(1 - 1/(1 - |x - c|^2 / R^2)) on B_R(c), zero outside."""
    c = np.zeros(n) if center is None else np.asarray(center, float)
    R = float(radius)

    def ev(P):
        t = np.einsum("ij,ij->i", P - c, P - c) / R ** 2
        out = np.zeros(P.shape[0])
        m = t < 1
        out[m] = np.exp(1.0 - 1.0 / (1.0 - t[m]))
        return out

    return ScalarField(ev, n, support=Ball(tuple(c), R), smoothness="smooth", label="bump")


def plateau(n: int, radius: float = 0.5, center=None) -> ScalarField:
    """Indicator of a ball."""
    c = np.zeros(n) if center is None else np.asarray(center, float)
    B = Ball(tuple(c), float(radius))
    return ScalarField(lambda P: B.contains_many(P).astype(float), n, support=B, interfaces=(Interface.of_ball(B),),
                       label="plateau")


def _smoothstep(t):
    """C-infinity step: 0 for t <= 0, 1 for t >= 1."""
    t = np.clip(t, 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(t > 0, np.exp(-1.0 / np.maximum(t, 1e-300)), 0.0)
        b = np.where(t < 1, np.exp(-1.0 / np.maximum(1.0 - t, 1e-300)), 0.0)
    return a / (a + b)


def smooth_plateau(n: int, radius: float = 0.5, width: float = 0.25, center=None) -> ScalarField:
    """Indicator-like bump: 1 on B_{R-w}, smooth descent to 0 at |x - c| = R."""
    c = np.zeros(n) if center is None else np.asarray(center, float)
    R, w = float(radius), float(width)
    if not 0 < w <= R:
        raise ArgumentError("plateau width must lie in (0, radius]")

    def ev(P):
        return _smoothstep((R - _r(P - c)) / w)

    return ScalarField(ev, n, support=Ball(tuple(c), R), smoothness="smooth", label="smooth_plateau")


def harmonic_exterior(n: int, seed: int) -> ScalarField:
    """Bounded exterior field a0 + e^{1-|y|} (a1 <e1, y^> + a2 (<e2, y^>^2 - 1/n)) with random data."""
    rng = np.random.default_rng(seed)
    a0, a1, a2 = rng.uniform(-1, 1), rng.uniform(0.5, 1.5), rng.uniform(0.5, 1.5)
    e1, e2 = (v / np.linalg.norm(v) for v in rng.standard_normal((2, n)))

    def ev(P):
        r = _r(P)
        Z = P / np.maximum(r, 1e-300)[:, None]
        prof = np.exp(1.0 - np.maximum(r, 1.0))
        return a0 + prof * (a1 * (Z @ e1) + a2 * ((Z @ e2) ** 2 - 1.0 / n))

    M = abs(a0) + a1 + a2
    return ScalarField(ev, n, decay=(M, 0.0), smoothness="smooth", label=f"exterior[{seed}]")


def modulus_of(name: str, **kw) -> Optional[ModulusSpec]:
    """Analytic modulus for catalog entries that have one."""
    if name == "constant":
        return ModulusSpec.zero()
    if name == "power":
        a = float(kw.get("alpha", 0.5))
        if not 0 < a <= 1:
            raise ArgumentError("|x|^alpha has a power modulus only for alpha in (0, 1]")
        return ModulusSpec.power(1.0, a)
    if name == "cos_x1":
        return ModulusSpec.power(1.0, 1.0)
    if name == "gaussian":
        w = float(kw.get("width", 1.0))
        return ModulusSpec.power(np.sqrt(2.0 / np.e) / w, 1.0)
    return None


def empirical_modulus(f: ScalarField, B: Ball, pairs: int = 10_000, seed: int = 0) -> ModulusSpec:
    """Monotone envelope of |f(x) - f(y)| over random pairs of B."""
    rng = np.random.default_rng(seed)
    n = B.dim
    X = B.c + B.radius * _ball_uniform(rng, pairs, n)
    # log-uniform separations resolve small scales too
    dist = B.radius * 10 ** rng.uniform(-4, np.log10(2.0), pairs)
    dirs = rng.standard_normal((pairs, n))
    dirs /= np.linalg.norm(dirs, axis=1)[:, None]
    Y = X + dist[:, None] * dirs
    ok = B.contains_many(Y)
    X, Y = X[ok], Y[ok]
    d = np.linalg.norm(X - Y, axis=1)
    v = np.abs(f.evaluate(X) - f.evaluate(Y))
    return ModulusSpec.empirical(list(zip(d.tolist(), v.tolist())), domain_cap=2 * B.radius)


def _ball_uniform(rng, m, n):
    Z = rng.standard_normal((m, n))
    Z /= np.linalg.norm(Z, axis=1)[:, None]
    return Z * rng.uniform(0, 1, m)[:, None] ** (1.0 / n)


FIELDS = {"constant": constant, "cos_x1": cos_x1, "power": power, "gaussian": gaussian, "bump": bump,
          "plateau": plateau, "smooth_plateau": smooth_plateau, "harmonic_exterior": harmonic_exterior}
