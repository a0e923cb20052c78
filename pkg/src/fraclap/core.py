"""Domain types shared across the package and modulus-of-continuity arithmetic."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np


class FracLapError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(FracLapError, ValueError):
    pass


class ArgumentError(FracLapError, ValueError):
    pass


class DivergenceError(FracLapError, ArithmeticError):
    pass


class SingularityError(FracLapError, ArithmeticError):
    pass


class UnsupportedInputError(FracLapError, ValueError):
    pass


class FieldEvaluationError(FracLapError, ArithmeticError):
    """A field produced a non-finite value; ``point`` is the first offender."""

    def __init__(self, message: str, point=None):
        super().__init__(message)
        self.point = None if point is None else tuple(float(c) for c in point)


@dataclass(frozen=True)
class FracOrder:
    s: float

    def __post_init__(self):
        s = float(self.s)
        if not (0.0 < s < 1.0) or not math.isfinite(s):
            raise ArgumentError(f"fractional order must lie in (0, 1), got {self.s!r}")
        object.__setattr__(self, "s", s)

    @property
    def regime(self) -> str:
        if self.s < 0.5:
            return "subcritical"
        if self.s == 0.5:
            return "critical"
        return "supercritical"

    @property
    def is_critical(self) -> bool:
        return self.s == 0.5


def as_order(s) -> FracOrder:
    return s if isinstance(s, FracOrder) else FracOrder(s)


def as_point(p, n: Optional[int] = None) -> np.ndarray:
    x = np.asarray(p, dtype=float)
    if x.ndim != 1:
        raise ArgumentError(f"a point must be a flat coordinate list, got shape {x.shape}")
    if n is not None and x.shape[0] != n:
        raise ArgumentError(f"point has {x.shape[0]} coordinates, expected {n}")
    return x


@dataclass(frozen=True)
class Ball:
    center: tuple
    radius: float

    def __post_init__(self):
        c = tuple(float(v) for v in np.asarray(self.center, dtype=float).ravel())
        object.__setattr__(self, "center", c)
        r = float(self.radius)
        if not r > 0 or not math.isfinite(r):
            raise DomainError(f"ball radius must be positive, got {self.radius!r}")
        object.__setattr__(self, "radius", r)

    @classmethod
    def unit(cls, n: int) -> "Ball":
        return cls((0.0,) * n, 1.0)

    @property
    def dim(self) -> int:
        return len(self.center)

    @property
    def c(self) -> np.ndarray:
        return np.asarray(self.center)

    def contains(self, p) -> bool:
        return float(np.linalg.norm(as_point(p, self.dim) - self.c)) < self.radius

    def contains_many(self, pts: np.ndarray) -> np.ndarray:
        z = pts - self.c
        return np.einsum("...i,...i->...", z, z) < self.radius ** 2

    def scaled(self, factor: float) -> "Ball":
        return Ball(self.center, self.radius * factor)


@dataclass(frozen=True)
class Interface:
    """A sphere (radius 0: a point) across which a field may fail to be smooth.

    Quadrature rules place breakpoints where their integration spheres meet
    these sets; nothing else about the field is assumed.
    """

    center: tuple
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(v) for v in np.asarray(self.center, float).ravel()))
        r = float(self.radius)
        if r < 0:
            raise ArgumentError("interface radius must be nonnegative")
        object.__setattr__(self, "radius", r)

    @classmethod
    def of_ball(cls, b: Ball) -> "Interface":
        return cls(b.center, b.radius)


def _merge_interfaces(*groups) -> tuple:
    seen = []
    for g in groups:
        for i in g:
            if i not in seen:
                seen.append(i)
    return tuple(seen)


@dataclass(frozen=True, eq=False)
class ScalarField:
    """An evaluable real function on R^n.

    ``evaluator`` maps an ``(m, n)`` array of points to an ``(m,)`` array.
    ``decay`` is a pair ``(M, p)`` asserting ``|u(y)| <= M`` everywhere and
    ``|u(y)| <= M |y|^-p`` for ``|y| >= 1``.  ``total`` marks evaluators that
    are finite everywhere and already vanish off the support, so engines may
    skip masking.
    """

    evaluator: Callable[[np.ndarray], np.ndarray]
    dimension: int
    support: Optional[Ball] = None
    decay: Optional[tuple] = None
    smoothness: Optional[str] = None
    holder_alpha: Optional[float] = None
    interfaces: tuple = ()
    label: str = ""
    total: bool = False

    def __post_init__(self):
        if self.dimension < 2:
            raise ArgumentError("fields live on R^n with n >= 2")
        if self.support is not None and self.support.dim != self.dimension:
            raise ArgumentError("support ball dimension mismatch")
        if self.decay is not None:
            M, p = self.decay
            if M < 0 or p < 0:
                raise ArgumentError("decay envelope needs M >= 0 and p >= 0")
            object.__setattr__(self, "decay", (float(M), float(p)))
        ifs = tuple(self.interfaces)
        if self.support is not None:
            ifs = _merge_interfaces(ifs, (Interface.of_ball(self.support),))
        object.__setattr__(self, "interfaces", ifs)

    def __call__(self, p):
        x = np.asarray(p, dtype=float)
        if x.ndim == 1:
            return float(self.evaluate(x[None, :])[0])
        return self.evaluate(x)

    def evaluate(self, pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != self.dimension:
            raise ArgumentError(f"expected points of shape (m, {self.dimension}), got {pts.shape}")
        if self.support is None:
            vals = np.asarray(self.evaluator(pts), dtype=float)
        else:
            vals = np.zeros(pts.shape[0])
            inside = self.support.contains_many(pts)
            if inside.any():
                vals[inside] = self.evaluator(pts[inside])
        bad = ~np.isfinite(vals)
        if bad.any():
            i = int(np.argmax(bad))
            raise FieldEvaluationError(f"field {self.label or '<anonymous>'} is not finite at {pts[i].tolist()}", pts[i])
        return vals

    @property
    def sup_bound(self) -> Optional[float]:
        return None if self.decay is None else self.decay[0]

    # -- algebra used by the solvers and the property tests ---------------

    def _combine(self, other: "ScalarField", fn, label) -> "ScalarField":
        if other.dimension != self.dimension:
            raise ArgumentError("dimension mismatch")
        sup = None
        if self.support is not None and other.support is not None:
            sup = bounding_ball(self.support, other.support)
        dec = None
        if self.decay is not None and other.decay is not None:
            dec = (self.decay[0] + other.decay[0], min(self.decay[1], other.decay[1]))
        elif sup is not None:
            dec = None
        return ScalarField(
            lambda pts: fn(self.evaluate(pts), other.evaluate(pts)),
            self.dimension,
            support=sup,
            decay=dec,
            smoothness=self.smoothness if self.smoothness == other.smoothness else "bounded",
            interfaces=_merge_interfaces(self.interfaces, other.interfaces),
            label=label,
        )

    def __add__(self, other):
        return self._combine(other, np.add, f"({self.label}+{other.label})")

    def __sub__(self, other):
        return self._combine(other, np.subtract, f"({self.label}-{other.label})")

    def scaled(self, a: float) -> "ScalarField":
        a = float(a)
        dec = None if self.decay is None else (abs(a) * self.decay[0], self.decay[1])
        return ScalarField(lambda pts: a * self.evaluate(pts), self.dimension, self.support, dec,
                           self.smoothness, self.holder_alpha, self.interfaces, f"{a}*{self.label}")

    def translated(self, h) -> "ScalarField":
        """x -> u(x - h)."""
        h = as_point(h, self.dimension)
        sup = None if self.support is None else Ball(self.support.c + h, self.support.radius)
        ifs = tuple(Interface(np.asarray(i.center) + h, i.radius) for i in self.interfaces)
        dec = None if self.decay is None else (self.decay[0], 0.0)
        return ScalarField(lambda pts: self.evaluate(pts - h), self.dimension, sup, dec,
                           self.smoothness, self.holder_alpha, ifs, f"{self.label}(.-h)")

    def dilated(self, lam: float) -> "ScalarField":
        """x -> u(lam x)."""
        lam = float(lam)
        sup = None if self.support is None else Ball(self.support.c / lam, self.support.radius / lam)
        ifs = tuple(Interface(np.asarray(i.center) / lam, i.radius / lam) for i in self.interfaces)
        dec = None if self.decay is None else (self.decay[0], 0.0)
        return ScalarField(lambda pts: self.evaluate(lam * pts), self.dimension, sup, dec,
                           self.smoothness, self.holder_alpha, ifs, f"{self.label}({lam}x)")


def bounding_ball(a: Ball, b: Ball) -> Ball:
    ca, cb = a.c, b.c
    d = float(np.linalg.norm(cb - ca))
    if d + b.radius <= a.radius:
        return a
    if d + a.radius <= b.radius:
        return b
    r = 0.5 * (d + a.radius + b.radius)
    c = ca + (cb - ca) * ((r - a.radius) / d)
    return Ball(c, r)


# ---------------------------------------------------------------------------
# moduli of continuity


@dataclass(frozen=True)
class ModulusSpec:
    """A modulus of continuity: ``power`` C t^a, ``log_lipschitz`` C t (1 + |ln t|),
    or ``empirical`` from sampled (distance, oscillation) pairs."""

    kind: str
    C: float = 1.0
    alpha: float = 1.0
    samples: tuple = ()
    domain_cap: float = 2.0
    _knots: tuple = field(default=(), repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in ("power", "log_lipschitz", "empirical"):
            raise ArgumentError(f"unknown modulus kind {self.kind!r}")
        if self.C < 0:
            raise ArgumentError("modulus amplitude must be nonnegative")
        if self.domain_cap <= 0:
            raise ArgumentError("domain_cap must be positive")
        if self.kind == "power" and not (0 <= self.alpha):
            raise ArgumentError("power modulus needs alpha >= 0")
        if self.kind == "empirical":
            pairs = sorted((float(t), float(v)) for t, v in self.samples)
            if not pairs or any(t <= 0 or v < 0 for t, v in pairs):
                raise ArgumentError("empirical modulus needs positive distances and nonnegative values")
            ts, vs = [0.0], [0.0]
            run = 0.0
            for t, v in pairs:
                run = max(run, v)
                if t == ts[-1]:
                    vs[-1] = run
                else:
                    ts.append(t)
                    vs.append(run)
            object.__setattr__(self, "samples", tuple(pairs))
            object.__setattr__(self, "_knots", (tuple(ts), tuple(vs)))

    @classmethod
    def power(cls, C: float, alpha: float, domain_cap: float = 2.0) -> "ModulusSpec":
        return cls("power", C=C, alpha=alpha, domain_cap=domain_cap)

    @classmethod
    def log_lipschitz(cls, C: float, domain_cap: float = 2.0) -> "ModulusSpec":
        return cls("log_lipschitz", C=C, domain_cap=domain_cap)

    @classmethod
    def empirical(cls, samples: Sequence, domain_cap: float = 2.0) -> "ModulusSpec":
        return cls("empirical", samples=tuple(samples), domain_cap=domain_cap)

    @classmethod
    def zero(cls, domain_cap: float = 2.0) -> "ModulusSpec":
        return cls("power", C=0.0, alpha=1.0, domain_cap=domain_cap)


def modulus_eval(m: ModulusSpec, t: float) -> float:
    t = float(t)
    if t < 0:
        raise ArgumentError("modulus argument must be nonnegative")
    if t > m.domain_cap * (1 + 1e-12):
        raise DomainError(f"t={t} exceeds the modulus domain cap {m.domain_cap}")
    if t == 0:
        return 0.0
    if m.kind == "power":
        return m.C * t ** m.alpha
    if m.kind == "log_lipschitz":
        return m.C * t * (1.0 + abs(math.log(t)))
    ts, vs = m._knots
    return float(np.interp(t, ts, vs))


def _power_antideriv(q: float, a: float, b: float) -> float:
    """int_a^b t^q dt for 0 <= a < b (q > -1 when a == 0)."""
    if q == -1.0:
        return math.log(b / a)
    lo = 0.0 if a == 0 else a ** (q + 1)
    return (b ** (q + 1) - lo) / (q + 1)


def _log_piece(q: float, a: float, b: float, sign: float) -> float:
    """int_a^b t^q (1 + sign*ln t) dt, with 0 <= a < b; a == 0 needs q > -1."""

    def F(t):
        if t == 0:
            return 0.0
        L = math.log(t)
        if q == -1.0:
            return L + sign * L * L / 2
        k = q + 1
        return t ** k / k + sign * (t ** k * L / k - t ** k / k ** 2)

    return F(b) - F(a)


def modulus_integral(m: ModulusSpec, a: float, b: float, p: float) -> float:
    """int_a^b omega(t) t^p dt."""
    a, b, p = float(a), float(b), float(p)
    if not (0 <= a < b):
        raise ArgumentError("need 0 <= a < b")
    if b > m.domain_cap * (1 + 1e-12):
        raise DomainError(f"upper limit {b} exceeds the modulus domain cap {m.domain_cap}")
    if m.kind == "power":
        if m.C == 0:
            return 0.0
        q = m.alpha + p
        if a == 0 and q <= -1:
            raise DivergenceError(f"int_0 t^{q} dt diverges (alpha + p must exceed -1)")
        return m.C * _power_antideriv(q, a, b)
    if m.kind == "log_lipschitz":
        q = 1.0 + p
        if a == 0 and q <= -1:
            raise DivergenceError("log-Lipschitz integrand is not integrable at 0 (need p > -2)")
        total = 0.0
        if a < 1:
            total += _log_piece(q, a, min(b, 1.0), -1.0)
        if b > 1:
            total += _log_piece(q, max(a, 1.0), b, +1.0)
        return m.C * total
    # empirical: piecewise linear through the monotone knots, constant after the last one
    ts, vs = m._knots
    if a == 0 and p <= -2:
        raise DivergenceError("empirical modulus is linear at 0; need p > -2")
    edges = sorted(set([a, b] + [t for t in ts if a < t < b]))
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        mid = 0.5 * (lo + hi)
        if mid >= ts[-1]:
            total += vs[-1] * _power_antideriv(p, lo, hi)
            continue
        j = int(np.searchsorted(ts, mid)) - 1
        t0, t1, v0, v1 = ts[j], ts[j + 1], vs[j], vs[j + 1]
        slope = (v1 - v0) / (t1 - t0)
        icpt = v0 - slope * t0
        if icpt != 0:
            total += icpt * _power_antideriv(p, lo, hi)
        if slope != 0:
            total += slope * _power_antideriv(p + 1, lo, hi)
    return total


# ---------------------------------------------------------------------------
# quadrature budget


@dataclass(frozen=True)
class QuadBudget:
    """Node counts and cutoffs for the singular-integral engines.

    ``radial_nodes`` is the Gauss-Legendre order per radial panel,
    ``angular_nodes`` the trapezoid count on a full circle (smooth fields);
    panels next to a non-smooth interface are graded ``grading_levels``
    times by halving.
    """

    radial_nodes: int = 8
    angular_nodes: int = 128
    truncation_radius: float = 50.0
    inner_cutoff: float = 1e-3
    target_rel_tol: float = 1e-6
    max_refinements: int = 1
    grading_levels: int = 8
    arc_nodes: int = 6
    arc_levels: int = 5

    def __post_init__(self):
        if self.radial_nodes < 1 or self.angular_nodes < 1 or self.arc_nodes < 1:
            raise ArgumentError("node counts must be positive")
        if not (0 < self.inner_cutoff < 1):
            raise ArgumentError("inner_cutoff must lie in (0, 1)")
        if not self.truncation_radius > 10:
            raise ArgumentError("truncation_radius must exceed 10")
        if self.target_rel_tol <= 0:
            raise ArgumentError("target_rel_tol must be positive")
        if self.max_refinements < 0 or self.grading_levels < 0 or self.arc_levels < 0:
            raise ArgumentError("refinement and grading counts must be nonnegative")

    def refined(self) -> "QuadBudget":
        """The next budget in a refinement sequence (node counts doubled)."""
        from dataclasses import replace

        return replace(self, radial_nodes=2 * self.radial_nodes, angular_nodes=2 * self.angular_nodes,
                       arc_nodes=2 * self.arc_nodes)

    def coarsened(self) -> "QuadBudget":
        from dataclasses import replace

        return replace(self, radial_nodes=max(2, self.radial_nodes // 2),
                       angular_nodes=max(8, self.angular_nodes // 2), arc_nodes=max(2, self.arc_nodes // 2))



