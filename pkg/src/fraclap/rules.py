"""Quadrature building blocks: graded Gauss panels and sphere rules.

All templates live on [0, 1] and are cached; callers map them onto their
intervals.  Sphere rules can be aligned with a family of concentric
interfaces so that crossings of the integration sphere with a non-smooth
set become panel endpoints.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi, roots_legendre


@lru_cache(maxsize=None)
def gauss_legendre(m: int):
    t, w = roots_legendre(m)
    return 0.5 * (t + 1), 0.5 * w


@lru_cache(maxsize=None)
def gauss_jacobi_left(m: int, gamma: float):
    """Nodes/weights for int_0^1 t^gamma phi(t) dt."""
    t, w = roots_jacobi(m, 0.0, gamma)
    return 0.5 * (t + 1), w * 0.5 ** (1 + gamma)


def _panels(edges, m):
    t0, w0 = gauss_legendre(m)
    edges = np.asarray(edges, dtype=float)
    a, b = edges[:-1, None], edges[1:, None]
    return (a + (b - a) * t0).ravel(), ((b - a) * w0).ravel()


def _dyadic_left(L: int, top: float = 0.5):
    return [0.0] + [top * 2.0 ** (-j) for j in range(L, -1, -1)]


@lru_cache(maxsize=None)
def graded(m: int, L_left: int, L_right: int):
    """Panels on [0, 1] halved ``L_left`` times toward 0 and ``L_right`` times toward 1.

    With no grading on either side this is a single Gauss-Legendre panel.
    """
    if L_left == 0 and L_right == 0:
        return gauss_legendre(m)
    left = _dyadic_left(L_left) if L_left else [0.0, 0.5]
    right = [1.0 - e for e in reversed(_dyadic_left(L_right))] if L_right else [0.5, 1.0]
    t, w = _panels(left[:-1] + right, m)
    t.flags.writeable = False
    w.flags.writeable = False
    return t, w


@lru_cache(maxsize=None)
def graded_first(m: int, L: int, gamma: float, L_right: int = 0):
    """Template for int_0^1 t^gamma phi(t) dt with phi smooth on [0, 1).

    A Gauss-Jacobi panel on [0, 2^-L] absorbs the weight; the remaining
    dyadic panels carry t^gamma in their weights.
    """
    tj, wj = gauss_jacobi_left(m, gamma)
    h = 2.0 ** (-L)
    ts = [tj * h]
    ws = [wj * h ** (1 + gamma)]
    edges = [h * 2.0 ** j for j in range(L + 1)]
    if L_right:
        edges = edges[:-1] + [1.0 - e for e in reversed(_dyadic_left(L_right))][1:]
    if len(edges) > 1:
        tg, wg = _panels(edges, m)
        ts.append(tg)
        ws.append(wg * tg ** gamma)
    t, w = np.concatenate(ts), np.concatenate(ws)
    t.flags.writeable = False
    w.flags.writeable = False
    return t, w


# ---------------------------------------------------------------------------
# sphere rules


@lru_cache(maxsize=None)
def circle_trapezoid(N: int):
    ang = 2 * np.pi * (np.arange(N) + 0.5) / N
    d = np.stack([np.cos(ang), np.sin(ang)], axis=-1)
    return d, np.full(N, 1.0 / N)


_LEBEDEV_ORDERS = (3, 5, 7, 9, 11, 13, 15, 17, 19, 21, 23, 25, 27, 29, 31, 35, 41, 47, 53, 59, 65, 71,
                   77, 83, 89, 95, 101, 107, 113, 119, 125, 131)


@lru_cache(maxsize=None)
def sphere_design(N: int):
    """Smallest Lebedev rule on S^2 with at least N points (weights sum to 1)."""
    from scipy.integrate import lebedev_rule

    for order in _LEBEDEV_ORDERS:
        x, w = lebedev_rule(order)
        if x.shape[1] >= N or order == _LEBEDEV_ORDERS[-1]:
            return np.ascontiguousarray(x.T), w / w.sum()
    raise AssertionError


def smooth_sphere_rule(n: int, N: int):
    """Directions (A, n) and mean-weights (A,) for fields with no known interfaces."""
    if n == 2:
        return circle_trapezoid(N)
    if n == 3:
        return sphere_design(N)
    raise NotImplementedError("sphere rules are implemented for n in {2, 3}")


def _frames(axis: np.ndarray) -> np.ndarray:
    """Orthonormal frames (P, n, n) whose first row is ``axis``."""
    P, n = axis.shape
    F = np.zeros((P, n, n))
    F[:, 0] = axis
    if n == 2:
        F[:, 1, 0] = -axis[:, 1]
        F[:, 1, 1] = axis[:, 0]
        return F
    helper = np.where(np.abs(axis[:, :1]) < 0.9, np.array([[1.0, 0, 0]]), np.array([[0, 1.0, 0]]))
    e1 = np.cross(axis, helper)
    e1 /= np.linalg.norm(e1, axis=1, keepdims=True)
    F[:, 1] = e1
    F[:, 2] = np.cross(axis, e1)
    return F


def half_circle_arcs(d: np.ndarray, rho: np.ndarray, radii: np.ndarray, m: int, L: int):
    """Angles psi in [0, pi] (P, R, A) split at the crossings with concentric
    circles, and weights (P, R, A) such that sum w (F(psi) + F(-psi)) is the mean."""
    P, R = rho.shape
    radii = np.asarray(radii, dtype=float)
    dd = np.maximum(d, 1e-300)[:, None, None]
    rr = np.maximum(rho, 1e-300)[:, :, None]
    mu_c = np.clip((rr ** 2 + dd ** 2 - radii[None, None, :] ** 2) / (2 * rr * dd), -1.0, 1.0)
    t, w = graded(m, L, L)
    brk = np.sort(np.concatenate([np.zeros((P, R, 1)), np.arccos(mu_c), np.full((P, R, 1), np.pi)], axis=-1),
                  axis=-1)
    a, b = brk[..., :-1, None], brk[..., 1:, None]
    psi = (a + (b - a) * t).reshape(P, R, -1)
    wt = ((b - a) * w).reshape(P, R, -1) / (2 * np.pi)
    return psi, wt


def aligned_sphere_rule(n: int, axis: np.ndarray, d: np.ndarray, rho: np.ndarray, radii: np.ndarray,
                        m: int, L: int, n_azimuth: int = 16):
    """Sphere rule aligned with concentric interfaces.

    ``axis`` (P, n) points from each evaluation point toward the interface
    centre at distance ``d`` (P,); ``rho`` (P, R) are integration radii and
    ``radii`` (K,) the interface radii.  Returns directions (P, R, A, n) and
    mean-weights (P, R, A).
    """
    P, R = rho.shape
    radii = np.asarray(radii, dtype=float)
    dd = np.maximum(d, 1e-300)[:, None, None]
    rr = np.maximum(rho, 1e-300)[:, :, None]
    mu_c = np.clip((rr ** 2 + dd ** 2 - radii[None, None, :] ** 2) / (2 * rr * dd), -1.0, 1.0)
    t, w = graded(m, L, L)
    F = _frames(axis)
    if n == 2:
        brk = np.sort(np.concatenate([np.zeros((P, R, 1)), np.arccos(mu_c), np.full((P, R, 1), np.pi)], axis=-1),
                      axis=-1)
        a, b = brk[..., :-1, None], brk[..., 1:, None]
        psi = (a + (b - a) * t).reshape(P, R, -1)
        wt = ((b - a) * w).reshape(P, R, -1) / np.pi
        c, sn = np.cos(psi), np.sin(psi)
        loc = np.concatenate([np.stack([c, sn], -1), np.stack([c, -sn], -1)], axis=2)
        wts = 0.5 * np.concatenate([wt, wt], axis=2)
    elif n == 3:
        brk = np.sort(np.concatenate([np.full((P, R, 1), -1.0), mu_c, np.ones((P, R, 1))], axis=-1), axis=-1)
        a, b = brk[..., :-1, None], brk[..., 1:, None]
        mu = (a + (b - a) * t).reshape(P, R, -1)
        wm = ((b - a) * w).reshape(P, R, -1) / 2
        phi = 2 * np.pi * (np.arange(n_azimuth) + 0.5) / n_azimuth
        st = np.sqrt(np.maximum(1 - mu ** 2, 0.0))[..., None]
        loc = np.stack([np.broadcast_to(mu[..., None], st.shape[:-1] + (n_azimuth,)),
                        st * np.cos(phi), st * np.sin(phi)], axis=-1).reshape(P, R, -1, 3)
        wts = np.repeat(wm / n_azimuth, n_azimuth, axis=-1)
    else:
        raise NotImplementedError("sphere rules are implemented for n in {2, 3}")
    dirs = loc[..., :1] * F[:, None, None, 0, :]
    for j in range(1, n):
        dirs += loc[..., j:j + 1] * F[:, None, None, j, :]
    return dirs, wts


def primary_group(interfaces, n: int):
    """Split interfaces into the largest concentric family and the rest."""
    if not interfaces:
        return None, np.zeros(0), ()
    centers = {}
    for i in interfaces:
        centers.setdefault(i.center, []).append(i.radius)
    c = max(centers, key=lambda k: len(centers[k]))
    radii = np.array(sorted(set(centers[c])))
    others = tuple(i for i in interfaces if i.center != c)
    return np.asarray(c), radii, others
