"""Scalar numerics shared by the bound, oracle and search code.

Everything here is pure and reentrant.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import log_ndtr, ndtr, ndtri

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
_INV_PHI2 = (3.0 - math.sqrt(5.0)) / 2.0
_SQRT_2PI = math.sqrt(2.0 * math.pi)


def std_normal_cdf(x):
    """Standard Gaussian CDF. Accepts scalars or arrays; saturates in the tails."""
    return ndtr(x)


def std_normal_logcdf(x):
    """log of the standard Gaussian CDF, finite far into the lower tail."""
    return log_ndtr(x)


def std_normal_pdf(x):
    return np.exp(-0.5 * np.square(x)) / _SQRT_2PI


def std_normal_quantile(p):
    """Inverse of :func:`std_normal_cdf` on the open interval (0, 1).

    One Newton step against ``std_normal_cdf`` is applied after ``ndtri`` so the
    pair round-trips as tightly as double precision allows.

    Raises
    ------
    ValueError
        If any ``p`` lies outside (0, 1).
    """
    arr = np.asarray(p, dtype=float)
    if np.any(~(arr > 0.0)) or np.any(~(arr < 1.0)):
        raise ValueError("std_normal_quantile requires p in (0, 1)")
    x = ndtri(arr)
    dens = std_normal_pdf(x)
    # Newton is only worth it where the density is not underflowing.
    ok = dens > 1e-300
    step = np.where(ok, (ndtr(x) - arr) / np.where(ok, dens, 1.0), 0.0)
    # Deep tail: relative error of ndtr dominates; skip the update there.
    step = np.where(np.abs(x) < 8.0, step, 0.0)
    x = x - step
    if np.ndim(x) == 0:
        return float(x)
    return x


def beta_first_order_density(z, n: int):
    """Density of the minimum of ``n`` i.i.d. uniforms, i.e. Beta(1, n)."""
    if n < 1:
        raise ValueError("n must be a positive integer")
    arr = np.asarray(z, dtype=float)
    if np.any(~(arr > 0.0)) or np.any(~(arr < 1.0)):
        raise ValueError("z must lie in (0, 1)")
    out = n * np.exp((n - 1) * np.log1p(-arr))
    if np.ndim(out) == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class Quadrature:
    """Composite Gauss-Legendre rule on [0, 1].

    Panels are graded geometrically toward both endpoints (breakpoints at
    ``10**-k`` and ``1 - 10**-k``) because the integrands used here carry
    logarithmic endpoint singularities in their derivatives.
    """

    nodes: np.ndarray
    weights: np.ndarray
    panel_order: int
    levels: int

    @property
    def node_count(self) -> int:
        return int(self.nodes.size)

    def integrate(self, f: Callable[[np.ndarray], np.ndarray]) -> float:
        return float(np.dot(self.weights, f(self.nodes)))


_RULE_CACHE: dict[tuple[int, int], Quadrature] = {}


def unit_interval_rule(panel_order: int = 16, levels: int = 12) -> Quadrature:
    """Composite Gauss-Legendre rule on [0, 1], graded geometrically toward both ends.

    Panels break at ``10**-k`` and ``1 - 10**-k`` for ``k = 1..levels``, with
    ``panel_order`` nodes each. Cached per ``(panel_order, levels)``.
    """
    if panel_order < 1 or not 1 <= levels <= 13:
        raise ValueError("need panel_order >= 1 and 1 <= levels <= 13")
    key = (panel_order, levels)
    rule = _RULE_CACHE.get(key)
    if rule is not None:
        return rule
    x, w = np.polynomial.legendre.leggauss(panel_order)
    small = [10.0 ** -k for k in range(levels, 0, -1)]
    breaks = np.unique(np.array([0.0, *small, 0.5, *[1.0 - s for s in reversed(small)], 1.0]))
    a, b = breaks[:-1, None], breaks[1:, None]
    nodes = (a + (b - a) * (x + 1.0) / 2.0).ravel()
    weights = ((b - a) * w / 2.0).ravel()
    nodes.setflags(write=False)
    weights.setflags(write=False)
    rule = Quadrature(nodes, weights, panel_order, levels)
    _RULE_CACHE[key] = rule
    return rule


def minimize_quasiconvex(f: Callable[[float], float], lo: float, hi: float,
                         tol: float = 1e-8) -> tuple[float, float]:
    """Golden-section search for the minimiser of ``f`` on ``[lo, hi]``.

    The bracket is shrunk until its width is below ``tol`` (absolute) or a
    ``1e-8`` relative tolerance, whichever is larger. For quasiconvex ``f`` the
    result is the global minimiser. Returns ``(argmin, f(argmin))``; if the
    endpoints evaluate lower than the interior candidate they win.
    """
    if not lo < hi:
        raise ValueError("need lo < hi")
    a, b = lo, hi
    width_tol = max(tol, 1e-8 * max(abs(lo), abs(hi)))
    c = a + _INV_PHI2 * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > width_tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = a + _INV_PHI2 * (b - a)
            fc = f(c)
        elif fc > fd:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = f(d)
        else:
            # flat: collapse onto the inner pair
            a, b = c, d
            c = a + _INV_PHI2 * (b - a)
            d = a + _INV_PHI * (b - a)
            fc, fd = f(c), f(d)
    x = 0.5 * (a + b)
    fx = f(x)
    for edge in (lo, hi):
        fe = f(edge)
        if fe < fx:
            x, fx = edge, fe
    return x, fx


def scan_then_refine(f: Callable[[float], float], lo: float, hi: float,
                     points: int = 64, tol: float = 1e-10,
                     vectorized: Callable[[np.ndarray], np.ndarray] | None = None
                     ) -> tuple[float, float]:
    """Coarse grid scan followed by golden-section refinement around the best point.

    ``vectorized`` may evaluate the whole coarse grid at once.
    """
    grid = np.linspace(lo, hi, points)
    vals = vectorized(grid) if vectorized is not None else np.array([f(g) for g in grid])
    vals = np.where(np.isnan(vals), np.inf, vals)
    i = int(np.argmin(vals))
    if not np.isfinite(vals[i]):
        return float(grid[i]), float(vals[i])
    a = grid[max(i - 1, 0)]
    b = grid[min(i + 1, points - 1)]
    if a == b:
        return float(grid[i]), float(vals[i])
    x, fx = minimize_quasiconvex(f, float(a), float(b), tol)
    if vals[i] < fx:
        return float(grid[i]), float(vals[i])
    return x, fx
