"""Lower bounds on the distribution of the stopping time of the sequential rule.

``Pr(tau <= n)`` is bounded below through any pair ``(alpha*, rho*)`` whose
certified success bound reaches ``1 - delta`` at ``n``. The optimised version
searches that pair along the Pareto front ``p_hat_omega = 1 - delta``, which is
a conic in ``(Phi^-1(alpha), rho)`` for each fixed ``omega``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.special import ndtr, ndtri

from .estimation import ConfidenceWidths, confidence_widths
from .numerics import scan_then_refine
from .success import (
    LOG_LOG_2, OMEGA_FLOOR, OMEGA_SCAN_POINTS, AdmissibilityError, OmegaConstants,
    omega_upper, p_hat_success,
)

INNER_SCAN_POINTS = 16


@dataclass(frozen=True)
class StoppingBoundQuery:
    """True parameters ``alpha0``, ``rho0`` plus the algorithm's risk settings at size ``n``."""

    n: int
    alpha0: float
    rho0: float
    delta: float
    beta1: float
    beta2: float

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("n must be at least 2")
        for name in ("alpha0", "rho0", "delta", "beta1", "beta2"):
            if not 0.0 < getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in (0, 1]")

    @property
    def widths(self) -> ConfidenceWidths:
        return confidence_widths(self.n, self.beta1, self.beta2)

    def at(self, n: int) -> "StoppingBoundQuery":
        return StoppingBoundQuery(n, self.alpha0, self.rho0, self.delta, self.beta1, self.beta2)


class StoppingBound(NamedTuple):
    """A lower bound on ``Pr(tau <= n)``.

    ``value`` is NaN when the bound's preconditions fail (no admissible pair);
    ``informative`` is True only when the preconditions hold and ``value > 0``.
    """

    value: float
    informative: bool
    omega: float = math.nan
    alpha_star: float = math.nan
    rho_star: float = math.nan
    reason: str = ""


def _uninformative(reason: str) -> StoppingBound:
    return StoppingBound(math.nan, False, reason=reason)


def _two_exp(n: int, alpha_gap: float, rho_gap: float) -> float:
    return (math.exp(-2.0 * n * alpha_gap * alpha_gap)
            + math.exp(-(n // 2) * 2.0 * rho_gap * rho_gap / (math.pi * math.pi)))


def stopping_cdf_lower_bound(query: StoppingBoundQuery, alpha_star: float,
                             rho_star: float) -> StoppingBound:
    """Two-exponential bound for a caller-chosen pair ``(alpha*, rho*)``."""
    w = query.widths
    ga = query.alpha0 - alpha_star - w.b1
    gr = query.rho0 - rho_star - w.b2
    if not (ga > 0.0 and gr > 0.0):
        return _uninformative("non-positive gap")
    if not (0.0 < alpha_star <= 1.0 and 0.0 < rho_star <= 1.0):
        return _uninformative("pair outside (0, 1]^2")
    if p_hat_success(query.n, alpha_star, rho_star).p < 1.0 - query.delta:
        return _uninformative("pair does not certify 1 - delta")
    value = 1.0 - _two_exp(query.n, ga, gr)
    return StoppingBound(value, value > 0.0, math.nan, alpha_star, rho_star)


# ---------------------------------------------------------------- Pareto front

@dataclass(frozen=True)
class ParetoCoefficients:
    """Coefficients of ``d1 rho^2 + d2 q rho + d3 q^2 + d4 = 0`` with ``q = Phi^-1(alpha)``."""

    d1: float
    d2: float
    d3: float
    d4: float
    omega: float
    n: int
    delta: float

    def residual(self, alpha: float, rho: float) -> float:
        q = float(ndtri(alpha))
        return self.d1 * rho * rho + self.d2 * q * rho + self.d3 * q * q + self.d4


def pareto_coefficients(omega: float, n: int, delta: float) -> ParetoCoefficients:
    oc = OmegaConstants(omega)
    nc1 = n * oc.c1
    if not nc1 > 1.0:
        raise AdmissibilityError(f"n*c1 = {nc1:.6g} must exceed 1")
    c2 = oc.c2
    lg = math.log(nc1)
    k = float(ndtri(1.0 - delta)) if delta < 1.0 else -math.inf
    k2 = k * k
    d1 = (-2.0 * lg * lg / LOG_LOG_2 + 2.0 * lg - 2.0 * c2 * k2 * lg / LOG_LOG_2
          + 2.0 * c2 * k2 - k2)
    d2 = -4.0 * math.sqrt(c2) * lg ** 1.5 / LOG_LOG_2 + 4.0 * math.sqrt(c2) * math.sqrt(lg)
    d3 = -2.0 * c2 * lg / LOG_LOG_2 + 2.0 * c2
    d4 = 2.0 * c2 * k2 * lg / LOG_LOG_2 - 2.0 * c2 * k2
    if not d3 > 0.0:
        raise AdmissibilityError("expected d3 > 0 on the admissible range")
    return ParetoCoefficients(d1, d2, d3, d4, omega, n, delta)


def rho_on_front(alpha: float, coeffs: ParetoCoefficients) -> float:
    """Correlation on the front at ``alpha``; NaN if the discriminant is negative."""
    c = coeffs
    q = float(ndtri(alpha))
    disc = (c.d2 * q) ** 2 - 4.0 * c.d1 * (c.d3 * q * q + c.d4)
    if disc < 0.0:
        return math.nan
    return (-(c.d2 * q) + math.sqrt(disc)) / (2.0 * c.d1)


def alpha_on_front(rho: float, coeffs: ParetoCoefficients) -> float:
    """Level ``alpha`` on the front at correlation ``rho``; NaN if the discriminant is negative."""
    c = coeffs
    disc = (c.d2 * rho) ** 2 - 4.0 * c.d3 * (c.d1 * rho * rho + c.d4)
    if disc < 0.0:
        return math.nan
    return float(ndtr((-(c.d2 * rho) + math.sqrt(disc)) / (2.0 * c.d3)))


def front_interval(query: StoppingBoundQuery, omega: float
                   ) -> tuple[ParetoCoefficients, float, float] | None:
    """Admissible ``alpha*`` interval along the front for ``omega``, or None if empty."""
    w = query.widths
    rho_top = query.rho0 - w.b2
    alpha_top = query.alpha0 - w.b1
    if rho_top <= 0.0 or alpha_top <= 0.0:
        return None
    try:
        coeffs = pareto_coefficients(omega, query.n, query.delta)
    except AdmissibilityError:
        return None
    lo = alpha_on_front(rho_top, coeffs)
    if not (lo > 0.0 and lo < alpha_top):
        return None
    return coeffs, lo, alpha_top


def inner_objective(query: StoppingBoundQuery, coeffs: ParetoCoefficients):
    """Sum of the two tail exponentials along the front, as a function of ``alpha*``."""
    w = query.widths
    n = query.n

    def f(alpha_star: float) -> float:
        rho_star = rho_on_front(alpha_star, coeffs)
        if math.isnan(rho_star):
            return math.inf
        rho_star = max(rho_star, 0.0)
        return _two_exp(n, query.alpha0 - alpha_star - w.b1, query.rho0 - rho_star - w.b2)

    return f


def inner_minimum(query: StoppingBoundQuery, omega: float,
                  tol: float = 1e-12) -> tuple[float, float]:
    """``(alpha*, objective)`` minimising the inner objective at fixed ``omega``;
    ``(nan, inf)`` when the admissible interval is empty."""
    iv = front_interval(query, omega)
    if iv is None:
        return math.nan, math.inf
    coeffs, lo, hi = iv
    # a short scan first: the objective turns down again right at the upper edge
    return scan_then_refine(inner_objective(query, coeffs), lo, hi, INNER_SCAN_POINTS, tol)


def optimized_stopping_bound(query: StoppingBoundQuery) -> StoppingBound:
    """Bound optimised over ``(alpha*, rho*)`` along the front and over ``omega``."""
    hi = omega_upper(query.n)
    if hi <= OMEGA_FLOOR:
        return _uninformative("no admissible omega")

    def outer(omega: float) -> float:
        return inner_minimum(query, omega)[1]

    omega, best = scan_then_refine(outer, OMEGA_FLOOR, hi, OMEGA_SCAN_POINTS, tol=1e-9)
    if not math.isfinite(best):
        return _uninformative("empty admissible set for every omega")
    alpha_star, _ = inner_minimum(query, omega)
    coeffs = pareto_coefficients(omega, query.n, query.delta)
    value = 1.0 - best
    return StoppingBound(value, value > 0.0, omega, alpha_star,
                         max(rho_on_front(alpha_star, coeffs), 0.0),
                         "" if value > 0.0 else "bound not positive")


def stopping_bound_curve(query: StoppingBoundQuery, ns) -> list[StoppingBound]:
    return [optimized_stopping_bound(query.at(int(n))) for n in ns]


def bound_quantile_n(query: StoppingBoundQuery, level: float = 0.5,
                     n_max: int = 10_000_000) -> int | None:
    """Smallest ``n`` (located by bracketing then bisection) at which the
    optimised bound reaches ``level``; None if not reached by ``n_max``."""

    def reaches(n: int) -> bool:
        b = optimized_stopping_bound(query.at(n))
        return b.informative and b.value >= level

    hi = 16
    while not reaches(hi):
        hi *= 2
        if hi > n_max:
            return None
    lo = hi // 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if reaches(mid):
            hi = mid
        else:
            lo = mid
    return hi


def median_crossing_rho(n: int, alpha0: float, delta: float, beta1: float,
                        beta2: float, level: float = 0.5, tol: float = 1e-5) -> float:
    """Smallest true correlation for which the optimised bound at ``n`` reaches ``level``.

    Returns NaN if even ``rho0 = 1`` does not reach it.
    """

    def value(rho0: float) -> float:
        b = optimized_stopping_bound(StoppingBoundQuery(n, alpha0, rho0, delta, beta1, beta2))
        return b.value if b.informative else -math.inf

    if value(1.0) < level:
        return math.nan
    lo, hi = 1e-6, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if value(mid) >= level:
            hi = mid
        else:
            lo = mid
    return hi


def scenario_sample_bound(epsilon: float, eta: float, d: int) -> int:
    """Scenario-approach sample count ``ceil(2/eps log(1/eta) + 2d + 2d/eps log(2/eps))``."""
    if not (0.0 < epsilon < 1.0 and 0.0 < eta < 1.0) or d < 1:
        raise ValueError("need epsilon, eta in (0, 1) and d >= 1")
    val = (2.0 / epsilon * math.log(1.0 / eta) + 2.0 * d
           + 2.0 * d / epsilon * math.log(2.0 / epsilon))
    return int(math.ceil(val))


def empirical_cdf(taus, ns) -> np.ndarray:
    taus = np.sort(np.asarray(taus))
    return np.searchsorted(taus, np.asarray(ns), side="right") / taus.size
