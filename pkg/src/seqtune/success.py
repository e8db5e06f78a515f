"""Lower bound on the Gaussian-copula ordinal-optimisation success probability.

The success probability ``p(n, m, alpha, rho)`` is the chance that, after
ranking ``n`` i.i.d. draws by their surrogate ``Z`` and keeping the best ``m``,
at least one kept draw has its true performance ``X`` in the best ``alpha``
fraction of the ``X`` distribution.

Besides the certified lower bound this module carries two independent oracles
for the exact value: a quadrature over the law of the minimum surrogate, and a
Monte-Carlo simulation of the selection experiment itself.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.special import ndtr, ndtri

from .copulas import CopulaModel, as_generator, gaussian_conditional_cdf
from .numerics import scan_then_refine, unit_interval_rule

LOG_LOG_2 = math.log(math.log(2.0))
PROBIT_CAP = 8.2
# Smallest n * c1 treated as admissible when forming the set of usable omegas.
ADMISSIBLE_NC1 = 2.0
OMEGA_SCAN_POINTS = 64
OMEGA_FLOOR = 1e-3
OMEGA_TOL = 1e-7


class AdmissibilityError(ValueError):
    """Raised when ``n * c1(omega) <= 1`` so the location/scale pair is undefined."""


@dataclass(frozen=True)
class OmegaConstants:
    omega: float

    def __post_init__(self):
        if not 0.0 < self.omega < 0.5 * math.pi:
            raise ValueError("omega must lie in (0, pi/2)")

    @property
    def c1(self) -> float:
        return 0.5 - self.omega / math.pi

    @property
    def c2(self) -> float:
        return 1.0 / math.tan(self.omega) / (math.pi - 2.0 * self.omega)


@dataclass(frozen=True)
class BoundParams:
    n: int
    alpha: float
    rho: float
    m: int = 1
    delta: float = 0.05
    beta1: float = 0.025
    beta2: float = 0.025

    def __post_init__(self):
        if self.n < 1 or not 1 <= self.m <= self.n:
            raise ValueError("need n >= 1 and 1 <= m <= n")
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError("alpha must lie in (0, 1]")
        if not 0.0 < self.rho <= 1.0:
            raise ValueError("rho must lie in (0, 1]")
        for name in ("delta", "beta1", "beta2"):
            if not 0.0 < getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in (0, 1]")


class SuccessBound(NamedTuple):
    p: float
    omega: float
    certifiable: bool


def probit_capped(alpha: float) -> float:
    """Gaussian quantile with the upper end capped at ``PROBIT_CAP`` (so alpha=1 is allowed)."""
    if not 0.0 < alpha <= 1.0:
        raise ValueError("alpha must lie in (0, 1]")
    return min(float(ndtri(alpha)), PROBIT_CAP)


def mu_sigma(n: int, omega: float | OmegaConstants) -> tuple[float, float]:
    """Location ``mu_n`` (negative) and variance ``sigma_n^2`` of the Gaussian
    surrogate for the smallest of ``n`` standard normal surrogates."""
    oc = omega if isinstance(omega, OmegaConstants) else OmegaConstants(omega)
    nc1 = n * oc.c1
    if not nc1 > 1.0:
        raise AdmissibilityError(f"n*c1 = {nc1:.6g} must exceed 1")
    log_nc1 = math.log(nc1)
    mu = -math.sqrt(log_nc1 / oc.c2)
    sigma2 = -LOG_LOG_2 / (2.0 * oc.c2 * (log_nc1 - LOG_LOG_2))
    return mu, sigma2


def p_hat_success_omega(n: int, alpha: float, rho: float, omega: float) -> float:
    """Lower bound on the success probability for a single ``omega``; independent of ``m``."""
    mu, sigma2 = mu_sigma(n, omega)
    q = probit_capped(alpha)
    return float(ndtr((q - rho * mu) / math.sqrt(1.0 - rho * rho + rho * rho * sigma2)))


def omega_upper(n: int) -> float:
    """Largest omega with ``n * c1(omega) >= ADMISSIBLE_NC1``; non-positive if none."""
    return math.pi * (0.5 - ADMISSIBLE_NC1 / n)


def _p_hat_grid(n: int, q: float, rho: float, omegas: np.ndarray) -> np.ndarray:
    c1 = 0.5 - omegas / math.pi
    c2 = 1.0 / np.tan(omegas) / (math.pi - 2.0 * omegas)
    log_nc1 = np.log(n * c1)
    mu = -np.sqrt(log_nc1 / c2)
    sigma2 = -LOG_LOG_2 / (2.0 * c2 * (log_nc1 - LOG_LOG_2))
    return ndtr((q - rho * mu) / np.sqrt(1.0 - rho * rho + rho * rho * sigma2))


def p_hat_success(n: int, alpha: float, rho: float) -> SuccessBound:
    """Bound maximised over the admissible omegas.

    The admissible set is ``{omega : n * c1(omega) >= 2}``. If it is empty the
    result is ``SuccessBound(0.0, nan, False)``: nothing can be certified.
    """
    hi = omega_upper(n)
    if hi <= OMEGA_FLOOR:
        return SuccessBound(0.0, math.nan, False)
    q = probit_capped(alpha)
    r2 = rho * rho

    def neg(w):
        # inlined mu_sigma: this runs at every step of the sequential loop
        c2 = 1.0 / math.tan(w) / (math.pi - 2.0 * w)
        lg = math.log(n * (0.5 - w / math.pi))
        mu = -math.sqrt(lg / c2)
        sigma2 = -LOG_LOG_2 / (2.0 * c2 * (lg - LOG_LOG_2))
        return -float(ndtr((q - rho * mu) / math.sqrt(1.0 - r2 + r2 * sigma2)))

    # the bound is flat to second order at its maximiser, so a loose omega
    # tolerance still gives the value to about 1e-13
    w, v = scan_then_refine(neg, OMEGA_FLOOR, hi, OMEGA_SCAN_POINTS, tol=OMEGA_TOL,
                            vectorized=lambda g: -_p_hat_grid(n, q, rho, g))
    return SuccessBound(-v, w, True)


# ---------------------------------------------------------------- oracles

def p_success_gaussian_oracle(n: int, alpha: float, rho: float, m: int = 1,
                              panel_order: int = 16, levels: int = 12) -> float:
    """Exact success probability for a Gaussian copula and ``m = 1`` by quadrature.

    Integrates the conditional CDF of the kept ``X`` against the Beta(1, n) law of
    the smallest uniform surrogate. The substitution ``t = 1 - (1 - z)**n`` turns
    that density into the uniform one.
    """
    if m != 1:
        raise ValueError("the quadrature oracle covers m = 1 only")
    if n < 1:
        raise ValueError("n must be positive")
    if not 0.0 < alpha <= 1.0:
        raise ValueError("alpha must lie in (0, 1]")
    if not -1.0 < rho < 1.0:
        raise ValueError("rho must lie in (-1, 1)")
    if alpha == 1.0:
        return 1.0
    rule = unit_interval_rule(panel_order, levels)

    def integrand(t):
        z = -np.expm1(np.log1p(-t) / n)
        return gaussian_conditional_cdf(alpha, z, rho)

    return min(1.0, rule.integrate(integrand))


def _smallest_uniforms(rng: np.random.Generator, trials: int, n: int, m: int) -> np.ndarray:
    """The ``m`` smallest of ``n`` i.i.d. uniforms per trial, via the sequential
    order-statistic construction; shape ``(trials, m)``."""
    out = np.empty((trials, m))
    surv = np.ones(trials)  # 1 - U_(k)
    for k in range(m):
        e = 1.0 - rng.random(trials)  # (0, 1]
        surv = surv * np.exp(np.log(e) / (n - k))
        out[:, k] = 1.0 - surv
    return np.clip(out, 1e-300, 1.0 - 1e-16)


def p_success_mc_oracle(model: CopulaModel, n: int, m: int, alpha: float,
                        trials: int, seed=None, method: str = "order",
                        chunk: int = 200_000) -> tuple[float, float]:
    """Monte-Carlo estimate of the success probability and its standard error.

    ``method="direct"`` simulates all ``n`` pairs per trial and selects the ``m``
    smallest surrogates. ``method="order"`` draws only the ``m`` smallest
    surrogates (exact in law) and then their partners from the conditional
    distribution. With uniform marginals the ``alpha`` quantile of ``X`` is
    ``alpha`` itself.
    """
    if trials < 1 or not 1 <= m <= n:
        raise ValueError("need trials >= 1 and 1 <= m <= n")
    rng = as_generator(seed)
    hits = 0
    done = 0
    while done < trials:
        k = min(chunk, trials - done)
        if method == "order":
            z = _smallest_uniforms(rng, k, n, m)
            x = model.conditional_ppf(rng.random((k, m)), z)
        elif method == "direct":
            k = max(1, min(k, chunk * 8 // n))
            pairs = model.sample(k * n, rng).reshape(k, n, 2)
            idx = np.argsort(pairs[:, :, 0], axis=1)[:, :m]
            x = np.take_along_axis(pairs[:, :, 1], idx, axis=1)
        else:
            raise ValueError(f"unknown method {method!r}")
        hits += int(np.count_nonzero(np.min(x, axis=1) <= alpha))
        done += k
    est = hits / trials
    se = math.sqrt(max(est * (1.0 - est), 0.0) / trials)
    return est, se
