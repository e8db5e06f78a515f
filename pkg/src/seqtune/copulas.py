"""Bivariate copulas used to generate synthetic (Z, X) performance pairs.

Convention: the first coordinate ``u`` (or ``z``) is the observed surrogate,
the second ``v`` (or ``x``) is the true performance. Conditional CDFs are
always of the second coordinate given the first.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.special import ndtr, ndtri

_INDEPENDENCE_EPS = 1e-8


def as_generator(seed) -> np.random.Generator:
    """Return a PCG64 generator for an int / SeedSequence seed, or pass one through."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(seed))


def kendall_to_rho(kappa):
    """Correlation of the associated Gaussian copula for a Kendall correlation."""
    return np.sin(0.5 * np.pi * np.asarray(kappa, dtype=float))


def rho_to_kendall(rho):
    return (2.0 / np.pi) * np.arcsin(np.asarray(rho, dtype=float))


@dataclass(frozen=True)
class KendallRhoPair:
    kappa: float
    rho: float

    @classmethod
    def from_kappa(cls, kappa: float) -> "KendallRhoPair":
        return cls(float(kappa), float(kendall_to_rho(kappa)))


# ---------------------------------------------------------------- Gaussian

def sample_gaussian_copula(rho: float, count: int, seed=None) -> np.ndarray:
    """``count`` i.i.d. draws from the Gaussian copula, shape ``(count, 2)``."""
    if not -1.0 <= rho <= 1.0:
        raise ValueError("rho must lie in [-1, 1]")
    rng = as_generator(seed)
    z = rng.standard_normal(count)
    e = rng.standard_normal(count)
    x = rho * z + math.sqrt(max(0.0, 1.0 - rho * rho)) * e
    return np.column_stack([ndtr(z), ndtr(x)])


def gaussian_conditional_cdf(x, z, rho: float):
    """Pr(X <= x | Z = z) for the Gaussian copula with correlation ``rho``."""
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    if rho >= 1.0:
        out = (x >= z).astype(float)
    elif rho <= -1.0:
        out = (x >= 1.0 - z).astype(float)
    else:
        out = ndtr((ndtri(x) - rho * ndtri(z)) / math.sqrt(1.0 - rho * rho))
    return out if out.ndim else float(out)


def gaussian_conditional_ppf(w, z, rho: float):
    """Inverse in ``x`` of :func:`gaussian_conditional_cdf`."""
    return ndtr(rho * ndtri(z) + math.sqrt(max(0.0, 1.0 - rho * rho)) * ndtri(w))


# ---------------------------------------------------------------- Frank

def frank_copula_cdf(u, v, lam: float):
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if abs(lam) < _INDEPENDENCE_EPS:
        return u * v
    num = np.expm1(-lam * u) * np.expm1(-lam * v)
    return -np.log1p(num / math.expm1(-lam)) / lam


def frank_conditional_cdf(v, u, lam: float):
    """dC/du of the Frank copula: Pr(V <= v | U = u)."""
    v = np.asarray(v, dtype=float)
    u = np.asarray(u, dtype=float)
    if abs(lam) < _INDEPENDENCE_EPS:
        out = v * np.ones_like(u)
    else:
        # both denominator terms share the sign of the numerator, so there is no cancellation
        ab = np.exp(-lam * u) * np.expm1(-lam * v)
        out = ab / (ab + np.exp(-lam * v) * np.expm1(-lam * (1.0 - v)))
    return out if out.ndim else float(out)


def frank_conditional_ppf(w, u, lam: float):
    """Closed-form inverse in ``v`` of :func:`frank_conditional_cdf`."""
    w = np.asarray(w, dtype=float)
    u = np.asarray(u, dtype=float)
    if abs(lam) < _INDEPENDENCE_EPS:
        return w * np.ones_like(u)
    a = np.exp(-lam * u)
    den = a - w * (a - 1.0)
    # e^{-lam v} - 1 and e^{-lam v}; use whichever keeps precision
    b = w * math.expm1(-lam) / den
    e = (a * (1.0 - w) + w * math.exp(-lam)) / den
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(np.abs(b) < 0.5, -np.log1p(b) / lam, -np.log(e) / lam)
    return out if out.ndim else float(out)


def sample_frank_copula(lam: float, count: int, seed=None) -> np.ndarray:
    """Frank copula draws by conditional inversion, shape ``(count, 2)``."""
    rng = as_generator(seed)
    u = rng.random(count)
    w = rng.random(count)
    v = np.clip(frank_conditional_ppf(w, u, lam), 0.0, 1.0)
    return np.column_stack([u, v])


def debye1(lam: float) -> float:
    """First Debye function D1(x) = (1/x) * integral_0^x t / (e^t - 1) dt."""
    if lam == 0.0:
        return 1.0

    def integrand(t):
        return 1.0 if t == 0.0 else t / math.expm1(t)

    val, _ = integrate.quad(integrand, 0.0, lam, epsabs=1e-14, epsrel=1e-13)
    return val / lam


def frank_kendall(lam: float) -> float:
    """Kendall correlation of the Frank copula with parameter ``lam``."""
    if abs(lam) < _INDEPENDENCE_EPS:
        return 0.0
    if abs(lam) < 1e-3:
        # series: tau = lam/9 - lam^3/900 + ...
        return lam / 9.0 - lam ** 3 / 900.0
    return 1.0 - 4.0 / lam * (1.0 - debye1(lam))


# ---------------------------------------------------------------- models

@dataclass(frozen=True)
class GaussianCopula:
    rho: float

    def __post_init__(self):
        if not -1.0 <= self.rho <= 1.0:
            raise ValueError("rho must lie in [-1, 1]")

    @property
    def kendall(self) -> float:
        return float(rho_to_kendall(self.rho))

    @property
    def associated_rho(self) -> float:
        return self.rho

    def sample(self, count: int, seed=None) -> np.ndarray:
        return sample_gaussian_copula(self.rho, count, seed)

    def conditional_cdf(self, x, z):
        return gaussian_conditional_cdf(x, z, self.rho)

    def conditional_ppf(self, w, z):
        return gaussian_conditional_ppf(w, z, self.rho)


@dataclass(frozen=True)
class FrankCopula:
    lam: float

    def __post_init__(self):
        if not math.isfinite(self.lam) or self.lam == 0.0:
            raise ValueError("Frank parameter must be finite and nonzero")

    @property
    def kendall(self) -> float:
        return frank_kendall(self.lam)

    @property
    def associated_rho(self) -> float:
        return float(kendall_to_rho(self.kendall))

    def sample(self, count: int, seed=None) -> np.ndarray:
        return sample_frank_copula(self.lam, count, seed)

    def conditional_cdf(self, x, z):
        return frank_conditional_cdf(x, z, self.lam)

    def conditional_ppf(self, w, z):
        return frank_conditional_ppf(w, z, self.lam)


CopulaModel = GaussianCopula | FrankCopula


def estimate_nu(model: CopulaModel, grid: int = 500, tails: bool = True) -> float:
    """Lattice estimate of the deviation from the associated Gaussian copula.

    Maximum over a ``grid x grid`` lattice of ``(i / (grid + 1))`` points of the
    associated Gaussian conditional CDF minus the model's conditional CDF,
    clamped below at zero. This is a lower estimate of the true supremum.

    With ``tails`` the lattice axes are augmented by the points ``10**-k`` and
    ``1 - 10**-k`` for ``k = 3..15``. Copulas whose lower-tail conditional CDF
    is non-degenerate (Frank) attain the supremum as ``z -> 0``, which a
    uniform lattice cannot resolve.
    """
    if grid < 2:
        raise ValueError("grid must be at least 2")
    pts = np.arange(1, grid + 1) / (grid + 1.0)
    if tails:
        edge = 10.0 ** -np.arange(3, 16)
        pts = np.unique(np.concatenate([edge, pts, 1.0 - edge]))
    z = pts[:, None]
    x = pts[None, :]
    rho = model.associated_rho
    diff = gaussian_conditional_cdf(x, z, rho) - model.conditional_cdf(x, z)
    return max(0.0, float(np.max(diff)))


__all__ = [
    "CopulaModel", "FrankCopula", "GaussianCopula", "KendallRhoPair", "as_generator",
    "debye1", "estimate_nu", "frank_conditional_cdf", "frank_conditional_ppf",
    "frank_copula_cdf", "frank_kendall", "gaussian_conditional_cdf",
    "gaussian_conditional_ppf", "kendall_to_rho", "rho_to_kendall",
    "sample_frank_copula", "sample_gaussian_copula",
]
