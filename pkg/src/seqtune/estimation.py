"""Point estimates of alpha and rho and their one-sided confidence widths."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ConfidenceWidths:
    b1: float
    b2: float
    beta1: float
    beta2: float


def confidence_widths(n: int, beta1: float, beta2: float) -> ConfidenceWidths:
    """Hoeffding width for alpha and the U-statistic width for rho at sample size ``n``."""
    if n < 2:
        raise ValueError("need n >= 2")
    for b in (beta1, beta2):
        if not 0.0 < b <= 1.0:
            raise ValueError("confidence parameters must lie in (0, 1]")
    b1 = math.sqrt(math.log(1.0 / beta1) / (2.0 * n))
    b2 = math.pi * math.sqrt(math.log(1.0 / beta2) / (2.0 * (n // 2)))
    return ConfidenceWidths(b1, b2, beta1, beta2)


class BivariateSample:
    """Growing sample of (z, x) pairs with an incrementally maintained Kendall sum.

    ``concordance_sum`` is ``S = sum_{i != j} sign((x_i - x_j)(z_i - z_j))``, so
    the sample Kendall correlation is ``S / (n (n - 1))``. Each push costs O(n).
    Ties contribute zero.
    """

    def __init__(self, x_star: float, capacity: int = 1024):
        self.x_star = float(x_star)
        self._z = np.empty(capacity)
        self._x = np.empty(capacity)
        self.n = 0
        self.concordance_sum = 0
        self.below_threshold_count = 0

    @property
    def z(self) -> np.ndarray:
        return self._z[: self.n]

    @property
    def x(self) -> np.ndarray:
        return self._x[: self.n]

    def __len__(self) -> int:
        return self.n

    def push(self, z: float, x: float) -> "BivariateSample":
        n = self.n
        if n:
            prod = (x - self._x[:n]) * (z - self._z[:n])
            self.concordance_sum += 2 * (int(np.count_nonzero(prod > 0))
                                         - int(np.count_nonzero(prod < 0)))
        if n == self._z.size:
            self._z = np.concatenate([self._z, np.empty(n)])
            self._x = np.concatenate([self._x, np.empty(n)])
        self._z[n] = z
        self._x[n] = x
        self.n = n + 1
        if x <= self.x_star:
            self.below_threshold_count += 1
        return self

    def extend(self, pairs) -> "BivariateSample":
        for z, x in pairs:
            self.push(z, x)
        return self

    def set_threshold(self, x_star: float) -> None:
        self.x_star = float(x_star)
        self.below_threshold_count = int(np.count_nonzero(self.x <= self.x_star))

    def alpha_hat(self) -> float:
        if self.n < 1:
            raise ValueError("empty sample")
        return self.below_threshold_count / self.n

    def kappa_hat(self) -> float:
        if self.n < 2:
            raise ValueError("need at least two pairs")
        return self.concordance_sum / (self.n * (self.n - 1))

    def rho_hat(self) -> float:
        return math.sin(0.5 * math.pi * max(0.0, self.kappa_hat()))

    def lower_confidence_bounds(self, beta1: float, beta2: float
                                ) -> tuple[float, float, ConfidenceWidths]:
        """``(alpha_hat - b1, rho_hat - b2, widths)``; either bound may be negative."""
        w = confidence_widths(self.n, beta1, beta2)
        return self.alpha_hat() - w.b1, self.rho_hat() - w.b2, w


def kendall_sum(z, x) -> int:
    """Brute-force concordance sum over all ordered pairs ``i != j`` (O(n^2) memory)."""
    z = np.asarray(z, dtype=float)
    x = np.asarray(x, dtype=float)
    s = np.sign(z[:, None] - z[None, :]) * np.sign(x[:, None] - x[None, :])
    return int(s.sum())


def push_pair(sample: BivariateSample, z: float, x: float) -> BivariateSample:
    return sample.push(z, x)


def alpha_hat(sample: BivariateSample) -> float:
    return sample.alpha_hat()


def rho_hat(sample: BivariateSample) -> float:
    return sample.rho_hat()


def lower_confidence_bounds(sample: BivariateSample, beta1: float, beta2: float):
    return sample.lower_confidence_bounds(beta1, beta2)
