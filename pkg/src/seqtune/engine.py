"""Sequential certification loop and the controller-tuning wrapper around it.

A *sample source* is anything with ``draw() -> (theta, z, x)`` where ``z`` is
the surrogate performance of a freshly sampled candidate ``theta`` and ``x`` its
true performance on a freshly sampled plant. Sources that can also evaluate a
chosen candidate on a new plant expose ``test(theta) -> float``.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Any, Protocol

import numpy as np
from scipy.special import ndtri

from .copulas import CopulaModel, GaussianCopula, as_generator
from .estimation import BivariateSample
from .success import p_hat_success


class SampleSource(Protocol):
    def draw(self) -> tuple[Any, float, float]: ...


@dataclass(frozen=True)
class EngineConfig:
    delta: float
    beta1: float
    beta2: float
    j_star: float
    initial_n: int = 10
    max_n: int = 1_000_000

    def __post_init__(self):
        for name in ("delta", "beta1", "beta2"):
            if not 0.0 < getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in (0, 1]")
        if not self.delta + self.beta1 + self.beta2 < 1.0:
            raise ValueError("delta + beta1 + beta2 must be below 1")
        if self.initial_n < 2:
            raise ValueError("initial_n must be at least 2")
        if not self.max_n > self.initial_n:
            raise ValueError("max_n must exceed initial_n")

    @property
    def gamma(self) -> float:
        return self.delta + self.beta1 + self.beta2


@dataclass(frozen=True)
class TrajectoryStep:
    n: int
    z: float
    x: float
    alpha_hat: float
    rho_hat: float
    alpha_lcb: float
    rho_lcb: float
    p: float
    selected_z: float


@dataclass
class StoppingReport:
    tau: int
    certified: bool
    p_final: float
    alpha_hat: float
    rho_hat: float
    alpha_lcb: float
    rho_lcb: float
    selected_index: int  # 1-based draw index of the smallest surrogate
    selected_z: float
    trajectory: list[TrajectoryStep] = field(default_factory=list)
    selected_theta: Any = None

    def summary(self) -> dict:
        d = asdict(self)
        d.pop("trajectory")
        d.pop("selected_theta")
        return d


class CapExhausted(RuntimeError):
    """Sampling reached ``max_n`` without certifying; carries the partial report."""

    def __init__(self, report: StoppingReport):
        super().__init__(f"no certification within {report.tau} samples")
        self.report = report


def certified_bound(n: int, alpha_lcb: float, rho_lcb: float) -> float:
    """Certified success bound at the lower confidence limits; 0 when either is non-positive."""
    if alpha_lcb <= 0.0 or rho_lcb <= 0.0:
        return 0.0
    return p_hat_success(n, min(alpha_lcb, 1.0), min(rho_lcb, 1.0)).p


def _run(source: SampleSource, config: EngineConfig, keep_trajectory: bool) -> StoppingReport:
    sample = BivariateSample(config.j_star)
    best_z, best_i, best_theta = math.inf, 0, None
    traj: list[TrajectoryStep] = []

    def take():
        nonlocal best_z, best_i, best_theta
        theta, z, x = source.draw()
        sample.push(z, x)
        if z < best_z:
            best_z, best_i, best_theta = z, sample.n, theta
        return z, x

    for _ in range(config.initial_n):
        take()

    target = 1.0 - config.delta
    while True:
        z, x = take()
        n = sample.n
        a_lcb, r_lcb, _ = sample.lower_confidence_bounds(config.beta1, config.beta2)
        p = certified_bound(n, a_lcb, r_lcb)
        a_hat, r_hat = sample.alpha_hat(), sample.rho_hat()
        if keep_trajectory:
            traj.append(TrajectoryStep(n, z, x, a_hat, r_hat, a_lcb, r_lcb, p, best_z))
        done = p >= target
        if done or n >= config.max_n:
            report = StoppingReport(n, done, p, a_hat, r_hat, a_lcb, r_lcb,
                                    best_i, best_z, traj, best_theta)
            if not done:
                raise CapExhausted(report)
            return report


def run_certification(source: SampleSource, config: EngineConfig,
                      keep_trajectory: bool = True) -> StoppingReport:
    """Draw pairs one at a time until the certified success bound reaches ``1 - delta``.

    The first stopping check happens after the first draw beyond the initial
    ``config.initial_n`` pairs.

    Raises
    ------
    CapExhausted
        If ``config.max_n`` pairs are drawn without certifying.
    """
    return _run(source, config, keep_trajectory)


def run_tuning(source: SampleSource, config: EngineConfig,
               keep_trajectory: bool = True) -> tuple[StoppingReport, Any]:
    """As :func:`run_certification`, also returning the candidate with the smallest surrogate."""
    report = _run(source, config, keep_trajectory)
    return report, report.selected_theta


def replay_stop(trajectory: list[TrajectoryStep], delta: float) -> int | None:
    """Stop step implied by a recorded trajectory (first ``n`` with ``p >= 1 - delta``)."""
    for step in trajectory:
        if step.p >= 1.0 - delta:
            return step.n
    return None


# ---------------------------------------------------------------- synthetic sources

class GaussianCopulaSource:
    """Pairs with standard normal marginals and Gaussian copula ``rho``.

    ``theta`` is the candidate's latent surrogate ``z``; :meth:`test` draws a
    fresh true performance for it from ``X | Z = z``. ``j_star`` puts a fraction
    ``alpha0`` of true performances below the threshold.
    """

    def __init__(self, rho: float, alpha0: float, seed=None, batch: int = 4096):
        if not -1.0 < rho < 1.0:
            raise ValueError("rho must lie in (-1, 1)")
        self.rho = rho
        self.alpha0 = alpha0
        self.j_star = float(ndtri(alpha0))
        self._rng = as_generator(seed)
        self._batch = batch
        self._buf = np.empty((0, 2))
        self._pos = 0
        self._s = math.sqrt(1.0 - rho * rho)

    def draw(self):
        if self._pos >= len(self._buf):
            g = self._rng.standard_normal((self._batch, 2))
            g[:, 1] = self.rho * g[:, 0] + self._s * g[:, 1]
            self._buf, self._pos = g, 0
        z, x = self._buf[self._pos]
        self._pos += 1
        return float(z), float(z), float(x)

    def test(self, theta: float) -> float:
        return float(self.rho * theta + self._s * self._rng.standard_normal())


class CopulaSource:
    """Pairs drawn from a copula model with uniform marginals; ``theta`` is ``z``."""

    def __init__(self, model: CopulaModel, seed=None, batch: int = 4096):
        self.model = model
        self._rng = as_generator(seed)
        self._batch = batch
        self._buf = np.empty((0, 2))
        self._pos = 0

    def draw(self):
        if self._pos >= len(self._buf):
            self._buf, self._pos = self.model.sample(self._batch, self._rng), 0
        z, x = self._buf[self._pos]
        self._pos += 1
        return float(z), float(z), float(x)

    def test(self, theta: float) -> float:
        return float(self.model.conditional_ppf(self._rng.random(), theta))


class SequenceSource:
    """Replays a fixed list of ``(z, x)`` pairs; ``theta`` is the 1-based index."""

    def __init__(self, pairs):
        self._pairs = list(pairs)
        self._i = 0

    def draw(self):
        if self._i >= len(self._pairs):
            raise IndexError("sequence exhausted")
        z, x = self._pairs[self._i]
        self._i += 1
        return self._i, float(z), float(x)


def make_copula_source(model: CopulaModel, alpha0: float | None = None, seed=None):
    """Source and threshold for a copula model.

    Gaussian models get normal marginals (threshold ``Phi^-1(alpha0)``); other
    models keep uniform marginals (threshold ``alpha0``).
    """
    if isinstance(model, GaussianCopula):
        src = GaussianCopulaSource(model.rho, alpha0, seed)
        return src, src.j_star
    return CopulaSource(model, seed), float(alpha0)


__all__ = [
    "CapExhausted", "CopulaSource", "EngineConfig", "GaussianCopulaSource", "SampleSource",
    "SequenceSource", "StoppingReport", "TrajectoryStep", "certified_bound",
    "make_copula_source", "replay_stop", "run_certification", "run_tuning",
]
