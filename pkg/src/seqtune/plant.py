"""Perturbed linear-plant benchmark: a concrete sample source for the tuning engine.

Candidates are quadratic cost pairs ``(Q, R)`` with random orthogonal
eigenvectors and exponential eigenvalues. Each candidate is turned into a
state-feedback gain by a finite-horizon Riccati recursion on the nominal model
and closed around a steady-state feedforward for the output reference. The
surrogate ``z`` is the squared tracking error on the nominal plant and the true
performance ``x`` the same error on a randomly perturbed plant.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .copulas import as_generator

STATE_CLAMP = 1e8


@dataclass(frozen=True, eq=False)
class PlantScenario:
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    reference: np.ndarray  # (outputs, T)
    std_A: np.ndarray
    std_B: np.ndarray
    x0: np.ndarray
    riccati_horizon: int = 40

    def __post_init__(self):
        A, B, C, ref = (np.asarray(v, dtype=float) for v in (self.A, self.B, self.C, self.reference))
        s = A.shape[0]
        if A.shape != (s, s) or s < 1:
            raise ValueError("A must be square")
        if B.ndim != 2 or B.shape[0] != s or B.shape[1] < 1:
            raise ValueError("B must have as many rows as A")
        if C.ndim != 2 or C.shape[1] != s or C.shape[0] < 1:
            raise ValueError("C must have as many columns as A")
        if ref.ndim != 2 or ref.shape[0] != C.shape[0] or ref.shape[1] < 1:
            raise ValueError("reference must be outputs x T")
        std_A = np.broadcast_to(np.asarray(self.std_A, dtype=float), A.shape).copy()
        std_B = np.broadcast_to(np.asarray(self.std_B, dtype=float), B.shape).copy()
        x0 = np.broadcast_to(np.asarray(self.x0, dtype=float), (s,)).copy()
        if np.any(std_A < 0) or np.any(std_B < 0):
            raise ValueError("perturbation standard deviations must be non-negative")
        for name, v in (("A", A), ("B", B), ("C", C), ("reference", ref),
                        ("std_A", std_A), ("std_B", std_B), ("x0", x0)):
            v.setflags(write=False)
            object.__setattr__(self, name, v)
        # steady-state map: [A - I, B; C, 0] [x; u] = [0; r]
        o, u = C.shape[0], B.shape[1]
        M = np.block([[A - np.eye(s), B], [C, np.zeros((o, u))]])
        rhs = np.vstack([np.zeros((s, ref.shape[1])), ref])
        sol = np.linalg.lstsq(M, rhs, rcond=None)[0]
        object.__setattr__(self, "_x_ss", sol[:s].T.copy())
        object.__setattr__(self, "_u_ss", sol[s:].T.copy())
        K = riccati_gain(A, B, np.eye(s), np.eye(u), self.riccati_horizon)
        radius = np.max(np.abs(np.linalg.eigvals(A - B @ K)))
        if not radius < 1.0:
            raise ValueError(f"nominal closed loop with Q=I, R=I is unstable (radius {radius:.3g})")

    @property
    def states(self) -> int:
        return self.A.shape[0]

    @property
    def inputs(self) -> int:
        return self.B.shape[1]

    @property
    def horizon(self) -> int:
        return self.reference.shape[1]

    def perturbed(self, rng) -> tuple[np.ndarray, np.ndarray]:
        rng = as_generator(rng)
        dA = rng.standard_normal(self.A.shape) * self.std_A
        dB = rng.standard_normal(self.B.shape) * self.std_B
        return self.A + dA, self.B + dB


@dataclass(frozen=True, eq=False)
class ControllerSample:
    Q: np.ndarray
    R: np.ndarray
    K: np.ndarray
    meta: dict = field(default_factory=dict)


def relative_std(M: np.ndarray, scale: float = 0.05, floor: float = 0.01) -> np.ndarray:
    return np.maximum(scale * np.abs(np.asarray(M, dtype=float)), floor)


def default_scenario() -> PlantScenario:
    """Four states, two inputs, two outputs, 120 steps; 5 % entrywise perturbations.

    The loop starts away from the origin so that the regulation transient, which
    depends strongly on the gain, dominates the offset caused by the nominal
    feedforward on a perturbed plant.
    """
    A = np.array([[0.92, 0.10, 0.00, 0.00],
                  [0.00, 0.85, 0.12, 0.00],
                  [0.05, 0.00, 0.80, 0.10],
                  [0.00, 0.06, 0.00, 0.90]])
    B = np.array([[0.40, 0.00],
                  [0.10, 0.30],
                  [0.00, 0.50],
                  [0.20, 0.35]])
    C = np.array([[1.0, 0.0, 0.0, 0.0],
                  [0.0, 0.0, 0.0, 1.0]])
    T = 120
    k = np.arange(T)
    ref = np.zeros((2, T))
    ref[0] = np.where(k < 10, 0.0, np.where(k < 60, 1.0, -0.5))
    ref[1] = np.where(k < 30, 0.0, np.where(k < 90, 0.8, 0.3))
    return PlantScenario(A, B, C, ref, relative_std(A), relative_std(B),
                         np.array([2.0, -2.0, 2.0, -2.0]))


def random_orthogonal(dim: int, rng) -> np.ndarray:
    """Haar-distributed orthogonal matrix from a sign-corrected QR factorisation."""
    rng = as_generator(rng)
    q, r = np.linalg.qr(rng.standard_normal((dim, dim)))
    return q * np.sign(np.diag(r))


def _positive_exponentials(rng, rate: float, size: int) -> np.ndarray:
    d = rng.exponential(1.0 / rate, size)
    while np.any(d <= 0.0):
        bad = d <= 0.0
        d[bad] = rng.exponential(1.0 / rate, int(bad.sum()))
    return d


def riccati_gain(A, B, Q, R, horizon: int) -> np.ndarray:
    """First-step gain of the finite-horizon LQR recursion with terminal cost ``Q``.

    Works on single matrices or stacks with a leading batch axis.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    P = np.array(Q, dtype=float)
    At = np.swapaxes(A, -1, -2)
    Bt = np.swapaxes(B, -1, -2)
    K = None
    for _ in range(horizon):
        BtP = Bt @ P
        K = np.linalg.solve(R + BtP @ B, BtP @ A)
        P = Q + At @ P @ (A - B @ K)
        P = 0.5 * (P + np.swapaxes(P, -1, -2))
    return K


def sample_controller(scenario: PlantScenario, seed=None) -> ControllerSample:
    """``Q = W_Q diag(Exp(1)) W_Q^T``, ``R = W_R diag(Exp(100)) W_R^T`` and the gain."""
    rng = as_generator(seed)
    s, u = scenario.states, scenario.inputs
    Wq = random_orthogonal(s, rng)
    Wr = random_orthogonal(u, rng)
    Dq = _positive_exponentials(rng, 1.0, s)
    Dr = _positive_exponentials(rng, 100.0, u)
    Q = (Wq * Dq) @ Wq.T
    R = (Wr * Dr) @ Wr.T
    Q = 0.5 * (Q + Q.T)
    R = 0.5 * (R + R.T)
    K = riccati_gain(scenario.A, scenario.B, Q, R, scenario.riccati_horizon)
    return ControllerSample(Q, R, K, {"D_Q": Dq, "D_R": Dr})


def sample_controllers(scenario: PlantScenario, count: int, rng) -> list[ControllerSample]:
    """Batch version of :func:`sample_controller` (gains computed in one stacked recursion)."""
    rng = as_generator(rng)
    s, u = scenario.states, scenario.inputs
    Qs = np.empty((count, s, s))
    Rs = np.empty((count, u, u))
    for i in range(count):
        Wq = random_orthogonal(s, rng)
        Wr = random_orthogonal(u, rng)
        Dq = _positive_exponentials(rng, 1.0, s)
        Dr = _positive_exponentials(rng, 100.0, u)
        Q = (Wq * Dq) @ Wq.T
        R = (Wr * Dr) @ Wr.T
        Qs[i] = 0.5 * (Q + Q.T)
        Rs[i] = 0.5 * (R + R.T)
    A = np.broadcast_to(scenario.A, (count, s, s))
    B = np.broadcast_to(scenario.B, (count, s, u))
    Ks = riccati_gain(A, B, Qs, Rs, scenario.riccati_horizon)
    return [ControllerSample(Qs[i], Rs[i], Ks[i]) for i in range(count)]


def tracking_errors(scenario: PlantScenario, K: np.ndarray, A: np.ndarray,
                    B: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Squared Frobenius tracking error for stacked gains and plants.

    ``K`` is ``(k, u, s)``, ``A`` ``(k, s, s)``, ``B`` ``(k, s, u)``. Returns the
    costs and a boolean flag per run telling whether the state clamp engaged.
    """
    k = K.shape[0]
    x = np.broadcast_to(scenario.x0, (k, scenario.states)).copy()
    cost = np.zeros(k)
    clamped = np.zeros(k, dtype=bool)
    C, ref, xs, us = scenario.C, scenario.reference, scenario._x_ss, scenario._u_ss
    for t in range(scenario.horizon):
        u = us[t] - np.einsum("kij,kj->ki", K, x - xs[t])
        x = np.einsum("kij,kj->ki", A, x) + np.einsum("kij,kj->ki", B, u)
        big = np.abs(x) > STATE_CLAMP
        if big.any():
            clamped |= big.any(axis=1)
            x = np.clip(x, -STATE_CLAMP, STATE_CLAMP)
        err = x @ C.T - ref[:, t]
        cost += np.einsum("ki,ki->k", err, err)
    return cost, clamped


def evaluate_pair(scenario: PlantScenario, controller: ControllerSample,
                  perturb_seed=None) -> tuple[float, float]:
    """``(z, x)``: tracking error on the nominal plant and on one perturbed plant."""
    A1, B1 = scenario.perturbed(perturb_seed)
    K = np.stack([controller.K, controller.K])
    A = np.stack([scenario.A, A1])
    B = np.stack([scenario.B, B1])
    cost, _ = tracking_errors(scenario, K, A, B)
    return float(cost[0]), float(cost[1])


class PlantSource:
    """Sample source over the benchmark; candidates and plants are drawn in batches.

    ``clamp_events`` counts evaluations in which the state clamp engaged.
    """

    def __init__(self, scenario: PlantScenario, seed=None, batch: int = 256):
        self.scenario = scenario
        self._rng = as_generator(seed)
        self._batch = batch
        self._queue: list[tuple[ControllerSample, float, float]] = []
        self._pos = 0
        self.clamp_events = 0

    def _refill(self):
        sc, k = self.scenario, self._batch
        ctrls = sample_controllers(sc, k, self._rng)
        K = np.stack([c.K for c in ctrls])
        dA = self._rng.standard_normal((k, *sc.A.shape)) * sc.std_A
        dB = self._rng.standard_normal((k, *sc.B.shape)) * sc.std_B
        A = np.concatenate([np.broadcast_to(sc.A, dA.shape), sc.A + dA])
        B = np.concatenate([np.broadcast_to(sc.B, dB.shape), sc.B + dB])
        cost, clamped = tracking_errors(sc, np.concatenate([K, K]), A, B)
        self.clamp_events += int(clamped.sum())
        self._queue = [(c, float(cost[i]), float(cost[k + i])) for i, c in enumerate(ctrls)]
        self._pos = 0

    def draw(self):
        if self._pos >= len(self._queue):
            self._refill()
        item = self._queue[self._pos]
        self._pos += 1
        return item

    def test(self, controller: ControllerSample) -> float:
        A1, B1 = self.scenario.perturbed(self._rng)
        cost, clamped = tracking_errors(self.scenario, controller.K[None], A1[None], B1[None])
        self.clamp_events += int(clamped.sum())
        return float(cost[0])

    def pilot(self, count: int) -> np.ndarray:
        """``count`` draws as an array of ``(z, x)``, for threshold calibration."""
        return np.array([self.draw()[1:] for _ in range(count)])


def calibrate_threshold(scenario: PlantScenario, alpha0: float, count: int = 20_000,
                        seed=None) -> float:
    """Empirical ``alpha0`` quantile of the true performance from an independent pilot run."""
    xs = PlantSource(scenario, seed).pilot(count)[:, 1]
    return float(np.quantile(xs, alpha0))


# ---------------------------------------------------------------- config files

def _read_reference(ref, base: Path) -> np.ndarray:
    if isinstance(ref, str):
        path = Path(ref)
        if not path.is_absolute():
            path = base / path
        with open(path, newline="") as fh:
            rows = [[float(v) for v in row] for row in csv.reader(fh) if row]
        return np.array(rows)
    return np.asarray(ref, dtype=float)


def scenario_from_dict(cfg: dict, base: Path | str = ".") -> PlantScenario:
    """Build a scenario from a mapping.

    Keys: ``A``, ``B``, ``C`` (matrix literals), ``reference`` (matrix literal or
    CSV path, one row per output), optional ``x0``, ``riccati_horizon`` and
    either ``std_A`` / ``std_B`` (scalars or matrices) or ``relative_std`` with
    optional ``std_floor``.
    """
    base = Path(base)
    missing = [k for k in ("A", "B", "C", "reference") if k not in cfg]
    if missing:
        raise KeyError(f"scenario is missing {', '.join(missing)}")
    A = np.asarray(cfg["A"], dtype=float)
    B = np.asarray(cfg["B"], dtype=float)
    C = np.asarray(cfg["C"], dtype=float)
    ref = _read_reference(cfg["reference"], base)
    if "std_A" in cfg or "std_B" in cfg:
        std_A = cfg.get("std_A", 0.0)
        std_B = cfg.get("std_B", 0.0)
    else:
        rel = float(cfg.get("relative_std", 0.05))
        floor = float(cfg.get("std_floor", 0.01))
        std_A, std_B = relative_std(A, rel, floor), relative_std(B, rel, floor)
    return PlantScenario(A, B, C, ref, std_A, std_B, cfg.get("x0", 0.0),
                         int(cfg.get("riccati_horizon", 40)))


def scenario_to_dict(sc: PlantScenario) -> dict:
    return {
        "A": sc.A.tolist(), "B": sc.B.tolist(), "C": sc.C.tolist(),
        "reference": sc.reference.tolist(), "std_A": sc.std_A.tolist(),
        "std_B": sc.std_B.tolist(), "x0": sc.x0.tolist(),
        "riccati_horizon": sc.riccati_horizon,
    }


def load_scenario(path: str | Path) -> PlantScenario:
    """Read a scenario from a YAML or JSON file."""
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() == ".json":
        cfg = json.loads(text)
    else:
        import yaml
        cfg = yaml.safe_load(text)
    return scenario_from_dict(cfg, path.parent)
