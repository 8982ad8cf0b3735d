"""Correlated Gaussian phase noise acting collectively on a qubit register.

Energies are stored as angular frequencies (hbar = 1): the noise amplitude
``delta(t) = dE(t)/hbar`` is in rad/s and its stationary variance ``sigma2`` in
rad^2/s^2.  The correlation function is ``sigma2 * exp(-gamma * tau)``.

Three noise kinds are supported:

``"ou"``
    Ornstein-Uhlenbeck process with the exponential correlation above.
``"white"``
    The Markovian degeneration (gamma -> inf with sigma2/gamma fixed).  The
    phase performs a Wiener walk with diffusion ``sigma2/gamma``.
``"static"``
    The frozen degeneration (gamma -> 0): one Gaussian detuning per run.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .estimate import Estimate, merge_estimates

NOISE_KINDS = ("ou", "white", "static")
MC_CHUNK = 10_000


class DiscretizationWarning(UserWarning):
    """Time step too coarse relative to the noise correlation time."""


@dataclass(frozen=True)
class NoiseParams:
    sigma2: float
    gamma: float = 1.0
    kind: str = "ou"

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise ValueError(f"kind must be one of {NOISE_KINDS}, got {self.kind!r}")
        if not self.sigma2 >= 0:
            raise ValueError(f"sigma2 must be >= 0, got {self.sigma2}")
        if self.kind == "static":
            if not self.gamma >= 0:
                raise ValueError(f"gamma must be >= 0, got {self.gamma}")
        elif not self.gamma > 0:
            raise ValueError(f"gamma must be > 0, got {self.gamma}")

    @classmethod
    def from_single_qubit_t2(cls, t2: float, gamma: float, kind: str = "ou") -> "NoiseParams":
        """Noise whose Markovian single-qubit decay time is ``t2``."""
        if t2 <= 0:
            raise ValueError("t2 must be > 0")
        return cls(sigma2=gamma / t2, gamma=gamma, kind=kind)


@dataclass(frozen=True)
class Trajectory:
    dt: float
    samples: np.ndarray = field(repr=False)
    seed: int

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(len(self.samples))


def _check_qubits(n):
    if int(n) != n or n < 1:
        raise ValueError(f"qubit count must be a positive integer, got {n}")


def _check_time(t):
    if not t >= 0:
        raise ValueError(f"time must be >= 0, got {t}")


def _ou_shape(x):
    """exp(-x) + x - 1, accurate for small x."""
    if x < 1e-3:
        return x * x * (0.5 - x * (1 / 6 - x * (1 / 24 - x / 120)))
    return math.expm1(-x) + x


def integrated_phase_variance(params: NoiseParams, t: float) -> float:
    """Variance of the accumulated phase ``int_0^t delta(s) ds`` in rad^2."""
    _check_time(t)
    if params.kind == "static":
        return params.sigma2 * t * t
    if params.kind == "white":
        return 2.0 * params.sigma2 * t / params.gamma
    g = params.gamma
    return 2.0 * params.sigma2 * _ou_shape(g * t) / (g * g)


def error_probability(n: int, params: NoiseParams, t: float) -> float:
    """Effective error probability of an n-qubit GHZ state after time ``t``."""
    _check_qubits(n)
    return n * n * integrated_phase_variance(params, t) / 4.0


def fidelity_analytic(n: int, params: NoiseParams, t: float) -> float:
    return 0.5 * (1.0 + math.exp(-2.0 * error_probability(n, params, t)))


def t2_markovian(n: int, params: NoiseParams) -> float:
    """Markovian decay time gamma/(n^2 sigma2); ``inf`` for noiseless params."""
    _check_qubits(n)
    if params.sigma2 == 0:
        return math.inf
    return params.gamma / (n * n * params.sigma2)


def tau_static(n: int, params: NoiseParams) -> float:
    """Static-noise Gaussian decay time 1/(n sigma); ``inf`` for noiseless params."""
    _check_qubits(n)
    if params.sigma2 == 0:
        return math.inf
    return 1.0 / (n * math.sqrt(params.sigma2))


def fidelity_markov_limit(n: int, params: NoiseParams, t: float) -> float:
    _check_time(t)
    t2 = t2_markovian(n, params)
    return 0.5 * (1.0 + math.exp(-t / t2))


def fidelity_static_limit(n: int, params: NoiseParams, t: float) -> float:
    _check_time(t)
    tau = tau_static(n, params)
    return 0.5 * (1.0 + math.exp(-0.5 * (t / tau) ** 2))


def coherence_time(n: int, params: NoiseParams) -> float:
    """Time at which the GHZ coherence has fallen to 1/e (error probability 1/2)."""
    _check_qubits(n)
    if params.sigma2 == 0:
        return math.inf

    def f(t):
        return error_probability(n, params, t) - 0.5

    hi = min(t2_markovian(n, params), tau_static(n, params))
    while f(hi) < 0:
        hi *= 2.0
    return brentq(f, 0.0, hi, xtol=1e-15, rtol=1e-13)


def _ou_coefficients(params, dt):
    a = math.exp(-params.gamma * dt)
    b = math.sqrt(params.sigma2 * -math.expm1(-2.0 * params.gamma * dt))
    return a, b


def ou_sample_trajectory(params: NoiseParams, t_max: float, dt: float, seed: int) -> Trajectory:
    """Sample one stationary OU realization on the grid ``0, dt, ..., <= t_max``.

    Uses the exact one-step transition, so there is no step-size bias in the
    sampled process itself.
    """
    if not dt > 0 or not t_max > 0:
        raise ValueError("dt and t_max must be > 0")
    if t_max < dt:
        raise ValueError("t_max must be >= dt")
    if params.kind != "ou":
        raise ValueError("trajectories are only defined for kind='ou'")
    n_steps = int(math.floor(t_max / dt + 1e-9))
    rng = np.random.default_rng(seed)
    a, b = _ou_coefficients(params, dt)
    xi = rng.standard_normal(n_steps + 1)
    x = np.empty(n_steps + 1)
    x[0] = math.sqrt(params.sigma2) * xi[0]
    for i in range(n_steps):
        x[i + 1] = a * x[i] + b * xi[i + 1]
    return Trajectory(dt=dt, samples=x, seed=seed)


def _mc_phases(params, t, m, dt, rng):
    if params.kind == "static":
        return math.sqrt(params.sigma2) * rng.standard_normal(m) * t
    if params.kind == "white":
        return math.sqrt(integrated_phase_variance(params, t)) * rng.standard_normal(m)
    steps = max(1, math.ceil(t / dt - 1e-12))
    h = t / steps
    a, b = _ou_coefficients(params, h)
    x = math.sqrt(params.sigma2) * rng.standard_normal(m)
    phase = np.zeros(m)
    for _ in range(steps):
        x_new = a * x + b * rng.standard_normal(m)
        phase += 0.5 * h * (x + x_new)
        x = x_new
    return phase


def mc_fidelity(
    n: int,
    params: NoiseParams,
    t: float,
    n_traj: int,
    dt: float | None = None,
    seed: int = 0,
) -> Estimate:
    """Monte Carlo average of the GHZ fidelity over sampled noise realizations.

    Each trajectory contributes ``(1 + cos(n*phi))/2`` with ``phi`` the
    trapezoid-integrated phase.  Trajectories are generated in fixed-size
    chunks, each with its own substream of ``seed``, and merged by pooled mean.
    """
    _check_qubits(n)
    _check_time(t)
    if n_traj < 1:
        raise ValueError("n_traj must be >= 1")
    if dt is None:
        dt = 1.0 / (100.0 * params.gamma) if params.gamma > 0 else max(t, 1.0)
    if params.kind == "ou" and dt > 1.0 / (10.0 * params.gamma):
        warnings.warn(
            f"dt={dt:g} exceeds 1/(10 gamma); phase integral may be biased",
            DiscretizationWarning,
            stacklevel=2,
        )
    if params.sigma2 == 0 or t == 0:
        return Estimate(1.0, 0.0, n_traj)

    parts = []
    for i, start in enumerate(range(0, n_traj, MC_CHUNK)):
        m = min(MC_CHUNK, n_traj - start)
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(i,)))
        f = 0.5 * (1.0 + np.cos(n * _mc_phases(params, t, m, dt, rng)))
        se = float(np.std(f, ddof=1) / math.sqrt(m)) if m > 1 else 0.0
        parts.append(Estimate(float(np.mean(f)), se, m))
    return merge_estimates(parts)
