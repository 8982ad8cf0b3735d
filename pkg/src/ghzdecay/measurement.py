"""Simulated readout: per-qubit camera detection and global PMT photon counting.

Parity is ``P_even - P_odd`` with even/odd referring to the number of qubits
found in |1>, measured after the collective pi/2 rotation of phase ``phi``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.stats import poisson

from .errors import GhzDecayError, UnsupportedConfiguration
from .estimate import Estimate
from .register import BranchPairState
from .statevector import basis_strings, excitations

CAMERA_HEADER = ("setting_phi_rad", "shot_index", "bitstring")
PMT_HEADER = ("setting_id", "shot_index", "counts")

DEFAULT_LAMBDA_ION = 20.0
DEFAULT_LAMBDA_BG = 1.0


def as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


@dataclass(frozen=True)
class ParitySetting:
    phi: float
    shots: tuple[str, ...]


@dataclass(frozen=True)
class ParityDataset:
    n: int
    shots_per_setting: int
    entries: tuple[ParitySetting, ...] = field(repr=False)

    def __post_init__(self):
        if self.shots_per_setting <= 0:
            raise ValueError("shots_per_setting must be > 0")
        for e in self.entries:
            if any(len(s) != self.n for s in e.shots):
                raise ValueError(f"bitstring length differs from n={self.n}")

    @property
    def phis(self) -> np.ndarray:
        return np.array([e.phi for e in self.entries])


@dataclass(frozen=True)
class PmtShot:
    counts: int

    def __post_init__(self):
        if self.counts < 0:
            raise ValueError("counts must be >= 0")


def _ghz_coherence(state: BranchPairState) -> complex:
    """The element rho_{0..0, 1..1} of a GHZ-pair state."""
    if not state.is_ghz_pair:
        raise UnsupportedConfiguration(
            f"parity readout needs branches 0..0 / 1..1, got {state.branch_a}/{state.branch_b}"
        )
    return state.c if state.branch_a == "0" * state.n else state.c.conjugate()


def parity_expectation(state: BranchPairState, phi: float) -> float:
    """2 Re[c (-i)^n e^{i n phi}]; incoherent (leaked) population gives zero parity."""
    n = state.n
    c = _ghz_coherence(state)
    return 2.0 * (c * (-1j) ** n * np.exp(1j * n * phi)).real


def camera_distribution(state: BranchPairState, phi: float) -> np.ndarray:
    """Outcome probabilities over all 2^n bitstrings after the collective rotation.

    Any diagonal population is spread uniformly by the pi/2 pulses, so the
    leak bucket adds a flat ``p_leak / 2^n``.
    """
    n = state.n
    c = _ghz_coherence(state)
    k = excitations(n)
    osc = 2.0 * (c * 1j**n * np.exp(1j * n * phi)).real
    p = ((state.p_a + state.p_b + state.p_leak) + osc * (-1.0) ** (n - k)) / 2**n
    if p.min() < -1e-12:
        raise GhzDecayError(f"negative outcome probability {p.min():.3e}")
    p = np.clip(p, 0.0, None)
    return p / p.sum()


def _sample_indices(p, n_shots, rng):
    return rng.choice(len(p), size=n_shots, p=p)


def sample_camera_shots(state: BranchPairState, phi: float, n_shots: int, seed=None) -> list[str]:
    rng = as_rng(seed)
    strings = basis_strings(state.n)
    return [strings[i] for i in _sample_indices(camera_distribution(state, phi), n_shots, rng)]


def population_distribution(state: BranchPairState) -> np.ndarray:
    """Unrotated outcome probabilities; leak spread uniformly over non-branch strings."""
    n = state.n
    p = np.zeros(2**n)
    a, b = int(state.branch_a, 2), int(state.branch_b, 2)
    others = 2**n - 2
    if state.p_leak > 1e-15:
        if others == 0:
            raise UnsupportedConfiguration("no non-branch strings to hold leaked population")
        p[:] = state.p_leak / others
    p[a], p[b] = state.p_a, state.p_b
    return p / p.sum()


def measure_populations_direct(state: BranchPairState, n_shots: int, seed=None) -> list[str]:
    rng = as_rng(seed)
    strings = basis_strings(state.n)
    return [strings[i] for i in _sample_indices(population_distribution(state), n_shots, rng)]


def bright_count_distribution(probs: np.ndarray, n: int) -> np.ndarray:
    """Collapse a distribution over bitstrings to one over the number of bright ions."""
    return np.bincount(excitations(n), weights=probs, minlength=n + 1)


def sample_pmt_counts(
    bright_probabilities: Sequence[float],
    lambda_ion: float = DEFAULT_LAMBDA_ION,
    lambda_bg: float = DEFAULT_LAMBDA_BG,
    n_shots: int = 100,
    seed=None,
) -> list[PmtShot]:
    """Draw a bright-ion number per shot, then Poisson photon counts."""
    q = np.asarray(bright_probabilities, dtype=float)
    if abs(q.sum() - 1.0) > 1e-9 or q.min() < 0:
        raise ValueError("bright_probabilities must be a distribution")
    if not lambda_ion > 0 or not lambda_bg >= 0:
        raise ValueError("lambda_ion must be > 0 and lambda_bg >= 0")
    rng = as_rng(seed)
    k = rng.choice(len(q), size=n_shots, p=q / q.sum())
    return [PmtShot(int(x)) for x in rng.poisson(k * lambda_ion + lambda_bg)]


def classify_counts(counts, n: int, lambda_ion: float, lambda_bg: float) -> np.ndarray:
    """Most likely bright-ion number for each count (flat prior)."""
    c = np.asarray(counts)[:, None]
    loglik = poisson.logpmf(c, np.arange(n + 1)[None, :] * lambda_ion + lambda_bg)
    return np.argmax(loglik, axis=1)


def parity_from_shots(shots: Sequence[str]) -> Estimate:
    if len(shots) == 0:
        raise ValueError("no shots")
    signs = np.array([1 - 2 * (s.count("1") % 2) for s in shots], dtype=float)
    return parity_from_signs(signs)


def parity_from_signs(signs: np.ndarray) -> Estimate:
    m = float(np.mean(signs))
    return Estimate(m, math.sqrt(max(0.0, 1.0 - m * m) / len(signs)), len(signs))


def phi_grid(n: int, n_settings: int | None = None) -> np.ndarray:
    """Equally spaced analysis phases covering one parity period 2 pi / n, endpoints included."""
    if n_settings is None:
        n_settings = 3 * n + 1
    return np.linspace(0.0, 2 * np.pi / n, n_settings)


def simulate_parity_dataset(
    state: BranchPairState, phis: Sequence[float], shots_per_setting: int, seed=None
) -> ParityDataset:
    rng = as_rng(seed)
    entries = tuple(
        ParitySetting(float(phi), tuple(sample_camera_shots(state, phi, shots_per_setting, rng)))
        for phi in phis
    )
    return ParityDataset(state.n, shots_per_setting, entries)


def simulate_pmt_parity(
    state: BranchPairState,
    phis: Sequence[float],
    shots_per_setting: int,
    lambda_ion: float,
    lambda_bg: float,
    seed=None,
) -> list[list[PmtShot]]:
    """PMT records of the rotated state, one list of shots per phase setting."""
    rng = as_rng(seed)
    out = []
    for phi in phis:
        q = bright_count_distribution(camera_distribution(state, phi), state.n)
        out.append(sample_pmt_counts(q, lambda_ion, lambda_bg, shots_per_setting, rng))
    return out


def pmt_parity_dataset(
    records: list[list[PmtShot]], phis: Sequence[float], n: int, lambda_ion: float, lambda_bg: float
) -> ParityDataset:
    """Turn PMT counts into a parity dataset by assigning each shot its likeliest bright number.

    Only the number of bright ions is known, so each shot becomes a
    representative bitstring with that many 1-bits; parity is all that is
    used downstream.
    """
    entries = []
    for phi, shots in zip(phis, records):
        k = classify_counts([s.counts for s in shots], n, lambda_ion, lambda_bg)
        entries.append(ParitySetting(float(phi), tuple("1" * int(x) + "0" * (n - int(x)) for x in k)))
    return ParityDataset(n, len(records[0]), tuple(entries))


def write_camera_csv(dataset: ParityDataset, path) -> None:
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CAMERA_HEADER)
        for e in dataset.entries:
            for i, s in enumerate(e.shots):
                w.writerow((repr(e.phi), i, s))


def read_camera_csv(path, n: int | None = None) -> ParityDataset:
    rows: dict[float, list[str]] = {}
    with open(Path(path), newline="") as fh:
        r = csv.reader(fh)
        if tuple(next(r)) != CAMERA_HEADER:
            raise ValueError("unexpected camera CSV header")
        for phi, _, bits in r:
            rows.setdefault(float(phi), []).append(bits)
    if not rows:
        raise ValueError("empty dataset")
    n = n or len(next(iter(rows.values()))[0])
    entries = tuple(ParitySetting(phi, tuple(s)) for phi, s in rows.items())
    return ParityDataset(n, max(len(e.shots) for e in entries), entries)


def write_pmt_csv(records: list[list[PmtShot]], path) -> None:
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(PMT_HEADER)
        for sid, shots in enumerate(records):
            for i, s in enumerate(shots):
                w.writerow((sid, i, s.counts))


def read_pmt_csv(path) -> list[list[PmtShot]]:
    out: dict[int, list[PmtShot]] = {}
    with open(Path(path), newline="") as fh:
        r = csv.reader(fh)
        if tuple(next(r)) != PMT_HEADER:
            raise ValueError("unexpected PMT CSV header")
        for sid, _, counts in r:
            out.setdefault(int(sid), []).append(PmtShot(int(counts)))
    return [out[k] for k in sorted(out)]
