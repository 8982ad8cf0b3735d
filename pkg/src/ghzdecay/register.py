"""Compact model of GHZ-class states: one coherent pair of basis branches.

Bitstrings use ``'1'`` for the ground state |1> (S, bright under fluorescence)
and ``'0'`` for the metastable state |0> (D).  The first character is the
most significant bit of the basis index.

Population that leaves the two branches is kept in an unstructured,
incoherent leak bucket.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, replace

from .errors import UnsupportedConfiguration
from .noise import NoiseParams, integrated_phase_variance

TOL = 1e-12


def count_ones(bits: str) -> int:
    return bits.count("1")


def _check_bits(bits, n):
    if len(bits) != n or set(bits) - {"0", "1"}:
        raise ValueError(f"expected a length-{n} bitstring, got {bits!r}")


@dataclass(frozen=True)
class BranchPairState:
    n: int
    branch_a: str
    branch_b: str
    p_a: float
    p_b: float
    c: complex
    p_leak: float = 0.0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        _check_bits(self.branch_a, self.n)
        _check_bits(self.branch_b, self.n)
        if self.branch_a == self.branch_b:
            raise ValueError("branches must differ")
        if min(self.p_a, self.p_b) < -TOL or self.p_leak < -TOL:
            raise ValueError("populations must be non-negative")
        if abs(self.p_a + self.p_b + self.p_leak - 1.0) > TOL:
            raise ValueError(
                f"populations must sum to 1, got {self.p_a + self.p_b + self.p_leak!r}"
            )
        if abs(self.c) > math.sqrt(max(self.p_a, 0) * max(self.p_b, 0)) + TOL:
            raise ValueError("|c| exceeds sqrt(p_a p_b)")

    @property
    def dephasing_weight(self) -> int:
        """Difference in excitation number between the branches, k(b) - k(a)."""
        return count_ones(self.branch_b) - count_ones(self.branch_a)

    @property
    def populations(self) -> float:
        return self.p_a + self.p_b

    @property
    def coherence(self) -> float:
        return 2.0 * abs(self.c)

    @property
    def is_complementary(self) -> bool:
        return all(x != y for x, y in zip(self.branch_a, self.branch_b))

    @property
    def is_ghz_pair(self) -> bool:
        """Branches are 0...0 and 1...1 (in either order)."""
        return {self.branch_a, self.branch_b} == {"0" * self.n, "1" * self.n}


def _with_populations(state, p_a, p_b, c):
    p_leak = 1.0 - p_a - p_b
    if -TOL < p_leak < 0:
        p_leak = 0.0
    return replace(state, p_a=p_a, p_b=p_b, c=c, p_leak=p_leak)


def ghz_ideal(n: int) -> BranchPairState:
    if int(n) != n or n < 1:
        raise ValueError(f"n must be a positive integer, got {n}")
    return BranchPairState(n, "0" * n, "1" * n, 0.5, 0.5, 0.5 + 0j)


def dfs_state(n: int) -> BranchPairState:
    """(|0..01..1> + |1..10..0>)/sqrt(2): equal excitation number in both branches."""
    if int(n) != n or n < 2 or n % 2:
        raise ValueError(f"n must be a positive even integer, got {n}")
    h = n // 2
    return BranchPairState(n, "0" * h + "1" * h, "1" * h + "0" * h, 0.5, 0.5, 0.5 + 0j)


def degraded_ghz(n: int, populations: float, coherence: float) -> BranchPairState:
    """GHZ pair with total branch population P and coherence C = 2|c|.

    The missing population ``1 - P`` goes into the leak bucket.
    """
    if not 0 <= populations <= 1:
        raise ValueError("populations must lie in [0, 1]")
    if not 0 <= coherence <= populations:
        raise ValueError("coherence must lie in [0, populations]")
    base = ghz_ideal(n)
    return replace(
        base,
        p_a=populations / 2,
        p_b=populations / 2,
        c=complex(coherence / 2),
        p_leak=1.0 - populations,
    )


def to_ghz_frame(state: BranchPairState) -> BranchPairState:
    """Relabel a complementary pair into the 0...0 / 1...1 frame by local bit flips.

    Flipping every qubit that is 1 in ``branch_a`` is a product of local
    X operations; the tracked matrix elements keep their values.
    """
    if not state.is_complementary:
        raise UnsupportedConfiguration("branches are not complementary")
    return replace(state, branch_a="0" * state.n, branch_b="1" * state.n)


def apply_collective_phase(state: BranchPairState, phi: float) -> BranchPairState:
    """Apply exp(-i phi/2 sum_k Z_k); the tracked coherence picks up exp(-i dk phi)."""
    return replace(state, c=state.c * cmath.exp(-1j * state.dephasing_weight * phi))


def apply_phase_variance(state: BranchPairState, variance: float) -> BranchPairState:
    """Average over a Gaussian collective phase of the given variance (rad^2)."""
    if variance < 0:
        raise ValueError("variance must be >= 0")
    dk = state.dephasing_weight
    return replace(state, c=state.c * math.exp(-0.5 * dk * dk * variance))


def apply_gaussian_dephasing(state: BranchPairState, params: NoiseParams, t: float) -> BranchPairState:
    """Ensemble-averaged collective dephasing over ``[0, t]``.

    The channel must be applied once, from preparation to readout: for
    correlated (OU) noise two consecutive segments are not independent, so
    splitting the interval changes the result.
    """
    return apply_phase_variance(state, integrated_phase_variance(params, t))


def _covers(lo: str, hi: str) -> bool:
    """True if ``hi`` is reachable from ``lo`` by 0 -> 1 decays only."""
    return all(not (x == "1" and y == "0") for x, y in zip(lo, hi))


def apply_amplitude_damping(state: BranchPairState, t: float, t1: float) -> BranchPairState:
    """Independent decay |0> -> |1> of every qubit with lifetime ``t1``.

    Population of a branch survives with probability ``s**d`` (``d`` = number
    of 0-bits, ``s = exp(-t/t1)``); if one branch can decay into the other the
    corresponding share is transferred, everything else goes to the leak.
    """
    if not t >= 0:
        raise ValueError("t must be >= 0")
    if not t1 > 0:
        raise ValueError("t1 must be > 0")
    if t == 0 or math.isinf(t1):
        return state
    a, b = state.branch_a, state.branch_b
    a_to_b, b_to_a = _covers(a, b), _covers(b, a)
    if state.p_leak > TOL and (a_to_b or b_to_a):
        # leaked population could decay back into a branch; the bucket has no structure
        raise UnsupportedConfiguration(
            "amplitude damping of a state with leak whose branches are decay-connected"
        )
    s = math.exp(-t / t1)
    d_a, d_b = a.count("0"), b.count("0")
    p_a = state.p_a * s**d_a
    p_b = state.p_b * s**d_b
    if a_to_b:
        p_b += state.p_a * (1.0 - s) ** (d_a - d_b) * s**d_b
    if b_to_a:
        p_a += state.p_b * (1.0 - s) ** (d_b - d_a) * s**d_a
    c = state.c * s ** ((d_a + d_b) / 2.0)
    return _with_populations(state, p_a, p_b, c)
