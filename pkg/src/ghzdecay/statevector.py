"""Brute-force state-vector and density-matrix simulation for up to 14 qubits.

Used to prepare GHZ states with the Molmer-Sorensen interaction and as an
independent oracle for the compact branch-pair model.  Basis index follows the
bitstring read as a big-endian binary number (``'11'`` -> 3).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce

import numpy as np
from scipy.linalg import expm
from scipy.optimize import minimize_scalar

MAX_QUBITS = 14
DENSE_MAX_QUBITS = 6

_I2 = np.eye(2, dtype=complex)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_Z = np.diag([1.0, -1.0]).astype(complex)
_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)


@dataclass(frozen=True)
class StateVector:
    n: int
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        if not 1 <= self.n <= MAX_QUBITS:
            raise ValueError(f"n must lie in [1, {MAX_QUBITS}]")
        if self.amplitudes.shape != (2**self.n,):
            raise ValueError("amplitude vector has wrong length")
        if abs(np.vdot(self.amplitudes, self.amplitudes).real - 1.0) > 1e-10:
            raise ValueError("state is not normalized")


def excitations(n: int) -> np.ndarray:
    """Number of 1-bits of every basis index."""
    idx = np.arange(2**n)
    return ((idx[:, None] >> np.arange(n)) & 1).sum(axis=1)


def basis_strings(n: int) -> list[str]:
    return [format(i, f"0{n}b") for i in range(2**n)]


def sigma_phi(phi: float) -> np.ndarray:
    return np.cos(phi) * _X + np.sin(phi) * _Y


def sv_init(bits: str) -> StateVector:
    if not 1 <= len(bits) <= MAX_QUBITS or set(bits) - {"0", "1"}:
        raise ValueError(f"need a bitstring of length 1..{MAX_QUBITS}, got {bits!r}")
    amp = np.zeros(2 ** len(bits), dtype=complex)
    amp[int(bits, 2)] = 1.0
    return StateVector(len(bits), amp)


def _apply_local(amp: np.ndarray, n: int, u: np.ndarray) -> np.ndarray:
    """Apply the same 2x2 unitary to every qubit."""
    psi = amp.reshape((2,) * n)
    for q in range(n):
        psi = np.moveaxis(np.tensordot(u, psi, axes=([1], [q])), 0, q)
    return psi.reshape(-1)


def sv_apply_ms(state: StateVector, theta: float, phi_g: float = 0.0) -> StateVector:
    """exp(-i theta/2 sum_{j<k} s_j s_k) with s = X cos(phi_g) + Y sin(phi_g).

    The pair sum equals ((sum_j s_j)^2 - n)/2, which is diagonal after rotating
    every qubit's s axis onto Z, so the action is exact for any input state.
    """
    n = state.n
    v = np.diag([np.exp(-0.5j * phi_g), np.exp(0.5j * phi_g)]) @ _H  # s = V Z V^dag
    m = n - 2 * excitations(n)
    phase = np.exp(-0.25j * theta * (m * m - n))
    amp = _apply_local(state.amplitudes, n, v.conj().T)
    amp = _apply_local(phase * amp, n, v)
    return StateVector(n, amp)


def ms_unitary_dense(n: int, theta: float, phi_g: float = 0.0) -> np.ndarray:
    """Dense MS unitary by matrix exponentiation; oracle for small registers."""
    if n > DENSE_MAX_QUBITS:
        raise ValueError(f"dense MS unitary limited to n <= {DENSE_MAX_QUBITS}")
    s = sigma_phi(phi_g)
    ops = [reduce(np.kron, [s if k == j else _I2 for k in range(n)]) for j in range(n)]
    gen = sum(ops[j] @ ops[k] for j in range(n) for k in range(j + 1, n))
    if n == 1:
        gen = np.zeros((2, 2), dtype=complex)
    return expm(-0.5j * theta * gen)


def rotation_unitary(phi: float) -> np.ndarray:
    """Single-qubit exp(i pi/4 s_phi) = (I + i s_phi)/sqrt(2)."""
    return (_I2 + 1j * sigma_phi(phi)) / np.sqrt(2)


def sv_apply_collective_rotation(state: StateVector, phi: float) -> StateVector:
    return StateVector(state.n, _apply_local(state.amplitudes, state.n, rotation_unitary(phi)))


def sv_apply_collective_z_phase(state: StateVector, phi: float) -> StateVector:
    """Multiply |s> by exp(-i phi/2 (n - 2 k(s)))."""
    n = state.n
    m = n - 2 * excitations(n)
    return StateVector(n, state.amplitudes * np.exp(-0.5j * phi * m))


def sv_outcome_distribution(state: StateVector) -> np.ndarray:
    p = np.abs(state.amplitudes) ** 2
    return p / p.sum()


def parity_of_distribution(probs: np.ndarray, n: int) -> float:
    """sum_s (-1)^k(s) p(s)."""
    return float(np.dot(1 - 2 * (excitations(n) % 2), probs))


def _ghz_overlap(amp: np.ndarray) -> float:
    # max over the relative GHZ phase of |<GHZ(chi)|psi>|^2
    return 0.5 * (abs(amp[0]) + abs(amp[-1])) ** 2


def ghz_family_fidelity(state: StateVector) -> float:
    """Best GHZ fidelity allowing collective z rotations and one collective pi/2 pulse.

    The relative GHZ phase is maximized in closed form; the axis of the optional
    pi/2 pulse is optimized numerically.
    """
    best = _ghz_overlap(state.amplitudes)

    def rotated(axis):
        return _ghz_overlap(sv_apply_collective_rotation(state, axis).amplitudes)

    grid = np.linspace(0.0, 2 * np.pi, 73)
    vals = [rotated(a) for a in grid]
    i = int(np.argmax(vals))
    step = grid[1] - grid[0]
    res = minimize_scalar(
        lambda a: -rotated(a),
        bounds=(grid[i] - step, grid[i] + step),
        method="bounded",
        options={"xatol": 1e-10},
    )
    return float(min(1.0, max(best, vals[i], -res.fun)))


# -- density-matrix oracle ------------------------------------------------


def density_matrix(state: StateVector) -> np.ndarray:
    return np.outer(state.amplitudes, state.amplitudes.conj())


def branch_pair_density(state) -> np.ndarray:
    """Full density matrix of a branch-pair state with no leak."""
    if state.p_leak > 1e-12:
        raise ValueError("leak population has no defined matrix elements")
    rho = np.zeros((2**state.n,) * 2, dtype=complex)
    a, b = int(state.branch_a, 2), int(state.branch_b, 2)
    rho[a, a], rho[b, b] = state.p_a, state.p_b
    rho[a, b], rho[b, a] = state.c, np.conj(state.c)
    return rho


def _dm_apply_local_kraus(rho, n, kraus, qubit):
    t = rho.reshape((2,) * (2 * n))
    out = np.zeros_like(t)
    for k in kraus:
        x = np.moveaxis(np.tensordot(k, t, axes=([1], [qubit])), 0, qubit)
        x = np.moveaxis(np.tensordot(k.conj(), x, axes=([1], [n + qubit])), 0, n + qubit)
        out += x
    return out.reshape(rho.shape)


def dm_apply_unitary_all(rho: np.ndarray, n: int, u: np.ndarray) -> np.ndarray:
    for q in range(n):
        rho = _dm_apply_local_kraus(rho, n, [u], q)
    return rho


def dm_apply_amplitude_damping(rho: np.ndarray, n: int, t: float, t1: float) -> np.ndarray:
    """Per-qubit Kraus decay |0> -> |1> with survival exp(-t/t1)."""
    s = np.exp(-t / t1)
    k0 = np.array([[np.sqrt(s), 0], [0, 1]], dtype=complex)
    k1 = np.array([[0, 0], [np.sqrt(1 - s), 0]], dtype=complex)
    for q in range(n):
        rho = _dm_apply_local_kraus(rho, n, [k0, k1], q)
    return rho


def dm_apply_collective_phase(rho: np.ndarray, n: int, phi: float) -> np.ndarray:
    d = np.exp(-0.5j * phi * (n - 2 * excitations(n)))
    return d[:, None] * rho * d.conj()[None, :]


def dm_average_gaussian_phase(rho: np.ndarray, n: int, variance: float, order: int = 120) -> np.ndarray:
    """Average of U(phi) rho U(phi)^dag over phi ~ N(0, variance), Gauss-Hermite quadrature."""
    x, w = np.polynomial.hermite_e.hermegauss(order)
    w = w / w.sum()
    out = np.zeros_like(rho)
    for xi, wi in zip(x, w):
        out += wi * dm_apply_collective_phase(rho, n, np.sqrt(variance) * xi)
    return out
