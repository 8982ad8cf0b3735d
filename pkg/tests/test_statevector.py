import time

import numpy as np
import pytest
from scipy.linalg import expm

from ghzdecay.measurement import camera_distribution, parity_expectation
from ghzdecay.statevector import (
    MAX_QUBITS,
    StateVector,
    dm_apply_unitary_all,
    excitations,
    ghz_family_fidelity,
    ms_unitary_dense,
    parity_of_distribution,
    rotation_unitary,
    sigma_phi,
    sv_apply_collective_rotation,
    sv_apply_collective_z_phase,
    sv_apply_ms,
    sv_init,
    sv_outcome_distribution,
)

from oracles import density, random_pair

S2 = 1 / np.sqrt(2)


def ghz_vector(n, chi=0.0):
    amp = np.zeros(2**n, dtype=complex)
    amp[0], amp[-1] = S2, S2 * np.exp(1j * chi)
    return StateVector(n, amp)


def independent_ms(n, theta, phi_g=0.0):
    """exp(-i theta/4 ((sum_k sigma_phi^k)^2 - n)) built from explicit Kronecker products."""
    dim = 2**n
    s = np.zeros((dim, dim), dtype=complex)
    for k in range(n):
        ops = [np.eye(2)] * n
        ops[k] = np.cos(phi_g) * np.array([[0, 1], [1, 0]]) + np.sin(phi_g) * np.array([[0, -1j], [1j, 0]])
        term = ops[0]
        for o in ops[1:]:
            term = np.kron(term, o)
        s += term
    return expm(-1j * theta / 4 * (s @ s - n * np.eye(dim)))


def test_init():
    assert sv_init("11").amplitudes[3] == 1
    s = sv_init("00001111")
    assert len(s.amplitudes) == 256 and s.amplitudes[15] == 1
    assert np.vdot(s.amplitudes, s.amplitudes).real == 1.0
    for bad in ("", "1" * (MAX_QUBITS + 1), "12"):
        with pytest.raises(ValueError):
            sv_init(bad)


def test_ms_two_qubit_convention():
    out = sv_apply_ms(sv_init("11"), np.pi / 2).amplitudes
    expected = np.zeros(4, dtype=complex)
    expected[3], expected[0] = S2, -1j * S2
    # equal up to a global phase; the -i on |00> relative to |11> is the pinned convention
    overlap = np.vdot(expected, out)
    assert abs(abs(overlap) - 1) < 1e-12
    assert abs(out[0] / out[3] - (-1j)) < 1e-12


def test_ms_identity_and_dense_agreement():
    rng = np.random.default_rng(5)
    for n in range(1, 7):
        amp = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
        st = StateVector(n, amp / np.linalg.norm(amp))
        assert np.allclose(sv_apply_ms(st, 0.0).amplitudes, st.amplitudes, atol=1e-14)
        for theta, phi_g in ((np.pi / 2, 0.0), (0.37, 1.1), (2.9, -0.4)):
            u = independent_ms(n, theta, phi_g)
            ref = u @ st.amplitudes
            got = sv_apply_ms(st, theta, phi_g).amplitudes
            assert np.max(np.abs(got - ref)) < 1e-10
            assert np.max(np.abs(ms_unitary_dense(n, theta, phi_g) - u)) < 1e-10
            assert abs(np.linalg.norm(got) - 1) < 1e-10


@pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
def test_ms_prepares_ghz(n):
    out = sv_apply_ms(sv_init("1" * n), np.pi / 2)
    assert ghz_family_fidelity(out) >= 1 - 1e-9
    dense = ms_unitary_dense(n, np.pi / 2) @ sv_init("1" * n).amplitudes
    assert ghz_family_fidelity(StateVector(n, dense)) >= 1 - 1e-9


def test_ms_fourteen_qubits():
    start = time.perf_counter()
    out = sv_apply_ms(sv_init("1" * 14), np.pi / 2)
    p = sv_outcome_distribution(out)
    assert abs(p[0] - 0.5) < 1e-9 and abs(p[-1] - 0.5) < 1e-9
    assert time.perf_counter() - start < 30


def test_rotation_examples():
    out = sv_apply_collective_rotation(sv_init("0"), 0.0).amplitudes
    assert np.allclose(out, [S2, 1j * S2], atol=1e-15)
    for phi in (0.0, 0.7, 2.5):
        r = rotation_unitary(phi)
        assert np.allclose(r.conj().T @ r, np.eye(2), atol=1e-15)
        assert abs(r[1, 0] - 1j * np.exp(1j * phi) / np.sqrt(2)) < 1e-15
        assert np.allclose(sigma_phi(phi) @ sigma_phi(phi), np.eye(2))


def test_z_phase_examples():
    for phi in (0.0, 0.4, -2.2):
        out = sv_apply_collective_z_phase(ghz_vector(2), phi).amplitudes
        assert abs(out[3] / out[0] - np.exp(2j * phi)) < 1e-14
    amp = sv_init("00001111").amplitudes + sv_init("11110000").amplitudes
    d = StateVector(8, amp / np.sqrt(2))
    out = sv_apply_collective_z_phase(d, 1.3).amplitudes
    # global phase only
    assert abs(abs(np.vdot(d.amplitudes, out)) - 1) < 1e-14
    assert np.array_equal(sv_apply_collective_z_phase(d, 0.0).amplitudes, d.amplitudes)


def test_distribution_examples():
    p = sv_outcome_distribution(sv_init("101"))
    assert p[5] == 1 and p.sum() == 1
    p = sv_outcome_distribution(ghz_vector(4))
    assert p[0] == pytest.approx(0.5) and p[-1] == pytest.approx(0.5)
    assert parity_of_distribution(p, 4) == pytest.approx(1.0)
    assert np.array_equal(excitations(3), [0, 1, 1, 2, 1, 2, 2, 3])


def test_rotated_bell_example():
    out = sv_apply_collective_rotation(ghz_vector(2), 0.0)
    # i(|01> + |10>)/sqrt(2): odd parity, so the parity is -1
    assert np.allclose(out.amplitudes, [0, 1j * S2, 1j * S2, 0], atol=1e-15)
    assert parity_of_distribution(sv_outcome_distribution(out), 2) == pytest.approx(-1.0)


def test_family_fidelity_examples():
    for n in (1, 2, 5, 9):
        for chi in (0.0, 1.0):
            assert ghz_family_fidelity(ghz_vector(n, chi)) == pytest.approx(1.0, abs=1e-12)
    # one branch alone is the pure-state stand-in for a fully dephased GHZ mixture
    assert ghz_family_fidelity(sv_init("0000")) == pytest.approx(0.5, abs=1e-12)


def test_parity_closed_form_matches_rotated_oracle():
    rng = np.random.default_rng(77)
    for _ in range(100):
        n = int(rng.integers(1, 7))
        st = random_pair(rng, n, complementary=True)
        st = st.__class__(n, "0" * n, "1" * n, st.p_a, st.p_b, st.c)
        rho = density(st)
        phi = rng.uniform(0, 2 * np.pi)
        rotated = dm_apply_unitary_all(rho, n, rotation_unitary(phi))
        probs = np.real(np.diag(rotated))
        assert abs(parity_of_distribution(probs, n) - parity_expectation(st, phi)) < 1e-9
        assert np.max(np.abs(probs - camera_distribution(st, phi))) < 1e-9
