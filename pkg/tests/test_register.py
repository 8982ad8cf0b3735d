import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ghzdecay.errors import UnsupportedConfiguration
from ghzdecay.estimation import ghz_fidelity
from ghzdecay.estimate import Estimate
from ghzdecay.noise import NoiseParams, error_probability, integrated_phase_variance
from ghzdecay.register import (
    BranchPairState,
    apply_amplitude_damping,
    apply_collective_phase,
    apply_gaussian_dephasing,
    apply_phase_variance,
    degraded_ghz,
    dfs_state,
    ghz_ideal,
    to_ghz_frame,
)
from ghzdecay.statevector import dm_apply_amplitude_damping, dm_apply_collective_phase, dm_average_gaussian_phase

from oracles import compact, density, random_pair, tracked


def test_constructors():
    bell = ghz_ideal(2)
    assert bell.coherence == 1.0 and bell.populations == 1.0
    g8 = ghz_ideal(8)
    assert ghz_fidelity(Estimate(g8.populations), Estimate(g8.coherence)).value == 1.0
    assert g8.dephasing_weight == 8
    d = dfs_state(8)
    assert (d.branch_a, d.branch_b) == ("00001111", "11110000")
    assert d.dephasing_weight == 0
    d2 = dfs_state(2)
    assert {d2.branch_a, d2.branch_b} == {"01", "10"}
    for bad in (0, -1):
        with pytest.raises(ValueError):
            ghz_ideal(bad)
    for bad in (3, 0, 7):
        with pytest.raises(ValueError):
            dfs_state(bad)


def test_validation():
    with pytest.raises(ValueError):
        BranchPairState(2, "00", "00", 0.5, 0.5, 0)
    with pytest.raises(ValueError):
        BranchPairState(2, "00", "11", 0.6, 0.5, 0)
    with pytest.raises(ValueError):
        BranchPairState(2, "00", "11", 0.5, 0.5, 0.6)
    with pytest.raises(ValueError):
        BranchPairState(2, "00", "1x", 0.5, 0.5, 0)
    s = degraded_ghz(8, 0.847, 0.787)
    assert s.populations == pytest.approx(0.847) and s.coherence == pytest.approx(0.787)
    assert s.p_leak == pytest.approx(0.153)


def test_collective_phase_examples():
    out = apply_collective_phase(ghz_ideal(2), math.pi / 2)
    assert abs(out.c - (-0.5)) < 1e-15
    assert apply_collective_phase(ghz_ideal(3), 0.0) == ghz_ideal(3)
    d = dfs_state(8)
    for phi in (0.3, 2.0, -7.1):
        assert apply_collective_phase(d, phi) == d


def test_dephasing_examples():
    p = NoiseParams(1.0, 1.0)
    out = apply_gaussian_dephasing(ghz_ideal(1), p, 1.0)
    assert error_probability(1, p, 1.0) == pytest.approx(0.18393972058572117)
    assert abs(out.c) == pytest.approx(0.5 * math.exp(-0.36787944117144233), abs=1e-12)
    assert abs(out.c) == pytest.approx(0.34610, abs=5e-6)
    d = dfs_state(6)
    for t in (0.0, 1.0, 1e3):
        assert apply_gaussian_dephasing(d, p, t) == d
    with pytest.raises(ValueError):
        apply_phase_variance(d, -1.0)


def test_damping_examples():
    t1 = 1.17
    for n in (1, 3, 8):
        for t in (0.0, 0.1, 0.5):
            out = apply_amplitude_damping(ghz_ideal(n), t, t1)
            assert abs(out.c) == pytest.approx(0.5 * math.exp(-n * t / (2 * t1)), rel=1e-13)
    d = dfs_state(8)
    for t in (0.1, 0.2925, 1.0):
        assert abs(apply_amplitude_damping(d, t, t1).c) == pytest.approx(0.5 * math.exp(-4 * t / t1), rel=1e-13)
    # 1/e point of the coherence is t1/4
    assert abs(apply_amplitude_damping(d, t1 / 4, t1).c) == pytest.approx(0.5 / math.e, rel=1e-13)
    assert t1 / 4 == pytest.approx(0.2925)
    assert apply_amplitude_damping(d, 0.0, t1) == d
    assert apply_amplitude_damping(d, 5.0, math.inf) == d
    with pytest.raises(ValueError):
        apply_amplitude_damping(d, -1.0, t1)
    with pytest.raises(ValueError):
        apply_amplitude_damping(d, 1.0, 0.0)


def test_damping_with_leak_and_decay_path_is_rejected():
    leaky = degraded_ghz(3, 0.9, 0.8)
    with pytest.raises(UnsupportedConfiguration):
        apply_amplitude_damping(leaky, 0.1, 1.0)
    # DFS branches cannot decay into each other, so leak is harmless
    d = apply_amplitude_damping(dfs_state(4), 0.3, 1.0)
    assert d.p_leak > 0
    apply_amplitude_damping(d, 0.3, 1.0)


def test_frame_relabel():
    s = BranchPairState(3, "010", "101", 0.4, 0.6, 0.2 + 0.1j)
    g = to_ghz_frame(s)
    assert (g.branch_a, g.branch_b) == ("000", "111")
    assert g.c == s.c and g.p_a == s.p_a
    with pytest.raises(UnsupportedConfiguration):
        to_ghz_frame(BranchPairState(3, "010", "100", 0.4, 0.6, 0))


def test_oracle_equivalence_randomized():
    rng = np.random.default_rng(2024)
    for case in range(100):
        n = int(rng.integers(1, 7))
        state = random_pair(rng, n, complementary=bool(case % 2))
        rho = density(state)
        phi = rng.uniform(-4, 4)
        var = rng.exponential(0.5)
        t, t1 = rng.uniform(0, 2), rng.uniform(0.2, 3)

        s1 = apply_amplitude_damping(state, t, t1)
        r1 = dm_apply_amplitude_damping(rho, n, t, t1)
        assert np.max(np.abs(compact(s1) - tracked(r1, s1))) < 1e-9

        s2 = apply_collective_phase(s1, phi)
        r2 = dm_apply_collective_phase(r1, n, phi)
        assert np.max(np.abs(compact(s2) - tracked(r2, s2))) < 1e-9

        s3 = apply_phase_variance(s2, var)
        r3 = dm_average_gaussian_phase(r2, n, var)
        assert np.max(np.abs(compact(s3) - tracked(r3, s3))) < 1e-9
        # leak bucket holds exactly the oracle's weight outside the two branches
        off_branch = np.real(np.trace(r3)) - np.real(tracked(r3, s3)[0] + tracked(r3, s3)[1])
        assert s3.p_leak == pytest.approx(off_branch, abs=1e-9)


def test_static_dephasing_composes():
    p = NoiseParams(3.0, 1e-9, kind="static")
    g = ghz_ideal(4)
    t_a, t_b = 0.2, 0.5
    # frozen noise: phases add coherently, so variance is sigma2 (t_a + t_b)^2
    seq = apply_phase_variance(g, integrated_phase_variance(p, t_a + t_b))
    direct = apply_gaussian_dephasing(g, p, t_a + t_b)
    assert abs(seq.c - direct.c) < 1e-15
    # two white-noise segments are independent, so single-shot and split agree
    w = NoiseParams(3.0, 2.0, kind="white")
    split = apply_gaussian_dephasing(apply_gaussian_dephasing(g, w, t_a), w, t_b)
    assert abs(split.c - apply_gaussian_dephasing(g, w, t_a + t_b).c) < 1e-15


pair_strategy = st.builds(
    lambda seed, n, comp: random_pair(np.random.default_rng(seed), n, complementary=comp),
    st.integers(0, 2**32 - 1),
    st.integers(1, 10),
    st.booleans(),
)


@settings(max_examples=200, deadline=None)
@given(
    state=pair_strategy,
    phi=st.floats(-10, 10),
    var=st.floats(0, 50),
    t=st.floats(0, 10),
    t1=st.floats(0.01, 100),
)
def test_channels_preserve_trace_and_positivity(state, phi, var, t, t1):
    for out in (
        apply_collective_phase(state, phi),
        apply_phase_variance(state, var),
        apply_amplitude_damping(state, t, t1),
        apply_phase_variance(apply_amplitude_damping(state, t, t1), var),
    ):
        assert abs(out.p_a + out.p_b + out.p_leak - 1) <= 1e-12
        assert abs(out.c) <= math.sqrt(out.p_a * out.p_b) + 1e-12
        assert out.p_leak >= 0


@settings(max_examples=100, deadline=None)
@given(n=st.sampled_from([2, 4, 6, 8, 10, 12, 14]), sigma2=st.floats(0, 1e6), gamma=st.floats(1e-3, 1e3), t=st.floats(0, 1e3))
def test_dfs_is_dephasing_free(n, sigma2, gamma, t):
    d = dfs_state(n)
    assert apply_gaussian_dephasing(d, NoiseParams(sigma2, gamma), t).c == d.c
