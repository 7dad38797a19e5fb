import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from robust_dude.core import ChannelSet, JointDistribution, WindowedDenoiser, bsc, hamming_loss, identity_channel, rho
from robust_dude.empirical import empirical_joint
from robust_dude.evaluation import SourceChannelPair, SourceModel, simulate_pair
from robust_dude.feasibility import (
    InvalidRange,
    a_l_proxy,
    b_l_modulus,
    bsc_cover,
    default_slack,
    induced_input,
    is_feasible,
    phi_k,
    trim,
)
from robust_dude.minimax import j_k_worst_case

from conftest import random_channel, random_denoiser, random_joint

BERN_25 = JointDistribution.iid([0.75, 0.25], 1)


def test_induced_input_identity(rng):
    q = random_joint(rng, 3, 3)
    assert np.allclose(induced_input(identity_channel(3), q), q.tensor)


@pytest.mark.parametrize("delta,alpha", [(0.1, 0.1875), (0.2, 0.05 / 0.6)])
def test_induced_input_bsc(delta, alpha):
    p = induced_input(bsc(delta), BERN_25)
    assert p[1] == pytest.approx(alpha, abs=1e-12)


def test_induced_input_matches_kronecker(rng):
    ch = random_channel(rng, 2)
    q = random_joint(rng, 2, 4)
    kron = np.ones((1, 1))
    for _ in range(4):
        kron = np.kron(kron, ch.inverse_transpose)
    assert np.allclose(induced_input(ch, q).ravel(), kron @ q.tensor.ravel(), atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), m=st.integers(2, 3), order=st.integers(1, 5))
def test_induced_input_mass_preserved(seed, m, order):
    rng = np.random.default_rng(seed)
    out = induced_input(random_channel(rng, m), random_joint(rng, m, order))
    assert out.sum() == pytest.approx(1, abs=1e-9)


def test_is_feasible_examples():
    v = is_feasible(bsc(0.3), BERN_25, 1e-6)
    assert v.min_entry == pytest.approx(-0.125) and not v.feasible
    v = is_feasible(bsc(0.2), BERN_25, 1e-6)
    assert v.min_entry == pytest.approx(0.05 / 0.6) and v.feasible
    v = is_feasible(identity_channel(2), BERN_25, 0.0)
    assert v.feasible and v.min_entry == 0.25


def test_trim_examples():
    delta = ChannelSet([bsc(0.1), bsc(0.2), bsc(0.3)])
    t = trim(delta, BERN_25, 1e-9)
    assert t.kept == (0, 1) and not t.fallback
    single = trim(ChannelSet([bsc(0.1)]), BERN_25, 1e-9)
    assert single.kept == (0,) and not single.fallback
    fb = trim(ChannelSet([bsc(0.4), bsc(0.45)]), BERN_25, 1e-9)
    assert fb.fallback and fb.kept == (0,)
    assert fb.verdicts[0].min_entry == pytest.approx(-0.75)
    assert fb.to_dict()["channels"][0]["feasible"] is False


def test_trim_monotone_in_order():
    delta = bsc_cover(0.0, 0.45, 0.05)
    for p in (0.1, 0.2, 0.35):
        px = [1 - p, p]
        survivors = []
        for l in range(3):
            q = JointDistribution.through_channel(JointDistribution.iid(px, 2 * l + 1), bsc(0.1))
            survivors.append(set(trim(delta, q, 1e-12).kept))
        assert survivors[2] <= survivors[1] <= survivors[0]
        assert 2 in survivors[2]  # BSC(0.1) is the true channel


def test_true_channel_survives_sampled(rng):
    pair = SourceChannelPair(SourceModel.iid([0.7, 0.3]), bsc(0.1))
    delta = ChannelSet([bsc(0.05), bsc(0.1), bsc(0.3)])
    survived = 0
    for s in range(100):
        _, z = simulate_pair(pair, 10**5, np.random.default_rng(s))
        if 1 in trim(delta, empirical_joint(z, 1, 2), 0.01).kept:
            survived += 1
    assert survived >= 95


def test_default_slack():
    assert default_slack(10**5, 0, 2) == pytest.approx(np.sqrt(np.log(2) / 10**5))
    assert default_slack(3, 1, 2) == 1e-9 or default_slack(3, 1, 2) > 0


def test_phi_k_examples():
    delta = ChannelSet([bsc(0.1)])
    loss = hamming_loss(2)
    assert phi_k(0, delta, loss, 0.0) == 0
    assert phi_k(0, delta, loss, 0.01) == pytest.approx(0.025)
    assert phi_k(1, delta, loss, 0.02) == pytest.approx(2 * phi_k(1, delta, loss, 0.01))


def test_phi_k_soundness(rng):
    for _ in range(200):
        m, k = int(rng.choice([2, 3])), int(rng.choice([0, 1]))
        delta = ChannelSet([random_channel(rng, m) for _ in range(3)])
        sub = ChannelSet(delta.channels[: int(rng.integers(1, 3))])
        q, f, loss = random_joint(rng, m, 2 * k + 1), random_denoiser(rng, m, k), hamming_loss(m)
        gap = abs(j_k_worst_case(q, delta, f, loss)[0] - j_k_worst_case(q, sub, f, loss)[0])
        assert gap <= phi_k(k, delta, loss, rho(delta, sub)) + 1e-9


def test_b_l_modulus():
    delta = ChannelSet([bsc(0.1)])
    assert b_l_modulus(1, delta)(0.0) == 0
    assert b_l_modulus(1, delta)(1.0) == pytest.approx(1.5625)
    assert b_l_modulus(3, ChannelSet([identity_channel(2)]))(0.3) == pytest.approx(0.3)


def test_bsc_cover():
    assert len(bsc_cover(0.1, 0.1, 0.01)) == 1
    grid = bsc_cover(0.0, 0.4, 0.1)
    assert [round(c.matrix[0, 1], 12) for c in grid] == [0.0, 0.1, 0.2, 0.3, 0.4]
    assert len(bsc_cover(0.1, 0.2, 0.5)) == 2
    with pytest.raises(InvalidRange):
        bsc_cover(0.3, 0.2, 0.1)
    with pytest.raises(InvalidRange):
        bsc_cover(0.0, 0.5, 0.1)


@settings(max_examples=30, deadline=None)
@given(lo=st.floats(0, 0.2), width=st.floats(0, 0.25), eta=st.floats(0.005, 0.2), probe=st.floats(0, 1))
def test_bsc_cover_is_eta_cover(lo, width, eta, probe):
    hi = min(lo + width, 0.49)
    cover = bsc_cover(lo, hi, eta)
    d = lo + probe * (hi - lo)
    assert min(abs(c.matrix[0, 1] - d) for c in cover) <= eta + 1e-12


def test_a_l_proxy():
    delta = ChannelSet([bsc(0.1), bsc(0.2), bsc(0.3)])
    q1 = JointDistribution.iid([0.75, 0.25], 1)
    q3 = JointDistribution.iid([0.75, 0.25], 3)
    assert a_l_proxy(delta, q1, q3) == 0


def test_bsc_cover_degenerate_width():
    assert len(bsc_cover(0.0, 5e-269, 0.125)) == 1
    assert len(bsc_cover(0.1, 0.1 + 1e-13, 1e-14)) == 1
