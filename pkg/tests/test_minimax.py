import numpy as np
import pytest

from robust_dude.core import (
    ChannelSet,
    JointDistribution,
    LossMatrix,
    WindowedDenoiser,
    bsc,
    hamming_loss,
    identity_channel,
    say_constant,
    say_what_you_see,
)
from robust_dude.minimax import (
    cost_tensor,
    dude_rule,
    f_k_context_loss,
    g_k_expected_loss,
    j_k_worst_case,
    solve_minimax,
)
from robust_dude.oracle import binary_context_loss, grid_minimax_binary_k0

from conftest import random_channel, random_denoiser, random_joint

HAM2 = hamming_loss(2)
BERN_25 = JointDistribution.iid([0.75, 0.25], 1)
EX1 = ChannelSet([bsc(0.1), bsc(0.2)])


def test_context_loss_noiseless_is_zero():
    q = np.array([0.0, 1.0, 0.0])
    assert f_k_context_loss(q, identity_channel(3), np.eye(3), hamming_loss(3)) == 0


def test_context_loss_matches_binary_closed_form(rng):
    for _ in range(1000):
        delta = rng.uniform(0, 0.45)
        alpha = rng.uniform(delta, 1 - delta)  # feasible region: no clamping
        d0, d1 = rng.uniform(size=2)
        slice_ = np.array([[1 - d0, d0], [1 - d1, d1]])
        got = f_k_context_loss([1 - alpha, alpha], bsc(delta), slice_, HAM2)
        assert got == pytest.approx(binary_context_loss(alpha, delta, d0, d1), abs=1e-12)


def test_say_what_you_see_loss_is_crossover():
    assert f_k_context_loss([0.8125, 0.1875], bsc(0.1), np.eye(2), HAM2) == pytest.approx(0.1, abs=1e-12)


def test_g_k0_reduces_to_context_loss(rng):
    q = random_joint(rng, 3, 1)
    ch = random_channel(rng, 3)
    f = random_denoiser(rng, 3, 0)
    loss = hamming_loss(3)
    assert g_k_expected_loss(q, ch, f, loss) == pytest.approx(f_k_context_loss(q.tensor, ch, f.table, loss))


def test_g_linear_in_f(rng):
    for _ in range(20):
        m, k = int(rng.choice([2, 3])), int(rng.choice([0, 1]))
        q, ch, loss = random_joint(rng, m, 2 * k + 1), random_channel(rng, m), hamming_loss(m)
        f, g = random_denoiser(rng, m, k), random_denoiser(rng, m, k)
        a = rng.uniform()
        mix = WindowedDenoiser(k, a * f.table + (1 - a) * g.table)
        lhs = g_k_expected_loss(q, ch, mix, loss)
        rhs = a * g_k_expected_loss(q, ch, f, loss) + (1 - a) * g_k_expected_loss(q, ch, g, loss)
        assert lhs == pytest.approx(rhs, abs=1e-12)


def test_g_matches_direct_context_sum(rng):
    # independent evaluation: loop over contexts with f_k_context_loss
    m, k = 2, 1
    q, ch, loss, f = random_joint(rng, m, 3), random_channel(rng, m), hamming_loss(m), random_denoiser(rng, m, 1)
    t = q.tensor
    total = 0.0
    for left in range(m):
        for right in range(m):
            col = t[left, :, right]
            w = col.sum()
            slice_ = np.array([f.table[left * 4 + z * 2 + right] for z in range(m)])
            total += w * f_k_context_loss(col / w, ch, slice_, loss)
    assert g_k_expected_loss(q, ch, f, loss) == pytest.approx(total, abs=1e-12)


def test_example1_all_zeros_expected_loss():
    assert g_k_expected_loss(BERN_25, bsc(0.1), say_constant(2, 0), HAM2) == pytest.approx(0.1875, abs=1e-12)


def test_j_k_examples():
    f = say_what_you_see(2)
    assert j_k_worst_case(BERN_25, ChannelSet([bsc(0.1)]), f, HAM2)[0] == g_k_expected_loss(BERN_25, bsc(0.1), f, HAM2)
    assert j_k_worst_case(BERN_25, EX1, f, HAM2) == (pytest.approx(0.2, abs=1e-12), 1)
    assert j_k_worst_case(BERN_25, EX1, say_constant(2, 0), HAM2) == (pytest.approx(0.1875, abs=1e-12), 0)


def test_example1_minimax():
    sol = solve_minimax(BERN_25, EX1, 0, HAM2)
    assert sol.value == pytest.approx(1 / 7, abs=1e-12)
    assert sol.denoiser.table[1, 1] == pytest.approx(25 / 49, abs=1e-9)
    assert sol.denoiser.table[0, 1] == pytest.approx(0, abs=1e-12)
    assert sol.active_channels == (0, 1)


@pytest.mark.parametrize("delta", [0.05, 0.1, 0.2, 0.3])
def test_degenerate_half_randomization(delta):
    sol = solve_minimax(JointDistribution.iid([1 - delta, delta], 1), ChannelSet([bsc(delta), identity_channel(2)]), 0, HAM2)
    assert sol.value == pytest.approx(delta / 2, abs=1e-9)
    assert sol.denoiser.table[1, 1] == pytest.approx(0.5, abs=1e-9)
    assert sol.denoiser.table[0, 1] == pytest.approx(0, abs=1e-9)


def _random_instance(rng, m, k, n_ch):
    channels = ChannelSet([random_channel(rng, m) for _ in range(n_ch)])
    return random_joint(rng, m, 2 * k + 1), channels


def test_minimax_certificate(rng):
    for m, k in [(2, 0), (2, 1), (3, 0), (3, 1), (2, 2)]:
        q, delta = _random_instance(rng, m, k, 3)
        loss = hamming_loss(m)
        sol = solve_minimax(q, delta, k, loss)
        assert sol.value == pytest.approx(j_k_worst_case(q, delta, sol.denoiser, loss)[0], abs=1e-8)
        for _ in range(200 if m == 2 and k == 0 else 20):
            f = random_denoiser(rng, m, k)
            assert sol.value <= j_k_worst_case(q, delta, f, loss)[0] + 1e-8
        losses = [g_k_expected_loss(q, ch, sol.denoiser, loss) for ch in delta]
        assert max(losses) <= sol.value + 1e-8
        assert any(abs(v - sol.value) <= 1e-6 for v in losses)


def test_grid_oracle_equivalence(rng):
    for _ in range(20):
        d = np.sort(rng.uniform(0, 0.4, size=2))
        alpha = rng.uniform(d.max(), 1 - d.max())
        delta = ChannelSet([bsc(d[0]), bsc(d[1])]) if d[0] != d[1] else ChannelSet([bsc(d[0])])
        q = JointDistribution.iid([1 - alpha, alpha], 1)
        lp = solve_minimax(q, delta, 0, HAM2).value
        grid = grid_minimax_binary_k0(q.tensor, delta, HAM2, 1e-3).value
        assert abs(lp - grid) <= 2e-3
        assert grid >= lp - 1e-12


def test_scale_covariance(rng):
    q, delta = _random_instance(rng, 3, 1, 3)
    loss = LossMatrix(rng.uniform(0, 2, size=(3, 3)) * (1 - np.eye(3)))
    sol = solve_minimax(q, delta, 1, loss)
    scaled_loss = LossMatrix(2.5 * loss.matrix)
    scaled = solve_minimax(q, delta, 1, scaled_loss)
    assert scaled.value / sol.value == pytest.approx(2.5, rel=1e-9)
    assert j_k_worst_case(q, delta, sol.denoiser, scaled_loss)[0] == pytest.approx(scaled.value, rel=1e-9)


def test_singleton_equals_dude(rng):
    for _ in range(30):
        m, k = int(rng.choice([2, 3])), int(rng.choice([0, 1]))
        q, delta = _random_instance(rng, m, k, 1)
        loss = hamming_loss(m)
        rule = dude_rule(q, delta[0], k, loss)
        assert np.all(np.isin(rule.table, [0.0, 1.0]))
        assert solve_minimax(q, delta, k, loss).value == pytest.approx(
            g_k_expected_loss(q, delta[0], rule, loss), abs=1e-9
        )


def test_dude_rule_example1_cases():
    assert np.array_equal(dude_rule(BERN_25, bsc(0.1), 0, HAM2).table, np.eye(2))
    assert np.array_equal(dude_rule(BERN_25, bsc(0.2), 0, HAM2).table, say_constant(2, 0).table)
    q = JointDistribution.iid([0.2, 0.3, 0.5], 3)
    assert np.array_equal(dude_rule(q, identity_channel(3), 1, hamming_loss(3)).table, say_what_you_see(3, 1).table)


def test_zero_weight_windows_are_uniform():
    q = np.zeros((2, 2, 2))
    q[0, 0, 0] = 0.5
    q[0, 1, 0] = 0.5
    sol = solve_minimax(JointDistribution(q), EX1, 1, HAM2)
    # context (1, 1) never occurs: windows 1?1 are indices 5 and 7
    assert np.allclose(sol.denoiser.table[[5, 7]], 0.5)


def test_cost_tensor_is_nonnegative_when_clamped(rng):
    q = random_joint(rng, 2, 3)
    assert np.all(cost_tensor(q, bsc(0.4), HAM2) >= 0)
