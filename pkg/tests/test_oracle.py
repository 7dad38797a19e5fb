import numpy as np
import pytest

from robust_dude.core import ChannelSet, JointDistribution, WindowedDenoiser, bsc, hamming_loss, identity_channel, say_what_you_see
from robust_dude.core import Singular
from robust_dude.evaluation import SourceChannelPair, SourceModel, conditional_expected_loss
from robust_dude.oracle import (
    NotIrreducible,
    StateSpaceTooLarge,
    exhaustive_expected_loss,
    grid_minimax_binary_k0,
    induced_bsc_input,
    markov_stationary,
)

from conftest import random_denoiser

HAM2 = hamming_loss(2)


def test_grid_example1():
    res = grid_minimax_binary_k0([0.75, 0.25], ChannelSet([bsc(0.1), bsc(0.2)]), HAM2, 1e-3)
    assert res.value == pytest.approx(0.1428, abs=2e-3)
    assert res.point[0] == 0
    assert res.point[1] == pytest.approx(0.510, abs=2e-3)


def test_grid_identity_and_degenerate():
    res = grid_minimax_binary_k0([0.6, 0.4], ChannelSet([identity_channel(2)]), HAM2, 0.01)
    assert res.value == 0 and res.point == (0.0, 1.0)
    res = grid_minimax_binary_k0([0.9, 0.1], ChannelSet([bsc(0.1), identity_channel(2)]), HAM2, 1e-3)
    assert res.value == pytest.approx(0.05, abs=1e-12) and res.point == (0.0, 0.5)


def test_grid_lipschitz_slack(rng):
    # moving one coordinate by `step` changes the closed form by at most step * max|coef|
    from robust_dude.minimax import solve_minimax

    for _ in range(5):
        d = np.sort(rng.uniform(0, 0.3, size=2))
        alpha = rng.uniform(0.35, 0.65)
        delta = ChannelSet([bsc(d[0]), bsc(d[1])])
        step = 0.01
        grid = grid_minimax_binary_k0([1 - alpha, alpha], delta, HAM2, step)
        lp = solve_minimax(JointDistribution.iid([1 - alpha, alpha], 1), delta, 0, HAM2).value
        lipschitz = 2 * HAM2.max_loss * delta.max_inv_norm
        assert lp - 1e-12 <= grid.value <= lp + lipschitz * step


def test_induced_bsc_input():
    assert induced_bsc_input(0.25, 0.1) == pytest.approx(0.1875)
    assert induced_bsc_input(0.25, 0.2) == pytest.approx(1 / 12)
    assert induced_bsc_input(0.1, 0.1) == 0
    with pytest.raises(Singular):
        induced_bsc_input(0.3, 0.5)


def test_markov_stationary():
    assert np.allclose(markov_stationary([[0.8, 0.2], [0.2, 0.8]]), [0.5, 0.5])
    assert np.allclose(markov_stationary([[0.9, 0.1], [0.3, 0.7]]), [0.75, 0.25], atol=1e-12)
    with pytest.raises(NotIrreducible):
        markov_stationary(np.eye(2))


def test_exhaustive_noiseless_and_crossover():
    pair = SourceChannelPair(SourceModel.iid([0.4, 0.6]), identity_channel(2))
    assert exhaustive_expected_loss(pair, say_what_you_see(2), 6, HAM2)[0] == pytest.approx(0, abs=1e-15)
    pair = SourceChannelPair(SourceModel.iid([0.7, 0.3]), bsc(0.15))
    assert exhaustive_expected_loss(pair, say_what_you_see(2), 6, HAM2)[0] == pytest.approx(0.15, abs=1e-12)
    with pytest.raises(StateSpaceTooLarge):
        exhaustive_expected_loss(pair, say_what_you_see(2), 13, HAM2)


@pytest.mark.parametrize("source", [
    SourceModel.iid([0.7, 0.3]),
    SourceModel.markov([[0.9, 0.1], [0.3, 0.7]]),
])
def test_exhaustive_matches_conditional(source, rng):
    import itertools

    pair = SourceChannelPair(source, bsc(0.15))
    f = random_denoiser(rng, 2, 1)
    expected, cond = exhaustive_expected_loss(pair, f, 8, HAM2)
    for z in itertools.product(range(2), repeat=8):
        c = conditional_expected_loss(pair, np.array(z), f, HAM2)
        assert c == pytest.approx(cond(z), abs=1e-10)
    assert sum(cond.prob.values()) == pytest.approx(1, abs=1e-12)
    assert sum(p * cond(z) for z, p in cond.prob.items()) == pytest.approx(expected, abs=1e-12)
