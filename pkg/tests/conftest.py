import numpy as np
import pytest

from robust_dude.core import DudeError, JointDistribution, WindowedDenoiser, channel_new


def random_channel(rng, m, diag=(0.55, 0.95)):
    """Diagonally dominant random channel (always invertible)."""
    while True:
        keep = rng.uniform(*diag, size=m)
        noise = rng.dirichlet(np.ones(m), size=m) * (1 - keep)[:, None]
        mat = np.diag(keep) + noise
        mat /= mat.sum(axis=1, keepdims=True)
        try:
            return channel_new(mat)
        except DudeError:
            continue


def random_joint(rng, m, order):
    return JointDistribution(rng.dirichlet(np.ones(m**order)).reshape((m,) * order))


def random_denoiser(rng, m, k):
    return WindowedDenoiser(k, rng.dirichlet(np.ones(m), size=m ** (2 * k + 1)))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
