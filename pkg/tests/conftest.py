import numpy as np
import pytest

from mmcast.channel import ChannelParams, generate_channel
from mmcast.system import SystemConfig, random_feasible


def crandn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def random_psd(rng, n, rank=None):
    a = crandn(rng, n, rank or n)
    return a @ a.conj().T


def random_instance(seed, n_tx=6, n_rf=3, n_rx=2, k=4):
    """A feasible hybrid point together with its channel and config."""
    rng = np.random.default_rng(seed)
    cfg = SystemConfig(n_tx=n_tx, n_rx=n_rx, n_rf=n_rf, k_users=k)
    ch = generate_channel(ChannelParams(n_tx, n_rx), k, rng)
    return cfg, ch, random_feasible(cfg, rng)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
