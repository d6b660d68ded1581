"""Narrowband geometric multipath channels between the gNodeB and each user.

Both ends use half-wavelength uniform linear arrays by default. Each user
sees ``n_paths`` paths with circular Gaussian gains and angles of arrival
and departure drawn uniformly on the full circle.
"""

from dataclasses import dataclass

import numpy as np

__all__ = ["ChannelParams", "ChannelSet", "steering_vector", "generate_channel"]


@dataclass(frozen=True)
class ChannelParams:
    n_tx: int
    n_rx: int
    n_paths: int = 5
    spacing: float = 0.5  # in wavelengths

    def __post_init__(self):
        if self.n_paths < 1 or self.n_tx < 1 or self.n_rx < 1:
            raise ValueError("antenna and path counts must be >= 1")
        if not self.spacing > 0:
            raise ValueError("antenna spacing must be positive")


@dataclass(frozen=True)
class ChannelSet:
    """Per-user channel matrices for one realization.

    ``H[k]`` is the ``n_rx x n_tx`` channel of user ``k``.
    """

    H: np.ndarray
    seed: int | None = None

    def __post_init__(self):
        if self.H.ndim != 3:
            raise ValueError("H must have shape (K, n_rx, n_tx)")
        if not np.all(np.isfinite(self.H)):
            raise ValueError("channel has non-finite entries")

    @property
    def k_users(self):
        return self.H.shape[0]

    @property
    def n_rx(self):
        return self.H.shape[1]

    @property
    def n_tx(self):
        return self.H.shape[2]

    def __len__(self):
        return self.H.shape[0]

    def __getitem__(self, k):
        return self.H[k]


def steering_vector(n, angle, spacing=0.5):
    """Unit-norm ULA response ``exp(j 2 pi d l sin(angle)) / sqrt(n)``.

    ``angle`` may be an array; the antenna index then runs along a new last
    axis.
    """
    if n < 1:
        raise ValueError("array needs at least one element")
    phase = 2 * np.pi * spacing * np.sin(np.asarray(angle, dtype=float))
    l = np.arange(n)
    return np.exp(1j * phase[..., None] * l) / np.sqrt(n)


def generate_channel(params, k_users, rng=None, *, seed=None, paths=None):
    """Draw a :class:`ChannelSet` for ``k_users`` users.

    Parameters
    ----------
    params : ChannelParams
    k_users : int
    rng : numpy.random.Generator, optional
        Random stream. Built from ``seed`` when omitted.
    seed : int, optional
        Stored on the result; also used to build ``rng`` if that is missing.
    paths : tuple of arrays, optional
        ``(alpha, theta, phi)`` each of shape ``(k_users, n_paths)``: path
        gains, arrival angles and departure angles. Bypasses the random
        draw (used for deterministic tests).
    """
    if k_users < 1:
        raise ValueError("need at least one user")
    shape = (k_users, params.n_paths)
    if paths is None:
        if rng is None:
            if seed is None:
                raise ValueError("need an rng or a seed")
            rng = np.random.default_rng(seed)
        gain = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)
        theta = rng.uniform(0.0, 2 * np.pi, shape)
        phi = rng.uniform(0.0, 2 * np.pi, shape)
    else:
        gain, theta, phi = (np.broadcast_to(np.asarray(p), shape) for p in paths)
    a_rx = steering_vector(params.n_rx, theta, params.spacing)
    a_tx = steering_vector(params.n_tx, phi, params.spacing)
    scale = np.sqrt(params.n_tx * params.n_rx / params.n_paths)
    H = scale * np.einsum("kp,kpr,kpt->krt", gain, a_rx, a_tx.conj())
    return ChannelSet(H=H, seed=seed)
