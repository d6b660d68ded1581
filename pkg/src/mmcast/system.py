"""Decision variables, constraint alphabets and link metrics.

A :class:`HybridSolution` holds the analog precoder ``F``, the digital
precoder ``m`` and one analog combiner per user, stacked as the rows of
``W``. The received SNR of user ``k`` is

    gamma_k = |w_k^H H_k F m|^2 / (sigma2 * ||w_k||^2)

The fully-digital architecture reuses the same container with ``F`` fixed
to the identity and no phase constraint on ``m``.
"""

from dataclasses import dataclass, field, replace

import numpy as np

__all__ = [
    "HYBRID", "DIGITAL", "SystemConfig", "PhaseAlphabet", "HybridSolution",
    "snr", "user_snrs", "min_snr", "spectral_efficiency", "project_to_alphabet",
    "power_normalize_digital", "random_feasible", "initial_solution",
    "feasibility_violations", "is_feasible",
]

HYBRID = "hybrid"
DIGITAL = "digital"
MODES = (HYBRID, DIGITAL)

_TIE_EPS = 1e-9


@dataclass(frozen=True)
class SystemConfig:
    """Scenario dimensions, power budgets and phase-shifter resolutions.

    Defaults are the simulation settings used throughout the experiments:
    unit transmit power, receive power 0.01, unit noise power, 8 transmit and
    4 receive phase shifts.
    """

    n_tx: int
    n_rx: int
    n_rf: int
    k_users: int
    l_tx: int = 8
    l_rx: int = 4
    p_tx_max: float = 1.0
    p_rx_max: float = 0.01
    sigma2: float = 1.0

    def __post_init__(self):
        for name in ("n_tx", "n_rx", "n_rf", "k_users"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.n_rf > self.n_tx:
            raise ValueError("cannot have more RF chains than transmit antennas")
        if self.l_tx < 2 or self.l_rx < 2:
            raise ValueError("phase alphabets need at least two points")
        if not (self.p_tx_max > 0 and self.p_rx_max > 0 and self.sigma2 > 0):
            raise ValueError("powers and noise variance must be positive")

    @property
    def delta_tx(self):
        return 1.0 / (self.n_rf * self.n_tx)

    @property
    def delta_rx(self):
        return self.p_rx_max / self.n_rx

    @property
    def tx_alphabet(self):
        return PhaseAlphabet(np.sqrt(self.delta_tx), self.l_tx)

    @property
    def rx_alphabet(self):
        return PhaseAlphabet(np.sqrt(self.delta_rx), self.l_rx)

    def digital(self):
        """Same scenario with one RF chain per antenna."""
        return replace(self, n_rf=self.n_tx)


@dataclass(frozen=True)
class PhaseAlphabet:
    """``modulus * exp(j 2 pi l / size)`` for ``l = 0 .. size-1``."""

    modulus: float
    size: int
    points: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.size < 2:
            raise ValueError("alphabet needs at least two points")
        pts = self.modulus * np.exp(2j * np.pi * np.arange(self.size) / self.size)
        object.__setattr__(self, "points", pts)

    def index(self, z):
        """Index of the nearest phase; ties go to the smaller index."""
        L = self.size
        x = np.mod(np.angle(z) * (L / (2 * np.pi)), L)
        lo = np.floor(x)
        frac = x - lo
        lo = lo.astype(int) % L
        hi = (lo + 1) % L
        tie = np.abs(frac - 0.5) <= _TIE_EPS
        idx = np.where(frac > 0.5, hi, lo)
        return np.where(tie, np.minimum(lo, hi), idx)

    def project(self, z):
        return self.points[self.index(z)]

    def contains(self, z):
        """Entrywise exact membership test."""
        z = np.asarray(z)
        return z == self.points[self.index(z)]


def project_to_alphabet(z, alphabet):
    """Nearest alphabet point by phase (works entrywise on arrays)."""
    return alphabet.project(z)


@dataclass(frozen=True)
class HybridSolution:
    """Transmit precoder and receive combiners.

    Attributes
    ----------
    F : (n_tx, n_rf) complex ndarray
    m : (n_rf,) complex ndarray
    W : (K, n_rx) complex ndarray
        Row ``k`` is the combiner ``w_k``.
    mode : {"hybrid", "digital"}
    """

    F: np.ndarray
    m: np.ndarray
    W: np.ndarray
    mode: str = HYBRID

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.F.shape[1] != self.m.shape[0]:
            raise ValueError("F and m have inconsistent shapes")

    @property
    def x(self):
        """Transmitted beam ``F m``."""
        return self.F @ self.m

    def copy(self):
        return HybridSolution(self.F.copy(), self.m.copy(), self.W.copy(), self.mode)


def user_snrs(H, F, m, W, sigma2):
    """SNR of every user, vectorized over the user axis."""
    x = F @ m
    g = H @ x  # (K, n_rx)
    num = np.abs(np.einsum("kr,kr->k", W.conj(), g)) ** 2
    den = sigma2 * np.einsum("kr,kr->k", W.conj(), W).real
    if np.any(den == 0):
        raise ValueError("zero combiner")
    return num / den


def snr(h, sol, user, sigma2):
    """SNR of a single user with channel matrix ``h``."""
    w = sol.W[user]
    den = sigma2 * np.vdot(w, w).real
    if den == 0:
        raise ValueError("zero combiner")
    return abs(np.vdot(w, h @ sol.x)) ** 2 / den


def min_snr(channels, sol, sigma2):
    H = getattr(channels, "H", channels)
    return float(np.min(user_snrs(H, sol.F, sol.m, sol.W, sigma2)))


def spectral_efficiency(snrs):
    """Sum over users of ``log2(1 + gamma_k)``, in bit/s/Hz."""
    snrs = np.asarray(snrs, dtype=float)
    if np.any(snrs < 0):
        raise ValueError("SNR values must be nonnegative")
    return float(np.sum(np.log2(1.0 + snrs)))


def power_normalize_digital(m, F, p_tx_max):
    """Rescale ``m`` so that ``||F m||^2 = p_tx_max``."""
    nrm = np.linalg.norm(F @ m)
    if nrm == 0:
        raise ValueError("F m is zero; cannot normalize")
    return m * (np.sqrt(p_tx_max) / nrm)


def _random_digital(rng, n, F, p_tx_max, retries=16):
    for _ in range(retries):
        m = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / np.sqrt(2)
        if np.linalg.norm(F @ m) > 0:
            return power_normalize_digital(m, F, p_tx_max)
    raise RuntimeError("could not draw a digital precoder with nonzero output")


def random_feasible(cfg, rng, mode=HYBRID):
    """Draw a feasible solution uniformly over the phase alphabets.

    The digital precoder is circular Gaussian, then power-normalized.
    """
    W = cfg.rx_alphabet.points[rng.integers(0, cfg.l_rx, size=(cfg.k_users, cfg.n_rx))]
    if mode == DIGITAL:
        F = np.eye(cfg.n_tx, dtype=complex)
        m = _random_digital(rng, cfg.n_tx, F, cfg.p_tx_max)
        return HybridSolution(F, m, W, DIGITAL)
    for _ in range(16):
        F = cfg.tx_alphabet.points[rng.integers(0, cfg.l_tx, size=(cfg.n_tx, cfg.n_rf))]
        try:
            m = _random_digital(rng, cfg.n_rf, F, cfg.p_tx_max)
        except RuntimeError:
            continue
        return HybridSolution(F, m, W, HYBRID)
    raise RuntimeError("could not draw a feasible hybrid solution")


def initial_solution(cfg, mode=HYBRID):
    """Deterministic starting point shared by both solvers.

    Row ``q`` (0-based) of ``F`` gets ``sqrt(delta_tx)`` in column
    ``(q + 1) mod n_rf`` and zeros elsewhere; ``m`` and every combiner are
    the first unit vector. The point is not feasible: the first projection
    of each solver repairs it.
    """
    K = cfg.k_users
    W = np.zeros((K, cfg.n_rx), dtype=complex)
    W[:, 0] = 1.0
    if mode == DIGITAL:
        F = np.eye(cfg.n_tx, dtype=complex)
        m = np.zeros(cfg.n_tx, dtype=complex)
        m[0] = 1.0
        return HybridSolution(F, m, W, DIGITAL)
    F = np.zeros((cfg.n_tx, cfg.n_rf), dtype=complex)
    q = np.arange(cfg.n_tx)
    F[q, (q + 1) % cfg.n_rf] = np.sqrt(cfg.delta_tx)
    m = np.zeros(cfg.n_rf, dtype=complex)
    m[0] = 1.0
    return HybridSolution(F, m, W, HYBRID)


def feasibility_violations(sol, cfg, rtol=1e-9):
    """List the constraints ``sol`` violates (empty when feasible)."""
    out = []
    K = cfg.k_users
    if sol.W.shape != (K, cfg.n_rx):
        out.append(f"combiner block has shape {sol.W.shape}")
    elif not np.all(cfg.rx_alphabet.contains(sol.W)):
        out.append("combiner entry outside the receive alphabet")
    else:
        pw = np.einsum("kr,kr->k", sol.W.conj(), sol.W).real
        if np.any(np.abs(pw - cfg.p_rx_max) > rtol * cfg.p_rx_max):
            out.append("combiner power differs from p_rx_max")
    if sol.mode == DIGITAL:
        if sol.F.shape != (cfg.n_tx, cfg.n_tx) or not np.array_equal(sol.F, np.eye(cfg.n_tx)):
            out.append("fully-digital precoder must use F = I")
    else:
        if sol.F.shape != (cfg.n_tx, cfg.n_rf):
            out.append(f"analog precoder has shape {sol.F.shape}")
        elif not np.all(cfg.tx_alphabet.contains(sol.F)):
            out.append("analog entry outside the transmit alphabet")
    if sol.F.shape[1] == sol.m.shape[0]:
        p = np.linalg.norm(sol.F @ sol.m) ** 2
        if abs(p - cfg.p_tx_max) > rtol * cfg.p_tx_max:
            out.append(f"transmit power {p!r} differs from p_tx_max")
    return out


def is_feasible(sol, cfg, rtol=1e-9):
    return not feasibility_violations(sol, cfg, rtol)
