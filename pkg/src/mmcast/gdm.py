"""Learning-based gradient ascent with momentum (LB-GDM).

The joint max-min problem over ``(F, m, {w_k})`` is split into three blocks
that are updated in turn, once per inner (exploitation) iteration:

* analog precoder ``F``: weighted sum of the per-user utilities
  ``J_F^k = w_k^H H_k F (F^H F)^{-1} F^H H_k^H w_k``, then entrywise phase
  quantization;
* digital precoder ``m``: weighted sum of ``|w_k^H H_k F m|^2``, then power
  normalization;
* combiners ``w_k``: each user ascends its own ``|w_k^H H_k F m|^2``, then
  entrywise phase quantization.

Every update has the form ``x + rho * x_best + alpha * g`` where ``g`` is a
unit-norm ascent direction and ``x_best`` is the incumbent of the previous
exploration round. Outer (exploration) rounds restart from a random feasible
point and reset the learning factors.

Gradients are the steepest-ascent directions of the real utilities, i.e.
derivatives with respect to the conjugated variable, so that
``J(x + h d) = J(x) + 2 h Re<g, d> + O(h^2)``.
"""

from dataclasses import dataclass, field
import time

import numpy as np

from .linalg import SingularMatrixError, left_pseudo_inverse
from .records import RunRecord
from .system import (
    DIGITAL, HYBRID, HybridSolution, initial_solution, power_normalize_digital,
    random_feasible, spectral_efficiency, user_snrs,
)

__all__ = [
    "GdmHyperParams", "LearnState", "compute_weights", "analog_utility",
    "analog_rayleigh", "grad_analog", "grad_digital", "grad_combiner",
    "step_analog", "step_digital", "step_combiner", "init_state",
    "run_lb_gdm", "run_lb_gdm_digital",
]

# Per-user gradients smaller than this (relative to their natural scale) are
# treated as exactly zero instead of being normalized up from round-off.
_ZERO_RTOL = 1e-10


@dataclass(frozen=True)
class GdmHyperParams:
    rho_f: float = 0.9
    rho_m: float = 0.9
    rho_w: float = 0.9
    alpha_f0: float = 1.0
    alpha_m0: float = 1.0
    alpha_w0: float = 1.0
    decay: float = 0.98
    xi: float = 1.0
    n_xpr: int = 100
    n_xpt: int = 100

    def __post_init__(self):
        for name in ("rho_f", "rho_m", "rho_w", "alpha_f0", "alpha_m0", "alpha_w0", "xi"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not 0 < self.decay <= 1:
            raise ValueError("decay must lie in (0, 1]")
        if self.n_xpr < 1 or self.n_xpt < 1:
            raise ValueError("iteration counts must be >= 1")


@dataclass
class LearnState:
    """Mutable learner state.

    ``current`` is the live iterate, ``best`` the momentum anchor (refreshed
    once per exploration round) and ``opt`` the overall incumbent with
    minimum SNR ``gamma_T``.
    """

    current: HybridSolution
    best: HybridSolution
    alpha_f: float
    alpha_m: float
    alpha_w: float
    opt: HybridSolution | None = None
    gamma_T: float = 0.0
    t: int = 0
    trace: list = field(default_factory=list)


def compute_weights(snrs, xi=1.0):
    """Per-user weights ``(1 + xi (g_max - g_k) / g_max)^2``.

    They lie in ``[1, (1 + xi)^2]``: the strongest user gets 1 and the
    weakest the largest weight. An all-zero SNR vector gives uniform weights.
    """
    snrs = np.asarray(snrs, dtype=float)
    g_max = snrs.max()
    if g_max <= 0:
        return np.ones_like(snrs)
    return (1.0 + xi * (g_max - snrs) / g_max) ** 2


def analog_utility(F, w, h):
    """``J_F = w^H H F (F^H F)^{-1} F^H H^H w``: energy of ``H^H w`` in range(F)."""
    a = h.conj().T @ w
    u = F.conj().T @ a
    return float(np.real(np.vdot(u, np.linalg.solve(F.conj().T @ F, u))))


def analog_rayleigh(F, m, w, h):
    """``|w^H H F m|^2 / ||F m||^2``, which ``analog_utility`` upper-bounds."""
    x = F @ m
    return abs(np.vdot(w, h @ x)) ** 2 / np.vdot(x, x).real


def grad_analog(F, m, w, h):
    """Ascent direction of ``J_F`` with respect to ``F``.

    Equals ``(I - F F^+) H^H w w^H H F^{+H}`` with ``F^+ = (F^H F)^{-1} F^H``.
    ``m`` does not enter ``J_F``; it is accepted for a uniform signature.
    Raises :class:`~mmcast.linalg.SingularMatrixError` when ``F`` is rank
    deficient.
    """
    pinv = left_pseudo_inverse(F)
    a = h.conj().T @ w
    v = pinv @ a
    r = a - F @ v
    return np.outer(r, v.conj())


def grad_digital(F, m, w, h):
    """Ascent direction ``A^H A m`` of ``|A m|^2`` with ``A = w^H H F``."""
    b = w.conj() @ h @ F
    return b.conj() * (b @ m)


def grad_combiner(F, m, w, h):
    """Ascent direction ``g g^H w`` of ``|w^H g|^2`` with ``g = H F m``."""
    g = h @ (F @ m)
    return g * np.vdot(g, w)


def _H(channels):
    return getattr(channels, "H", channels)


def _safe_pinv(F):
    try:
        return left_pseudo_inverse(F)
    except SingularMatrixError:
        # quantized columns can coincide; fall back to the Moore-Penrose inverse
        return np.linalg.pinv(F)


def _unit(g):
    nrm = np.linalg.norm(g)
    return g / nrm if nrm > 0 else g


def _analog_direction(F, W, H, weights):
    a = np.einsum("krt,kr->kt", H.conj(), W)  # rows are H_k^H w_k
    v = a @ _safe_pinv(F).T                   # rows are F^+ a_k
    r = a - v @ F.T
    nr = np.linalg.norm(r, axis=1)
    nv = np.linalg.norm(v, axis=1)
    na = np.linalg.norm(a, axis=1)
    live = (nr > _ZERO_RTOL * na) & (nv > 0)
    coef = np.where(live, weights / np.where(live, nr * nv, 1.0), 0.0)
    return _unit((r * coef[:, None]).T @ v.conj())


def _digital_direction(F, m, W, H, weights):
    B = np.einsum("kr,krt->kt", W.conj(), H) @ F  # rows are w_k^H H_k F
    s = B @ m
    G = B.conj() * s[:, None]
    nb = np.linalg.norm(B, axis=1)
    live = np.abs(s) > _ZERO_RTOL * nb * np.linalg.norm(m)
    coef = np.where(live, weights / np.where(live, nb * np.abs(s), 1.0), 0.0)
    return _unit(coef @ G)


def _combiner_directions(F, m, W, H):
    g = H @ (F @ m)                               # (K, n_rx)
    s = np.einsum("kr,kr->k", g.conj(), W)        # g_k^H w_k
    G = g * s[:, None]
    ng = np.linalg.norm(g, axis=1)
    nw = np.linalg.norm(W, axis=1)
    live = np.abs(s) > _ZERO_RTOL * ng * nw
    scale = np.where(live, 1.0 / np.where(live, ng * np.abs(s), 1.0), 0.0)
    return G * scale[:, None]


def _weights(state, H, cfg, hp):
    cur = state.current
    return compute_weights(user_snrs(H, cur.F, cur.m, cur.W, cfg.sigma2), hp.xi)


def step_analog(state, channels, cfg, hp, weights=None):
    """One analog-precoder update; returns the new (quantized) ``F``."""
    H = _H(channels)
    cur = state.current
    if weights is None:
        weights = _weights(state, H, cfg, hp)
    d = _analog_direction(cur.F, cur.W, H, weights)
    F = cur.F + hp.rho_f * state.best.F + state.alpha_f * d
    return cfg.tx_alphabet.project(F)


def step_digital(state, channels, cfg, hp, weights=None):
    """One digital-precoder update; returns ``m`` with ``||F m||^2 = p_tx_max``."""
    H = _H(channels)
    cur = state.current
    if weights is None:
        weights = _weights(state, H, cfg, hp)
    d = _digital_direction(cur.F, cur.m, cur.W, H, weights)
    m = cur.m + hp.rho_m * state.best.m + state.alpha_m * d
    try:
        return power_normalize_digital(m, cur.F, cfg.p_tx_max)
    except ValueError:
        return power_normalize_digital(cur.m, cur.F, cfg.p_tx_max)


def step_combiner(state, channels, cfg, hp, user=None):
    """Combiner update. Returns all combiners, or only ``w_user`` if given.

    Users are independent: each one follows the gradient of its own
    received signal energy.
    """
    H = _H(channels)
    cur = state.current
    if user is not None:
        H, W, Wb = H[user:user + 1], cur.W[user:user + 1], state.best.W[user:user + 1]
    else:
        W, Wb = cur.W, state.best.W
    d = _combiner_directions(cur.F, cur.m, W, H)
    W = cfg.rx_alphabet.project(W + hp.rho_w * Wb + state.alpha_w * d)
    return W[0] if user is not None else W


def init_state(cfg, hp, mode=HYBRID):
    start = initial_solution(cfg, mode)
    zero = HybridSolution(np.zeros_like(start.F), np.zeros_like(start.m),
                          np.zeros_like(start.W), mode)
    return LearnState(current=start, best=zero, alpha_f=hp.alpha_f0,
                      alpha_m=hp.alpha_m0, alpha_w=hp.alpha_w0)


def run_lb_gdm(channels, cfg, hp, rng, mode=HYBRID):
    """Run the full exploration/exploitation schedule.

    Returns the incumbent solution and a :class:`RunRecord` whose ``trace``
    holds the incumbent minimum SNR after every inner iteration.
    """
    t0 = time.perf_counter()
    H = _H(channels)
    if mode == DIGITAL:
        cfg = cfg.digital()
    state = init_state(cfg, hp, mode)
    snrs = user_snrs(H, state.current.F, state.current.m, state.current.W, cfg.sigma2)
    for _ in range(hp.n_xpr):
        for _ in range(hp.n_xpt):
            weights = compute_weights(snrs, hp.xi)
            cur = state.current
            F = cur.F
            if mode == HYBRID:
                F = step_analog(state, H, cfg, hp, weights)
                state.current = cur = HybridSolution(F, cur.m, cur.W, mode)
            m = step_digital(state, H, cfg, hp, weights)
            state.current = cur = HybridSolution(F, m, cur.W, mode)
            W = step_combiner(state, H, cfg, hp)
            state.current = cur = HybridSolution(F, m, W, mode)
            snrs = user_snrs(H, F, m, W, cfg.sigma2)
            g_min = float(snrs.min())
            if g_min >= state.gamma_T:
                state.opt = cur
                state.gamma_T = g_min
            state.trace.append(state.gamma_T)
            state.alpha_f *= hp.decay
            state.alpha_m *= hp.decay
            state.alpha_w *= hp.decay
            state.t += 1
        state.best = state.opt
        state.current = random_feasible(cfg, rng, mode)
        snrs = user_snrs(H, state.current.F, state.current.m, state.current.W, cfg.sigma2)
        state.alpha_f, state.alpha_m, state.alpha_w = hp.alpha_f0, hp.alpha_m0, hp.alpha_w0
    opt = state.opt
    final = user_snrs(H, opt.F, opt.m, opt.W, cfg.sigma2)
    rec = RunRecord(
        method="lb-gdm", mode=mode, min_snr=state.gamma_T,
        se=spectral_efficiency(final), n_tx=cfg.n_tx, n_rx=cfg.n_rx,
        n_rf=cfg.n_rf, k_users=cfg.k_users,
        wall_ms=1e3 * (time.perf_counter() - t0), trace=tuple(state.trace),
    )
    return opt, rec


def run_lb_gdm_digital(channels, cfg, hp, rng):
    """Fully-digital variant: ``F = I`` and only ``m`` and the combiners learn."""
    return run_lb_gdm(channels, cfg, hp, rng, mode=DIGITAL)
