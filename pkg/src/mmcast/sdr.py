"""SDR-C baseline: semidefinite relaxation with Cholesky-based recovery.

Each block of the alternating scheme is lifted to a PSD matrix, relaxed by
dropping the rank-one constraint and solved with
:func:`~mmcast.sdp.solve_maxmin_sdp`. Feasible points are then recovered by
randomization:

* analog precoder: factor ``D = Q^T Q*``, draw unit vectors ``u`` and set
  ``f_n`` to the alphabet point closest in phase to ``conj(q_n^H u)``;
* digital precoder: the principal eigenvector of ``M`` plus Gaussian draws
  with covariance ``M``, each power-normalized;
* combiners: the principal eigenvector of ``W_k`` plus Gaussian draws, each
  projected entrywise onto the receive alphabet.

Candidates are scored by the minimum SNR (the user's own SNR for combiners)
and the best one is kept. Random draws are taken row by row, so for a fixed
seed the candidate set for ``n_rand`` is a prefix of the one for any larger
``n_rand``.
"""

from dataclasses import dataclass
import time

import numpy as np

from .linalg import cholesky_psd, kron, unvec
from .records import RunRecord
from .sdp import SdpProblem, solve_maxmin_sdp
from .system import (
    DIGITAL, HYBRID, HybridSolution, initial_solution, is_feasible,
    power_normalize_digital, spectral_efficiency, user_snrs,
)

__all__ = [
    "SdrParams", "lift_analog", "solve_sdr_analog", "recover_analog",
    "solve_sdr_digital", "recover_digital", "solve_sdr_combiner",
    "recover_combiner", "run_sdr_c",
]


@dataclass(frozen=True)
class SdrParams:
    n_rand: int = 50
    n_iter_sdr: int = 3
    tol: float = 1e-6

    def __post_init__(self):
        if self.n_rand < 1:
            raise ValueError("n_rand must be >= 1")
        if self.n_iter_sdr < 1:
            raise ValueError("n_iter_sdr must be >= 1")


def _H(channels):
    return getattr(channels, "H", channels)


def _complex_normal(rng, shape):
    g = rng.standard_normal(tuple(shape) + (2,))
    return (g[..., 0] + 1j * g[..., 1]) / np.sqrt(2)


def lift_analog(m, h, w, n_tx):
    """Lifting matrices for the analog block.

    Returns ``P = m^T kron I`` (so that ``P vec(F) = F m``) and the rank-one
    ``R = P^H h^H w w^H h P``.
    """
    m = np.asarray(m).reshape(-1)
    P = kron(m[None, :], np.eye(n_tx))
    r = P.conj().T @ (h.conj().T @ w)
    return P, np.outer(r, r.conj())


def solve_sdr_analog(channels, m, W, cfg, tol=1e-6):
    """Relaxed analog problem over ``D`` (``n_tx n_rf`` square).

    maximize ``t`` s.t. ``Tr(R_k D) >= t``, ``D_nn = delta_tx``, ``D`` PSD.
    Returns the :class:`~mmcast.sdp.SdpSolution`; ``X`` is ``D``.
    """
    H = _H(channels)
    n = cfg.n_tx * cfg.n_rf
    R = [lift_analog(m, H[k], W[k], cfg.n_tx)[1] for k in range(H.shape[0])]
    return solve_maxmin_sdp(SdpProblem(n, R, diag_value=cfg.delta_tx), tol=tol)


def _best(scores):
    # first index of the maximum, so earlier candidates win ties
    return int(np.argmax(scores))


def recover_analog(D, channels, m, W, cfg, n_rand, rng):
    """Randomized Cholesky recovery of an alphabet-feasible ``F`` from ``D``.

    Every candidate is scored with ``m`` rescaled to meet the transmit power;
    the caller should apply the same rescaling to the returned ``F``.
    """
    H = _H(channels)
    N = cfg.n_tx * cfg.n_rf
    Q = cholesky_psd(D)  # column n is q_n
    U = _complex_normal(rng, (n_rand, N))
    U /= np.linalg.norm(U, axis=1, keepdims=True)
    Z = U @ Q.conj()  # row i holds z_n = q_n^H u_i for every n
    best_F, best_val = None, -np.inf
    for z in Z:
        F = unvec(cfg.tx_alphabet.project(z.conj()), cfg.n_tx, cfg.n_rf)
        try:
            mm = power_normalize_digital(m, F, cfg.p_tx_max)
        except ValueError:
            continue
        val = float(np.min(user_snrs(H, F, mm, W, cfg.sigma2)))
        if val > best_val:
            best_F, best_val = F, val
    if best_F is None:
        best_F = unvec(cfg.tx_alphabet.project(Z[0].conj()), cfg.n_tx, cfg.n_rf)
    return best_F


def solve_sdr_digital(channels, F, W, cfg, tol=1e-6):
    """Relaxed digital problem over ``M = m m^H``.

    maximize ``t`` s.t. ``Tr(Z_k M) >= t``, ``Tr(F^H F M) = p_tx_max``.
    """
    H = _H(channels)
    B = np.einsum("kr,krt->kt", W.conj(), H) @ F  # rows are w_k^H H_k F
    Z = [np.outer(b.conj(), b) for b in B]
    Y = F.conj().T @ F
    return solve_maxmin_sdp(SdpProblem(F.shape[1], Z, [(Y, cfg.p_tx_max)]), tol=tol)


def _principal(M):
    lam, vecs = np.linalg.eigh(0.5 * (M + M.conj().T))
    return vecs[:, -1] * np.sqrt(max(lam[-1], 0.0))


def recover_digital(M, channels, F, W, cfg, n_rand, rng):
    """Best of the principal eigenvector and ``n_rand`` Gaussian draws."""
    H = _H(channels)
    Q = cholesky_psd(M)
    G = _complex_normal(rng, (n_rand, M.shape[0]))
    cands = [_principal(M)] + list(G @ Q)  # each row of G @ Q is Q^T g
    best_m, best_val = None, -np.inf
    for m in cands:
        try:
            m = power_normalize_digital(m, F, cfg.p_tx_max)
        except ValueError:
            continue
        val = float(np.min(user_snrs(H, F, m, W, cfg.sigma2)))
        if val > best_val:
            best_m, best_val = m, val
    if best_m is None:
        raise ValueError("no digital candidate with nonzero output")
    return best_m


def solve_sdr_combiner(channels, F, m, cfg, tol=1e-6):
    """Per-user relaxed combiner problems; one solution per user.

    maximize ``t`` s.t. ``Tr(C_k W_k) >= t``, ``Tr(W_k) = p_rx_max``.
    """
    H = _H(channels)
    g = H @ (F @ m)
    eye = np.eye(cfg.n_rx)
    return [
        solve_maxmin_sdp(SdpProblem(cfg.n_rx, [np.outer(gk, gk.conj())],
                                    [(eye, cfg.p_rx_max)]), tol=tol)
        for gk in g
    ]


def recover_combiner(Ws, channels, F, m, cfg, n_rand, rng):
    """Alphabet-feasible combiners, shape ``(K, n_rx)``.

    For each user the principal eigenvector of ``W_k`` and ``n_rand``
    Gaussian draws are projected onto the receive alphabet; the candidate
    with the largest SNR for that user wins.
    """
    H = _H(channels)
    g = H @ (F @ m)
    out = np.empty((len(Ws), cfg.n_rx), dtype=complex)
    for k, Wk in enumerate(Ws):
        Q = cholesky_psd(Wk)
        G = _complex_normal(rng, (n_rand, cfg.n_rx))
        cands = cfg.rx_alphabet.project(np.vstack([_principal(Wk)[None, :], G @ Q]))
        gain = np.abs(cands.conj() @ g[k]) ** 2  # every candidate has power p_rx_max
        out[k] = cands[_best(gain)]
    return out


def run_sdr_c(channels, cfg, params, rng, mode=HYBRID):
    """Alternate the relaxed blocks for ``params.n_iter_sdr`` rounds.

    Starts from the same deterministic point as LB-GDM. A stage whose SDP does
    not reach optimality leaves its block unchanged. The incumbent is updated
    after every stage that ends at a feasible point; the record's trace holds
    its minimum SNR after each stage.
    """
    t0 = time.perf_counter()
    H = _H(channels)
    if mode == DIGITAL:
        cfg = cfg.digital()
    cur = initial_solution(cfg, mode)
    F, m, W = cur.F, cur.m, cur.W
    opt, gamma_T, trace = None, 0.0, []

    def track(sol):
        nonlocal opt, gamma_T
        if is_feasible(sol, cfg):
            g = float(np.min(user_snrs(H, sol.F, sol.m, sol.W, cfg.sigma2)))
            if opt is None or g >= gamma_T:
                opt, gamma_T = sol, g
        trace.append(gamma_T)

    for _ in range(params.n_iter_sdr):
        if mode == HYBRID:
            sol = solve_sdr_analog(H, m, W, cfg, params.tol)
            if sol.optimal:
                F = recover_analog(sol.X, H, m, W, cfg, params.n_rand, rng)
                m = power_normalize_digital(m, F, cfg.p_tx_max)
            track(HybridSolution(F, m, W, mode))
        sol = solve_sdr_digital(H, F, W, cfg, params.tol)
        if sol.optimal:
            m = recover_digital(sol.X, H, F, W, cfg, params.n_rand, rng)
        track(HybridSolution(F, m, W, mode))
        sols = solve_sdr_combiner(H, F, m, cfg, params.tol)
        if all(s.optimal for s in sols):
            W = recover_combiner([s.X for s in sols], H, F, m, cfg, params.n_rand, rng)
        track(HybridSolution(F, m, W, mode))

    if opt is None:
        raise RuntimeError("SDR-C produced no feasible solution")
    final = user_snrs(H, opt.F, opt.m, opt.W, cfg.sigma2)
    rec = RunRecord(
        method="sdr-c", mode=mode, min_snr=gamma_T, se=spectral_efficiency(final),
        n_tx=cfg.n_tx, n_rx=cfg.n_rx, n_rf=cfg.n_rf, k_users=cfg.k_users,
        wall_ms=1e3 * (time.perf_counter() - t0), trace=tuple(trace),
    )
    return opt, rec
