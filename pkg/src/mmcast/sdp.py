"""Small dense solver for trace-form max-min semidefinite programs.

The problems handled here read

    maximize    t
    subject to  Tr(A_i X) >= t          for every inequality matrix A_i
                Tr(B_j X)  = b_j        for every equality pair (B_j, b_j)
                X_nn       = delta      (optional, all diagonal entries)
                X Hermitian PSD

The complex problem is mapped to a real symmetric one of twice the size with
``X -> real_embed(X)`` and ``A -> real_embed(A) / 2``, which preserves every
trace. The real problem is solved with an infeasible-start primal-dual
interior-point method (HKM search direction, Mehrotra predictor-corrector)
over the product of the PSD cone and a small nonnegative orthant that holds
``t`` and the inequality slacks.

All coefficient matrices are stored through low-rank eigen-factors, so the
Schur complement costs ``O(N^2 r)`` for ``r`` total factors instead of one
dense ``N x N`` product per constraint pair.
"""

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "OPTIMAL", "INFEASIBLE", "MAX_ITERATIONS", "SdpProblem", "SdpSolution",
    "real_embed", "solve_maxmin_sdp",
]

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
MAX_ITERATIONS = "max-iterations"

_HERM_TOL = 1e-12
_STEP_FRACTION = 0.98
_DIVERGENCE = 1e8


def real_embed(h):
    """``[[Re h, -Im h], [Im h, Re h]]`` for a Hermitian ``h``.

    The spectrum of the embedding is that of ``h`` with every multiplicity
    doubled, so ``Tr(real_embed(A) @ real_embed(X)) / 2 == Tr(A @ X)``.
    """
    h = np.asarray(h, dtype=complex)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ValueError(f"need a square matrix, got shape {h.shape}")
    re, im = h.real, h.imag
    return np.block([[re, -im], [im, re]])


def _complex_from_embedding(xr, n):
    re = 0.5 * (xr[:n, :n] + xr[n:, n:])
    im = 0.5 * (xr[n:, :n] - xr[:n, n:])
    x = re + 1j * im
    return 0.5 * (x + x.conj().T)


def _check_hermitian(a, what):
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"{what} must be square, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{what} has non-finite entries")
    if np.max(np.abs(a - a.conj().T), initial=0.0) > _HERM_TOL * max(1.0, np.max(np.abs(a))):
        raise ValueError(f"{what} is not Hermitian")
    return 0.5 * (a + a.conj().T)


@dataclass(frozen=True)
class SdpProblem:
    """Max-min SDP in trace form.

    Parameters
    ----------
    n : int
        Dimension of the Hermitian matrix variable.
    inequalities : sequence of (n, n) arrays
        ``A_i`` in ``Tr(A_i X) >= t``.
    equalities : sequence of (B, b) pairs
        ``Tr(B X) = b``.
    diag_value : float, optional
        When given, every diagonal entry of ``X`` is pinned to this value.
    """

    n: int
    inequalities: tuple
    equalities: tuple = ()
    diag_value: float | None = None

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("dimension must be >= 1")
        ineq = tuple(_check_hermitian(a, "inequality matrix") for a in self.inequalities)
        if not ineq:
            raise ValueError("need at least one inequality")
        eq = tuple((_check_hermitian(B, "equality matrix"), float(b)) for B, b in self.equalities)
        for a in ineq + tuple(B for B, _ in eq):
            if a.shape != (self.n, self.n):
                raise ValueError(f"coefficient of shape {a.shape} does not match n={self.n}")
        if self.diag_value is not None and not self.diag_value > 0:
            raise ValueError("diagonal value must be positive")
        object.__setattr__(self, "inequalities", ineq)
        object.__setattr__(self, "equalities", eq)


@dataclass
class SdpSolution:
    """Solver output.

    ``t`` is recomputed from the returned ``X`` as ``min_i Tr(A_i X)``, so it
    is always attained exactly by ``X``. ``max_violation`` is the largest
    relative residual of the equality and diagonal constraints. ``history``
    holds one ``(primal objective, dual objective, mu)`` triple per iteration
    in the original scaling.
    """

    X: np.ndarray
    t: float
    status: str
    max_violation: float = 0.0
    min_eig: float = 0.0
    iterations: int = 0
    history: list = field(default_factory=list)

    @property
    def optimal(self):
        return self.status == OPTIMAL


def _hermitian_factors(a, rtol=1e-13):
    """Real factors ``(vectors, weights)`` of ``real_embed(a) / 2``."""
    lam, vecs = np.linalg.eigh(a)
    scale = np.max(np.abs(lam), initial=0.0)
    keep = np.abs(lam) > rtol * scale if scale > 0 else np.zeros(lam.shape, bool)
    lam, vecs = lam[keep], vecs[:, keep]
    va = np.vstack([vecs.real, vecs.imag])
    vb = np.vstack([-vecs.imag, vecs.real])
    return np.hstack([va, vb]), np.concatenate([lam, lam]) / 2


class _Operator:
    """Linear map ``X -> [<A_i, X>]_i`` stored as weighted rank-1 factors."""

    def __init__(self, N, rows):
        # rows: list of (vectors (N, r), weights (r,)) per constraint
        self.m = len(rows)
        vecs = [v for v, _ in rows]
        self.U = np.hstack(vecs) if vecs else np.zeros((N, 0))
        self.w = np.concatenate([w for _, w in rows]) if rows else np.zeros(0)
        self.owner = np.concatenate([np.full(v.shape[1], i) for i, (v, _) in enumerate(rows)]).astype(int)
        self.C = np.zeros((self.U.shape[1], self.m))
        self.C[np.arange(self.U.shape[1]), self.owner] = 1.0

    def apply(self, V):
        q = np.einsum("ir,ir->r", self.U, V @ self.U)
        return np.bincount(self.owner, weights=self.w * q, minlength=self.m)

    def adjoint(self, y):
        coef = self.w * y[self.owner]
        return (self.U * coef) @ self.U.T

    def schur(self, X, Zinv):
        gx = self.U.T @ X @ self.U
        gz = self.U.T @ Zinv @ self.U
        core = np.outer(self.w, self.w) * gx * gz
        return self.C.T @ core @ self.C


def _max_step(X, dX):
    """Largest ``a`` in (0, inf] with ``X + a dX`` PSD, for PD ``X``."""
    L = np.linalg.cholesky(X)
    Li = np.linalg.inv(L)
    lam = np.linalg.eigvalsh(Li @ dX @ Li.T)
    return np.inf if lam[0] >= 0 else -1.0 / lam[0]


def _max_step_lp(x, dx):
    neg = dx < 0
    return np.min(-x[neg] / dx[neg]) if np.any(neg) else np.inf


def _sym(a):
    return 0.5 * (a + a.T)


def _solve_spd(M, rhs):
    try:
        L = np.linalg.cholesky(M)
    except np.linalg.LinAlgError:
        return np.linalg.lstsq(M, rhs, rcond=None)[0]
    return np.linalg.solve(L.T, np.linalg.solve(L, rhs))


def solve_maxmin_sdp(p, tol=1e-6, max_iters=200):
    """Solve a :class:`SdpProblem`.

    Parameters
    ----------
    p : SdpProblem
    tol : float
        Relative tolerance on the duality gap and on primal/dual residuals.
    max_iters : int

    Returns
    -------
    SdpSolution
        ``status`` is ``"optimal"`` on convergence, ``"infeasible"`` when the
        constraints admit no PSD solution, and ``"max-iterations"`` (with the
        last iterate) when the cap is hit.
    """
    n, N = p.n, 2 * p.n
    K = len(p.inequalities)

    eq_rows, eq_rhs = [], []
    for B, b in p.equalities:
        eq_rows.append(_hermitian_factors(B))
        eq_rhs.append(b)
    if p.diag_value is not None:
        eye = np.eye(N)
        for i in range(n):
            eq_rows.append((eye[:, [i, n + i]], np.array([0.5, 0.5])))
            eq_rhs.append(p.diag_value)
    eq_rhs = np.array(eq_rhs, dtype=float)

    # presolve: an empty equality row can only be met with a zero right-hand side
    for (v, w), b in zip(eq_rows, eq_rhs):
        if v.shape[1] == 0 and b != 0:
            return SdpSolution(np.zeros((n, n), complex), -np.inf, INFEASIBLE, np.inf, 0.0)

    # scale X = zeta * X' so the equalities hold roughly at X' = I
    traces = np.array([np.sum(w * np.sum(v * v, axis=0)) for v, w in eq_rows])
    ok = (traces > 0) & (eq_rhs > 0)
    zeta = float(np.exp(np.mean(np.log(eq_rhs[ok] / traces[ok])))) if np.any(ok) else 1.0

    ineq_rows = [_hermitian_factors(a) for a in p.inequalities]
    ineq_tr = np.array([np.sum(w * np.sum(v * v, axis=0)) for v, w in ineq_rows])
    ineq_nrm = np.array([np.linalg.norm(a) for a in p.inequalities])
    indefinite = any(np.any(w < 0) for _, w in ineq_rows)
    # row scale for inequalities and the scale of t
    kappa = np.where(ineq_tr > 0, ineq_tr, ineq_nrm) * zeta
    kappa = np.where(kappa > 0, kappa, 1.0)
    pos = kappa[ineq_tr > 0]
    tau = float(np.exp(np.mean(np.log(pos)))) if pos.size else 1.0

    rows = [(v, w * zeta / k) for (v, w), k in zip(ineq_rows, kappa)]
    b_scale = np.where(eq_rhs != 0, np.abs(eq_rhs), 1.0)
    rows += [(v, w * zeta / s) for (v, w), s in zip(eq_rows, b_scale)]
    op = _Operator(N, rows)
    m = op.m
    b = np.concatenate([np.zeros(K), eq_rhs / b_scale])

    # LP block: [t+, (t-), s_1..s_K]
    n_t = 2 if indefinite else 1
    nl = n_t + K
    Al = np.zeros((m, nl))
    Al[:K, 0] = -tau / kappa
    if indefinite:
        Al[:K, 1] = tau / kappa
    Al[np.arange(K), n_t + np.arange(K)] = -1.0
    c = np.zeros(nl)
    c[0] = -1.0
    if indefinite:
        c[1] = 1.0

    X = np.eye(N)
    Z = np.eye(N)
    x = np.ones(nl)
    z = np.ones(nl)
    y = np.zeros(m)
    nb = 1.0 + np.linalg.norm(b)
    nc = 1.0 + np.linalg.norm(c)

    history = []
    status = MAX_ITERATIONS
    it = 0
    for it in range(1, max_iters + 1):
        rp = b - op.apply(X) - Al @ x
        Rd = -op.adjoint(y) - Z
        rd = c - Al.T @ y - z
        gap = np.sum(X * Z) + x @ z
        mu = gap / (N + nl)
        pobj = c @ x
        dobj = b @ y
        history.append((tau * (x[0] - (x[1] if indefinite else 0.0)), -tau * dobj, float(mu)))

        pinf = np.linalg.norm(rp) / nb
        dinf = (np.linalg.norm(Rd) + np.linalg.norm(rd)) / nc
        rgap = abs(pobj - dobj) / (1.0 + abs(pobj) + abs(dobj))
        if pinf < tol and dinf < tol and rgap < tol:
            status = OPTIMAL
            break
        if dobj > _DIVERGENCE * (1.0 + abs(pobj)) and dinf < 1e-3:
            status = INFEASIBLE
            break

        Zinv = np.linalg.inv(Z)
        Zinv = _sym(Zinv)
        M = op.schur(X, Zinv) + (Al * (x / z)) @ Al.T
        M = _sym(M)
        XRdZ = X @ Rd @ Zinv

        def direction(sig_mu, corr_psd, corr_lp):
            rhs = (rp - op.apply(sig_mu * Zinv - X - corr_psd) + op.apply(XRdZ)
                   - Al @ (sig_mu / z - x - corr_lp) + Al @ (x / z * rd))
            dy = _solve_spd(M, rhs)
            dZ = Rd - op.adjoint(dy)
            dz = rd - Al.T @ dy
            dX = _sym(sig_mu * Zinv - X - corr_psd - X @ dZ @ Zinv)
            dx = sig_mu / z - x - corr_lp - x / z * dz
            return dX, dx, dy, dZ, dz

        def steps(dX, dx, dZ, dz):
            ap = min(_max_step(X, dX), _max_step_lp(x, dx))
            ad = min(_max_step(Z, dZ), _max_step_lp(z, dz))
            return ap, ad

        # predictor
        dX, dx, dy, dZ, dz = direction(0.0, 0.0, 0.0)
        ap, ad = steps(dX, dx, dZ, dz)
        ap, ad = min(1.0, ap), min(1.0, ad)
        mu_aff = (np.sum((X + ap * dX) * (Z + ad * dZ)) + (x + ap * dx) @ (z + ad * dz)) / (N + nl)
        sigma = min(1.0, (mu_aff / mu) ** 3)
        # corrector
        dX, dx, dy, dZ, dz = direction(sigma * mu, dX @ dZ @ Zinv, dx * dz / z)
        ap, ad = steps(dX, dx, dZ, dz)
        ap = min(1.0, _STEP_FRACTION * ap)
        ad = min(1.0, _STEP_FRACTION * ad)
        X = _sym(X + ap * dX)
        x = x + ap * dx
        y = y + ad * dy
        Z = _sym(Z + ad * dZ)
        z = z + ad * dz

    Xc = zeta * _complex_from_embedding(X, n)
    return _finish(p, Xc, status, it, history)


def _finish(p, X, status, iterations, history):
    if p.diag_value is not None:
        d = np.real(np.diag(X))
        if np.all(d > 0):
            s = np.sqrt(p.diag_value / d)
            X = s[:, None] * X * s[None, :]
    elif len(p.equalities) == 1:
        B, b = p.equalities[0]
        cur = np.real(np.trace(B @ X))
        if cur > 0 and b > 0:
            X = X * (b / cur)
    X = 0.5 * (X + X.conj().T)
    t = min(float(np.real(np.trace(a @ X))) for a in p.inequalities)
    viol = 0.0
    for B, b in p.equalities:
        viol = max(viol, abs(np.real(np.trace(B @ X)) - b) / max(1.0, abs(b)))
    if p.diag_value is not None:
        viol = max(viol, float(np.max(np.abs(np.diag(X) - p.diag_value))) / p.diag_value)
    min_eig = float(np.linalg.eigvalsh(X)[0])
    return SdpSolution(X=X, t=t, status=status, max_violation=viol, min_eig=min_eig,
                       iterations=iterations, history=history)
