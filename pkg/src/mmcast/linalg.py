"""Dense complex linear algebra used by the precoding solvers.

Matrices are plain ``numpy`` complex arrays. Column vectors are 1-D arrays
unless an operation explicitly needs a 2-D shape. Nothing here mutates its
inputs.
"""

import numpy as np

__all__ = [
    "MatrixError", "ShapeError", "SingularMatrixError", "NotPSDError",
    "ConvergenceError", "hermitian", "matmul", "inverse", "cholesky_psd",
    "principal_eigenpair", "left_pseudo_inverse", "trace", "frobenius_norm",
    "kron", "vec", "unvec",
]

# Reciprocal condition number below which a matrix is treated as singular.
RCOND_MIN = 1e-12


class MatrixError(ValueError):
    """Base class for linear-algebra contract violations."""


class ShapeError(MatrixError):
    pass


class SingularMatrixError(MatrixError):
    pass


class NotPSDError(MatrixError):
    pass


class ConvergenceError(RuntimeError):
    pass


def hermitian(a):
    """Conjugate transpose."""
    return np.conj(np.asarray(a)).T


def matmul(a, b):
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape[-1] != b.shape[0]:
        raise ShapeError(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


def _require_square(a, what):
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ShapeError(f"{what} needs a square matrix, got shape {a.shape}")


def inverse(a):
    """Inverse of a square, well-conditioned matrix.

    LU with partial pivoting (LAPACK ``getrf``/``getri``). Raises
    :class:`SingularMatrixError` when the reciprocal 2-norm condition
    number is at or below ``RCOND_MIN``.
    """
    a = np.asarray(a)
    _require_square(a, "inverse")
    if not np.all(np.isfinite(a)):
        raise MatrixError("matrix has non-finite entries")
    s = np.linalg.svd(a, compute_uv=False)
    if s[0] == 0.0 or s[-1] / s[0] <= RCOND_MIN:
        raise SingularMatrixError("matrix is singular or ill-conditioned")
    return np.linalg.inv(a)


def _check_hermitian(a, rtol=1e-10):
    scale = max(1.0, float(np.linalg.norm(a)))
    if np.linalg.norm(a - hermitian(a)) > rtol * scale:
        raise MatrixError("matrix is not Hermitian")


def cholesky_psd(a):
    """Factor a Hermitian PSD matrix as ``a = Q.T @ Q.conj()``.

    The layout follows the convention in which column ``n`` of ``Q`` is the
    vector attached to row/column ``n`` of ``a``, i.e.
    ``a[i, j] = q_i^T conj(q_j)``. For a positive definite input this is the
    transpose of the lower Cholesky factor (``Q = L.T`` with ``a = L L^H``).
    If the Cholesky factorization breaks down, the eigen square root is used
    instead: row ``i`` of ``Q`` is ``sqrt(lambda_i) v_i^T`` with eigenvalues in
    descending order and negative round-off clipped to zero.

    Raises
    ------
    NotPSDError
        If the smallest eigenvalue is below ``-1e-8 * trace(a)``.
    """
    a = np.asarray(a, dtype=complex)
    _require_square(a, "cholesky_psd")
    _check_hermitian(a)
    a = 0.5 * (a + hermitian(a))
    lam, vecs = np.linalg.eigh(a)
    tr = float(np.real(np.trace(a)))
    if lam[0] < -1e-8 * max(tr, 0.0):
        raise NotPSDError(f"matrix is indefinite (min eigenvalue {lam[0]:.3e})")
    try:
        low = np.linalg.cholesky(a)
    except np.linalg.LinAlgError:
        pass
    else:
        if np.all(np.isfinite(low)):
            return low.T
    lam = np.clip(lam[::-1], 0.0, None)
    vecs = vecs[:, ::-1]
    return (vecs * np.sqrt(lam)).T


def _fix_phase(v):
    # Largest-magnitude entry (first on ties) made real and nonnegative.
    idx = int(np.argmax(np.abs(v)))
    if v[idx] != 0:
        mag = abs(v[idx])
        v = v * (np.conj(v[idx]) / mag)
        v[idx] = mag
    return v


_START_SEED = 0x5EED


def principal_eigenpair(a, tol=1e-10, max_iter=200_000):
    """Largest eigenvalue and unit eigenvector of a Hermitian PSD matrix.

    Plain power iteration from a fixed pseudo-random start vector, so the
    result is reproducible. The returned vector is phase-normalized so that
    its largest-magnitude entry is real and nonnegative.

    Parameters
    ----------
    a : (n, n) array_like
        Hermitian positive semidefinite matrix.
    tol : float
        Stop once ``||a v - lam v|| <= tol * lam``.
    max_iter : int
        Iteration cap; :class:`ConvergenceError` is raised beyond it.

    Returns
    -------
    lam : float
    v : (n,) complex ndarray
    """
    a = np.asarray(a, dtype=complex)
    _require_square(a, "principal_eigenpair")
    _check_hermitian(a)
    n = a.shape[0]
    rng = np.random.default_rng(_START_SEED)
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(max_iter):
        av = a @ v
        lam = float(np.real(np.vdot(v, av)))
        if np.linalg.norm(av - lam * v) <= tol * abs(lam):
            return lam, _fix_phase(v)
        nrm = np.linalg.norm(av)
        if nrm == 0.0:
            # v lies in the null space; only possible for a = 0 on PSD input
            if np.linalg.norm(a) == 0.0:
                return 0.0, _fix_phase(v)
            raise ConvergenceError("power iteration collapsed to zero")
        v = av / nrm
    raise ConvergenceError(f"power iteration did not converge in {max_iter} steps")


def left_pseudo_inverse(f):
    """``(F^H F)^{-1} F^H`` for a tall matrix of full column rank."""
    f = np.asarray(f)
    if f.ndim != 2 or f.shape[0] < f.shape[1]:
        raise ShapeError(f"left pseudo-inverse needs a tall matrix, got {f.shape}")
    fh = hermitian(f)
    return inverse(fh @ f) @ fh


def trace(a):
    return np.trace(np.asarray(a))


def frobenius_norm(a):
    return float(np.linalg.norm(np.asarray(a)))


def kron(a, b):
    return np.kron(np.asarray(a), np.asarray(b))


def vec(a):
    """Column-stacking vectorization."""
    return np.asarray(a).reshape(-1, order="F")


def unvec(v, rows, cols):
    v = np.asarray(v)
    if v.size != rows * cols:
        raise ShapeError(f"cannot reshape {v.size} entries to {rows}x{cols}")
    return v.reshape((rows, cols), order="F")
