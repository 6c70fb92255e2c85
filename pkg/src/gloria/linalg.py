"""Dense and sparse linear-algebra kernels used by the solvers.

Eigen/SVD work is delegated to LAPACK through numpy. ``lambda_max``
decomposes dense symmetric matrices directly (exact, and cheaper than
iterating for the band-by-band matrices the solvers build) and falls
back to a deterministic power iteration for sparse or matrix-free
operators, where forming a dense copy would be wasteful.
"""

import numpy as np
import scipy.sparse as sp

from .exceptions import ConvergenceError
from .validation import check_matrix, check_symmetric

__all__ = [
    "sym_eig",
    "spd_power",
    "svd",
    "nuclear_norm",
    "lambda_max",
    "right_multiply",
    "right_multiply_t",
]


def sym_eig(a):
    """Eigendecomposition of a symmetric matrix, eigenvalues descending.

    Parameters
    ----------
    a : (n, n) array_like
        Symmetric matrix (checked to relative tolerance 1e-10).

    Returns
    -------
    evals : (n,) ndarray
        Eigenvalues in descending order.
    evecs : (n, n) ndarray
        Orthonormal eigenvectors, ``evecs[:, i]`` matching ``evals[i]``.
    """
    arr = check_symmetric(a, "a")
    evals, evecs = np.linalg.eigh(arr)
    return evals[::-1].copy(), evecs[:, ::-1].copy()


def spd_power(a, exponent):
    """Matrix power ``a**exponent`` of a symmetric positive-definite matrix.

    Computed through the eigendecomposition, so ``exponent`` may be any
    real number (the solvers use negative fractional powers).

    Raises
    ------
    numpy.linalg.LinAlgError
        If an eigenvalue is not positive, or falls below
        ``1e-14 * lambda_max`` (numerically singular).
    """
    evals, evecs = sym_eig(a)
    lam_top = evals[0]
    if lam_top <= 0 or evals[-1] <= 1e-14 * lam_top:
        raise np.linalg.LinAlgError(
            "matrix is singular or indefinite: eigenvalue "
            f"{evals[-1]:.3e} below 1e-14 * {lam_top:.3e}"
        )
    out = (evecs * evals**exponent) @ evecs.T
    return 0.5 * (out + out.T)


def svd(a):
    """Thin singular value decomposition ``(u, s, vt)``, s descending."""
    return np.linalg.svd(check_matrix(a, "a"), full_matrices=False)


def nuclear_norm(a):
    """Sum of the singular values of ``a``."""
    return float(np.sum(np.linalg.svd(check_matrix(a, "a"), compute_uv=False)))


def _as_matvec(a, n=None):
    if callable(a) and not isinstance(a, np.ndarray):
        if n is None:
            raise ValueError("n is required when a is a callable operator")
        return a, int(n)
    if sp.issparse(a):
        if a.shape[0] != a.shape[1]:
            raise ValueError(f"operator must be square, got shape {a.shape}")
        return (lambda v: a @ v), a.shape[0]
    arr = check_symmetric(a, "a")
    return (lambda v: arr @ v), arr.shape[0]


def lambda_max(a, n=None, v0=None, tol=1e-10, max_iter=10000, return_vector=False):
    """Largest eigenvalue of a symmetric PSD operator.

    Dense matrices are decomposed exactly with ``eigh``; sparse
    matrices and callables go through a power iteration, which only
    needs matvecs. Power iteration can stall when the leading
    eigenvalues cluster, and the dense matrices seen here are small,
    so the direct route is both the fast and the robust one.

    Parameters
    ----------
    a : ndarray, sparse matrix, or callable
        The operator. A callable is treated as a matvec ``v -> a(v)``
        and needs ``n``.
    n : int, optional
        Dimension of the operator when ``a`` is callable.
    v0 : (n,) ndarray, optional
        Warm-start vector for the power iteration. Defaults to the
        all-ones direction; a fixed perturbed start is tried if that
        lies in the null space. Ignored on the dense path.
    tol : float
        Relative stagnation tolerance on the Rayleigh quotient.
    max_iter : int
        Power-iteration cap; exceeding it raises ``ConvergenceError``.
    return_vector : bool
        Also return the final eigenvector estimate (solvers keep it to
        warm-start the next call).

    Returns
    -------
    float, or (float, ndarray) when ``return_vector`` is set.
    """
    if not callable(a) and not sp.issparse(a):
        arr = check_symmetric(a, "a")
        evals, evecs = np.linalg.eigh(arr)
        lam = max(float(evals[-1]), 0.0)
        v = evecs[:, -1].copy()
        return (lam, v) if return_vector else lam

    matvec, dim = _as_matvec(a, n)
    starts = []
    if v0 is not None:
        v0 = np.asarray(v0, dtype=np.float64).ravel()
        if v0.shape[0] != dim:
            raise ValueError(f"v0 has length {v0.shape[0]}, expected {dim}")
        if np.linalg.norm(v0) > 0:
            starts.append(v0)
    starts.append(np.ones(dim))
    starts.append(np.ones(dim) + 0.1 * np.cos(np.arange(dim)))

    for start in starts:
        v = start / np.linalg.norm(start)
        lam = float(v @ matvec(v))
        for _ in range(max_iter):
            w = matvec(v)
            norm_w = np.linalg.norm(w)
            if norm_w == 0.0:
                lam = 0.0
                break
            v = w / norm_w
            lam_new = float(v @ matvec(v))
            if abs(lam_new - lam) <= tol * max(abs(lam_new), 1e-300):
                lam = lam_new
                break
            lam = lam_new
        else:
            raise ConvergenceError(
                f"power iteration did not converge in {max_iter} iterations"
            )
        if lam > 0.0:
            break

    lam = max(lam, 0.0)
    return (lam, v) if return_vector else lam


def right_multiply(x, g):
    """Dense-times-sparse product ``x @ g`` with an explicit shape check."""
    if x.shape[1] != g.shape[0]:
        raise ValueError(f"shape mismatch: {x.shape} @ {g.shape}")
    return x @ g


def right_multiply_t(x, g):
    """Product with the transposed sparse factor, ``x @ g.T``."""
    if x.shape[1] != g.shape[1]:
        raise ValueError(f"shape mismatch: {x.shape} @ {g.T.shape}")
    return x @ g.T
