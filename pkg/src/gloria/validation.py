"""Input validation helpers.

Small checks used at the public entry points, in the spirit of
``sklearn.utils.validation``: normalise to float64 ndarrays, verify
shapes and finiteness, and fail with messages that name the offending
argument.
"""

import numpy as np
import scipy.sparse as sp


def check_matrix(a, name="array", *, ndim=2, dtype=np.float64):
    """Coerce ``a`` to a finite float ndarray with the given rank.

    Parameters
    ----------
    a : array_like
        Input to validate.
    name : str
        Name used in error messages.
    ndim : int
        Required number of dimensions.

    Returns
    -------
    numpy.ndarray
    """
    arr = np.asarray(a, dtype=dtype)
    if arr.ndim != ndim:
        raise ValueError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    if arr.size == 0:
        raise ValueError(f"{name} must be non-empty")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def check_square(a, name="array"):
    arr = check_matrix(a, name)
    if arr.shape[0] != arr.shape[1]:
        raise ValueError(f"{name} must be square, got shape {arr.shape}")
    return arr


def check_symmetric(a, name="array", tol=1e-10):
    """Validate symmetry up to ``tol`` relative to the matrix scale."""
    arr = check_square(a, name)
    scale = max(float(np.abs(arr).max()), 1e-300)
    if float(np.abs(arr - arr.T).max()) > tol * scale:
        raise ValueError(f"{name} is not symmetric within relative tolerance {tol}")
    return arr


def check_in_box(a, name="array", lo=0.0, hi=1.0):
    arr = check_matrix(a, name)
    if arr.min() < lo or arr.max() > hi:
        raise ValueError(f"{name} has entries outside [{lo}, {hi}]")
    return arr


def as_dense_operator(op, name="operator"):
    """Extract a dense ndarray from an operator object or array_like."""
    mat = getattr(op, "matrix", op)
    return check_matrix(mat, name)


def as_sparse_operator(op, name="operator"):
    """Extract a scipy CSC matrix from an operator object or array_like."""
    mat = getattr(op, "matrix", op)
    if sp.issparse(mat):
        return sp.csc_array(mat)
    arr = check_matrix(mat, name)
    return sp.csc_array(arr)


def check_positive(value, name, *, strict=True):
    v = float(value)
    if strict and not v > 0:
        raise ValueError(f"{name} must be positive, got {value}")
    if not strict and v < 0:
        raise ValueError(f"{name} must be non-negative, got {value}")
    return v
