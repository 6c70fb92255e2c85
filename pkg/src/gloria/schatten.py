"""Smoothed Schatten-p rank surrogate and its variational majoriser.

For an M x L matrix X and parameters 0 < p <= 1, tau > 0, the
surrogate is

    phi(X) = trace((X X^T + tau I)^{p/2})
           = sum_i (sigma_i(X)^2 + tau)^{p/2},

counting M terms (missing singular values contribute tau^{p/2} when
L < M). It admits the variational form

    phi(X) = min_{W > 0} psi(X, W),
    psi(X, W) = (p/2) trace(W (X X^T + tau I))
                + (1 - p/2) trace(W^{p/(p-2)}),

whose minimiser W*(X) = (X X^T + tau I)^{p/2 - 1} supplies the
quadratic majoriser used by the solvers. Shrinking tau tightens the
surrogate toward the nuclear norm at p = 1 and toward the rank as both
parameters go to 0.
"""

from dataclasses import dataclass

import numpy as np

from .validation import check_matrix, check_symmetric

__all__ = [
    "SchattenParams",
    "WeightMatrix",
    "phi",
    "psi",
    "weight",
    "approx_rank",
    "rank_table",
    "RankTableRow",
]


@dataclass(frozen=True)
class SchattenParams:
    """Exponent p in (0, 1] and smoothing offset tau > 0."""

    p: float = 0.5
    tau: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.p <= 1.0:
            raise ValueError(f"p must be in (0, 1], got {self.p}")
        if not self.tau > 0.0:
            raise ValueError(f"tau must be positive, got {self.tau}")


@dataclass
class WeightMatrix:
    """Minimising weight W*(X) together with eigenvalue by-products.

    ``lam_max`` is the largest eigenvalue of W, which equals
    ``(lambda_min(X X^T) + tau)^{p/2 - 1}`` because the exponent is
    negative; the solvers use it in their step-size rule.
    """

    w: np.ndarray
    lam_max: float


def _shifted_sq_singular_values(x, params):
    """Eigenvalues of X X^T + tau I, descending, via the smaller Gram side."""
    m, n = x.shape
    gram = x @ x.T if m <= n else x.T @ x
    evals = np.linalg.eigvalsh(gram)[::-1]
    evals = np.clip(evals, 0.0, None) + params.tau
    if m > n:
        evals = np.concatenate([evals, np.full(m - n, params.tau)])
    return evals


def phi(x, params):
    """Smoothed Schatten-p value of ``x``.

    Always counts ``x.shape[0]`` terms, so ``phi >= M * tau**(p/2)``
    with equality exactly at X = 0.
    """
    x = check_matrix(x, "x")
    evals = _shifted_sq_singular_values(x, params)
    return float(np.sum(evals ** (params.p / 2.0)))


def psi(x, w, params):
    """Variational upper bound on :func:`phi` for a fixed weight ``w``.

    ``w`` must be symmetric positive-definite. Equality with
    ``phi(x, params)`` holds at ``w = weight(x, params).w``.
    """
    x = check_matrix(x, "x")
    w = check_symmetric(w, "w")
    if w.shape[0] != x.shape[0]:
        raise ValueError(
            f"w has shape {w.shape}, expected ({x.shape[0]}, {x.shape[0]})"
        )
    w_evals = np.linalg.eigvalsh(w)
    if w_evals[0] <= 0:
        raise ValueError("w must be positive definite")
    p = params.p
    xw = x.T @ w
    quad = float(np.vdot(xw.T, x)) + params.tau * float(np.trace(w))
    return 0.5 * p * quad + 0.5 * (2.0 - p) * float(np.sum(w_evals ** (p / (p - 2.0))))


def weight(x, params):
    """Minimising weight ``W*(X) = (X X^T + tau I)^{p/2 - 1}``."""
    x = check_matrix(x, "x")
    evals, evecs = np.linalg.eigh(x @ x.T)
    evals = np.clip(evals, 0.0, None) + params.tau
    powered = evals ** (params.p / 2.0 - 1.0)
    w = (evecs * powered) @ evecs.T
    return WeightMatrix(w=0.5 * (w + w.T), lam_max=float(powered[0]))


def approx_rank(x, energy=0.9999):
    """Smallest r whose leading singular values hold ``energy`` of the
    squared spectrum.

    The zero matrix has approximate rank 0 by convention.
    """
    if not 0.0 < energy <= 1.0:
        raise ValueError(f"energy must be in (0, 1], got {energy}")
    x = check_matrix(x, "x")
    sq = np.linalg.svd(x, compute_uv=False) ** 2
    total = float(sq.sum())
    if total == 0.0:
        return 0
    frac = np.cumsum(sq) / total
    return int(np.searchsorted(frac, energy - 1e-15) + 1)


@dataclass
class RankTableRow:
    """One grid size of a patchwise approximate-rank summary."""

    grid: int
    patch_pixels: int
    mean_rank: float
    std_rank: float
    global_rank: int


def rank_table(image, grid_sizes, energy=0.9999):
    """Patchwise approximate ranks of an image at several grid sizes.

    For each g in ``grid_sizes`` the image is split into a g x g grid
    of near-equal patches and the per-patch approximate ranks are
    summarised; the whole-image rank is repeated in every row.
    """
    from .patches import grid_layout

    data = image.data
    width = image.width
    height = image.height
    global_rank = approx_rank(data, energy)
    rows = []
    for g in grid_sizes:
        layout = grid_layout(width, height, g, g)
        ordered = layout.to_patch_order(data)
        ranks = [
            approx_rank(ordered[:, layout.patch_slice(i)], energy)
            for i in range(layout.n_patches)
        ]
        ranks = np.asarray(ranks, dtype=np.float64)
        std = float(ranks.std(ddof=1)) if ranks.size > 1 else 0.0
        rows.append(
            RankTableRow(
                grid=int(g),
                patch_pixels=int(round(layout.sizes.mean())),
                mean_rank=float(ranks.mean()),
                std_rank=std,
                global_rank=global_rank,
            )
        )
    return rows
