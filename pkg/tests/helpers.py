"""Shared construction helpers for the test suite."""

import numpy as np

from gloria import (
    NoiseSpec,
    SchattenParams,
    build_problem,
    build_spatial_response,
    build_spectral_response,
    degrade,
    gen_scene,
    grid_layout,
    random_rect_layout,
)


def random_box_matrix(rng, m, l):
    return rng.uniform(size=(m, l))


def make_desk_problem(
    seed=0,
    bands=20,
    width=16,
    height=16,
    patch_rows=2,
    patch_cols=2,
    ms_bands=4,
    factor=2,
    kernel_size=5,
    variance=1.7**2,
    snr_db=25.0,
    n_endmembers=3,
    ev_magnitude=0.1,
    gamma=0.4,
    p=0.5,
    tau=1.0,
    gamma_global=None,
):
    """A small but structurally complete fusion instance."""
    gen_layout = random_rect_layout(width, height, 4, seed)
    x_true, _ = gen_scene(
        bands, width, height, n_endmembers, gen_layout, seed, ev_magnitude=ev_magnitude
    )
    f = build_spectral_response(bands, ms_bands)
    g = build_spatial_response(
        width, height, kernel_size=kernel_size, variance=variance, factor=factor
    )
    y_m, y_h = degrade(x_true, f, g, NoiseSpec(snr_db, snr_db, seed))
    layout = grid_layout(width, height, patch_rows, patch_cols)
    problem = build_problem(
        y_m, y_h, f, g, layout, p=p, tau=tau, gamma=gamma, gamma_global=gamma_global
    )
    return problem, x_true


def naive_objective(x_patch, problem):
    """Objective recomputed from first principles (dense ops, SVD)."""
    f = problem.f
    g_dense = problem.g.toarray()
    perm = problem.layout.permutation
    y_m_p = problem.y_m[:, perm]
    g_p = g_dense[perm, :]
    val = 0.5 * np.linalg.norm(y_m_p - f @ x_patch) ** 2
    val += 0.5 * np.linalg.norm(problem.y_h - x_patch @ g_p) ** 2
    params = problem.params
    blocks = [x_patch] + [
        x_patch[:, problem.layout.patch_slice(i)]
        for i in range(problem.layout.n_patches)
    ]
    for gamma_i, block in zip(problem.gammas, blocks):
        sv = np.linalg.svd(block, compute_uv=False)
        terms = np.concatenate([sv**2, np.zeros(max(0, block.shape[0] - sv.size))])
        val += gamma_i * np.sum((terms + params.tau) ** (params.p / 2.0))
    return float(val)


def schatten_phi_oracle(x, p, tau):
    """phi recomputed through singular values instead of Gram eigenvalues."""
    sv = np.linalg.svd(x, compute_uv=False)
    terms = np.concatenate([sv**2, np.zeros(max(0, x.shape[0] - sv.size))])
    return float(np.sum((terms + tau) ** (p / 2.0)))
