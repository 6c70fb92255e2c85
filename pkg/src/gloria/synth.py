"""Synthetic scene generation with per-patch endmember variability.

Scenes follow a patchwise linear mixing model: every patch gets its
own perturbed copy of a shared endmember set and mixes a small active
subset of them with simplex abundance maps. Perturbations are
multiplicative smooth modulations drawn from a two-function dictionary
per endmember, so the collection of all patch variants spans at most
three directions per endmember. That keeps whole-image spectra
approximately low rank while individual patches have rank bounded by
their active-set size.
"""

import numpy as np
from scipy.ndimage import gaussian_filter

from .exceptions import GenerationError
from .operators import HSImage

__all__ = [
    "gen_endmembers",
    "apply_ev",
    "gen_abundances",
    "gen_scene",
]


def _stream(*keys):
    """Deterministic generator keyed by a tuple of integers."""
    return np.random.default_rng([int(k) for k in keys])


def _smooth_profile(rng, n_bands, n_bumps, signed=False):
    t = np.linspace(0.0, 1.0, n_bands)
    centres = rng.uniform(0.0, 1.0, size=n_bumps)
    widths = rng.uniform(0.06, 0.28, size=n_bumps)
    amps = rng.uniform(0.3, 1.0, size=n_bumps)
    if signed:
        amps *= rng.choice([-1.0, 1.0], size=n_bumps)
    out = np.zeros(n_bands)
    for c, w, a in zip(centres, widths, amps):
        out += a * np.exp(-0.5 * ((t - c) / w) ** 2)
    return out


def gen_endmembers(n_bands, count, seed, max_cosine=0.995, max_retries=200):
    """Draw ``count`` smooth spectra in [0, 1] as columns of an (M, N) matrix.

    Each spectrum is a sum of 3 to 6 Gaussian bumps, peak-normalised
    and scaled below 1 to leave headroom for multiplicative
    variability. Candidates too collinear with an accepted spectrum
    (cosine above ``max_cosine``) are redrawn; exhausting
    ``max_retries`` raises ``GenerationError``.
    """
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    if n_bands < 2:
        raise ValueError(f"n_bands must be >= 2, got {n_bands}")
    rng = _stream(seed, 3) if np.isscalar(seed) else np.random.default_rng(seed)
    cols = []
    retries = 0
    while len(cols) < count:
        s = _smooth_profile(rng, n_bands, int(rng.integers(3, 7)))
        s = s / s.max() * rng.uniform(0.55, 0.85)
        ok = all(
            float(s @ c) / (np.linalg.norm(s) * np.linalg.norm(c)) <= max_cosine
            for c in cols
        )
        if ok:
            cols.append(s)
        else:
            retries += 1
            if retries > max_retries:
                raise GenerationError(
                    f"could not draw {count} spectra with pairwise cosine "
                    f"<= {max_cosine} in {max_retries} retries"
                )
    return np.stack(cols, axis=1)


def apply_ev(endmembers, n_patches, magnitude, seed):
    """Per-patch endmember variants under smooth multiplicative wiggle.

    Every endmember owns two fixed smooth modulation profiles; each
    patch scales that endmember by ``1 + magnitude * mix`` where mix is
    a random unit-bounded combination of the two profiles. Output has
    shape (n_patches, M, N), clipped to [0, 1]. Magnitude 0 returns
    identical copies of the base set.
    """
    a = np.asarray(endmembers, dtype=np.float64)
    if a.ndim != 2:
        raise ValueError(f"endmembers must be 2-d, got shape {a.shape}")
    if magnitude < 0:
        raise ValueError(f"magnitude must be non-negative, got {magnitude}")
    m, n = a.shape
    basis_rng = _stream(seed, 0)
    basis = np.empty((n, 2, m))
    for j in range(n):
        for b in range(2):
            prof = _smooth_profile(basis_rng, m, int(basis_rng.integers(2, 4)), signed=True)
            basis[j, b] = prof / np.abs(prof).max()

    out = np.empty((n_patches, m, n))
    for i in range(n_patches):
        rng = _stream(seed, 1, i)
        coeff = rng.uniform(-1.0, 1.0, size=(n, 2))
        scale = np.maximum(np.abs(coeff).sum(axis=1), 1.0)
        for j in range(n):
            mix = (coeff[j, 0] * basis[j, 0] + coeff[j, 1] * basis[j, 1]) / scale[j]
            out[i, :, j] = np.clip(a[:, j] * (1.0 + magnitude * mix), 0.0, 1.0)
    return out


def gen_abundances(
    layout,
    n_endmembers,
    seed,
    active_range=None,
    alpha=1.0,
    smooth_sigma=1.0,
    active_sets=None,
):
    """Simplex abundance maps over a patch layout.

    Each patch activates a random subset of endmembers (size drawn
    uniformly from ``active_range``, default (1, N)) and fills it with
    Dirichlet(alpha) pixels, optionally smoothed over the patch
    rectangle with a 5-tap Gaussian window and renormalised. Rows of
    inactive endmembers are exactly zero.

    Returns
    -------
    s : (N, L) ndarray
        Raster-order abundances; every column sums to 1.
    active : list of list of int
        Active endmember indices per patch.
    """
    n = int(n_endmembers)
    lo, hi = active_range if active_range is not None else (1, n)
    if not 1 <= lo <= hi <= n:
        raise ValueError(f"invalid active_range {(lo, hi)} for {n} endmembers")
    if active_sets is not None and len(active_sets) != layout.n_patches:
        raise ValueError(
            f"need {layout.n_patches} active sets, got {len(active_sets)}"
        )

    s = np.zeros((n, layout.n_pixels))
    active = []
    for i, (r0, r1, c0, c1) in enumerate(layout.blocks):
        rng = _stream(seed, 2, i)
        if active_sets is not None:
            act = sorted(int(j) for j in active_sets[i])
            if not act or len(set(act)) != len(act) or act[0] < 0 or act[-1] >= n:
                raise ValueError(f"invalid active set {active_sets[i]} for patch {i}")
        else:
            size = int(rng.integers(lo, hi + 1))
            act = sorted(int(j) for j in rng.choice(n, size=size, replace=False))
        active.append(act)

        h_i, w_i = r1 - r0, c1 - c0
        maps = rng.dirichlet(np.full(len(act), alpha), size=h_i * w_i).T
        if smooth_sigma > 0:
            maps = maps.reshape(len(act), h_i, w_i)
            maps = np.stack(
                [
                    gaussian_filter(band, sigma=smooth_sigma, mode="nearest", truncate=2.0)
                    for band in maps
                ]
            ).reshape(len(act), h_i * w_i)
            maps /= maps.sum(axis=0, keepdims=True)
        idx = layout.permutation[layout.patch_slice(i)]
        s[np.asarray(act)[:, None], idx[None, :]] = maps
    return s, active


def gen_scene(
    n_bands,
    width,
    height,
    n_endmembers,
    layout,
    seed,
    ev_magnitude=0.1,
    active_range=None,
    alpha=1.0,
    smooth_sigma=1.0,
    active_sets=None,
):
    """Build a ground-truth image from the patchwise mixing model.

    Returns the reflectance HSImage plus a JSON-ready metadata
    dictionary recording the exact endmembers, per-patch active sets,
    layout and seeds, so a scene can be audited or regenerated.
    """
    if (layout.width, layout.height) != (width, height):
        raise ValueError(
            f"layout grid {layout.width}x{layout.height} does not match "
            f"requested {width}x{height}"
        )
    base = gen_endmembers(n_bands, n_endmembers, seed)
    variants = apply_ev(base, layout.n_patches, ev_magnitude, seed)
    s, active = gen_abundances(
        layout,
        n_endmembers,
        seed,
        active_range=active_range,
        alpha=alpha,
        smooth_sigma=smooth_sigma,
        active_sets=active_sets,
    )
    x = np.zeros((n_bands, layout.n_pixels))
    for i in range(layout.n_patches):
        idx = layout.permutation[layout.patch_slice(i)]
        x[:, idx] = variants[i] @ s[:, idx]
    meta = {
        "n_bands": int(n_bands),
        "width": int(width),
        "height": int(height),
        "n_endmembers": int(n_endmembers),
        "seed": int(seed),
        "ev_magnitude": float(ev_magnitude),
        "alpha": float(alpha),
        "smooth_sigma": float(smooth_sigma),
        "active_sets": [list(map(int, a)) for a in active],
        "layout": layout.to_dict(),
        "endmembers": base.tolist(),
    }
    return HSImage(x, width, height, reflectance=True), meta
