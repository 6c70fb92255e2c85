"""Observation model: spectral response, spatial blur/decimation, noise.

The latent image is an M x L matrix X with one column per pixel
(raster order over the grid). A multispectral sensor sees
``Y_M = F @ X`` through a row-stochastic band-aggregation matrix F,
and a low-resolution hyperspectral sensor sees ``Y_H = X @ G`` through
a sparse column-stochastic blur-and-decimate matrix G. White Gaussian
noise is added at a prescribed SNR per observation.
"""

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .validation import check_matrix

__all__ = [
    "HSImage",
    "SpectralResponse",
    "SpatialResponse",
    "NoiseSpec",
    "build_spectral_response",
    "build_spatial_response",
    "degrade",
    "wald_simulate",
    "band_groups",
]


@dataclass
class HSImage:
    """A hyperspectral cube stored as a band-by-pixel matrix.

    ``data`` has shape (bands, width*height) with pixels in raster
    order: the column of pixel (row, col) is ``row * width + col``.
    """

    data: np.ndarray
    width: int
    height: int
    reflectance: bool = False

    def __post_init__(self):
        self.data = check_matrix(self.data, "data")
        self.width = int(self.width)
        self.height = int(self.height)
        if self.width * self.height != self.data.shape[1]:
            raise ValueError(
                f"{self.width}x{self.height} grid does not match "
                f"{self.data.shape[1]} pixel columns"
            )
        if self.reflectance and (self.data.min() < 0 or self.data.max() > 1):
            raise ValueError("reflectance image has entries outside [0, 1]")

    @property
    def n_bands(self):
        return self.data.shape[0]

    @property
    def n_pixels(self):
        return self.data.shape[1]

    def band(self, m):
        """Band ``m`` reshaped to the (height, width) pixel grid."""
        return self.data[m].reshape(self.height, self.width)


def band_groups(n_bands, n_groups):
    """Near-even contiguous partition of band indices into groups."""
    edges = [n_bands * i // n_groups for i in range(n_groups + 1)]
    return [np.arange(edges[i], edges[i + 1]) for i in range(n_groups)]


@dataclass
class SpectralResponse:
    """Row-stochastic spectral degradation F of shape (M_m, M)."""

    matrix: np.ndarray
    groups: list = field(default_factory=list)

    def __post_init__(self):
        self.matrix = check_matrix(self.matrix, "matrix")
        m_m, m = self.matrix.shape
        if not m_m < m:
            raise ValueError(f"need fewer output bands than input bands, got {m_m} >= {m}")
        if self.matrix.min() < 0:
            raise ValueError("spectral response has negative entries")
        row_sums = self.matrix.sum(axis=1)
        if not np.allclose(row_sums, 1.0, atol=1e-12):
            raise ValueError("spectral response rows must sum to 1")

    @property
    def n_output_bands(self):
        return self.matrix.shape[0]

    @property
    def n_input_bands(self):
        return self.matrix.shape[1]


def build_spectral_response(n_bands, n_output_bands, mode="boxcar", table=None):
    """Construct a row-stochastic band-aggregation matrix.

    Parameters
    ----------
    n_bands : int
        Number of input (hyperspectral) bands M.
    n_output_bands : int
        Number of output (multispectral) bands M_m, must be < M.
    mode : {"boxcar", "gaussian", "table"}
        "boxcar" averages near-even contiguous band groups;
        "gaussian" weights each group's neighbourhood with a Gaussian
        profile centred on the group; "table" row-normalises a user
        matrix passed as ``table``.
    table : (M_m, M) array_like, required for mode "table"
        Non-negative response table; rows are rescaled to sum to 1.
    """
    n_bands = int(n_bands)
    n_output_bands = int(n_output_bands)
    if not 1 <= n_output_bands < n_bands:
        raise ValueError(
            f"need 1 <= output bands < input bands, got {n_output_bands}, {n_bands}"
        )
    groups = band_groups(n_bands, n_output_bands)

    if mode == "boxcar":
        f = np.zeros((n_output_bands, n_bands))
        for i, g in enumerate(groups):
            f[i, g] = 1.0 / len(g)
    elif mode == "gaussian":
        f = np.zeros((n_output_bands, n_bands))
        idx = np.arange(n_bands)
        for i, g in enumerate(groups):
            centre = g.mean()
            sigma = max(len(g) / 2.0, 0.5)
            w = np.exp(-0.5 * ((idx - centre) / sigma) ** 2)
            f[i] = w / w.sum()
    elif mode == "table":
        if table is None:
            raise ValueError('mode "table" requires a response table')
        f = check_matrix(table, "table")
        if f.shape != (n_output_bands, n_bands):
            raise ValueError(
                f"table shape {f.shape} does not match ({n_output_bands}, {n_bands})"
            )
        if f.min() < 0:
            raise ValueError("response table has negative entries")
        sums = f.sum(axis=1)
        if np.any(sums <= 0):
            raise ValueError("response table has an all-zero row")
        f = f / sums[:, None]
    else:
        raise ValueError(f"unknown spectral response mode {mode!r}")

    return SpectralResponse(matrix=f, groups=[g.tolist() for g in groups])


@dataclass
class SpatialResponse:
    """Sparse column-stochastic blur-and-decimate operator G.

    Shape is (L, L_h): one column per low-resolution pixel, holding the
    (truncated, renormalised) Gaussian point-spread weights over the
    high-resolution grid.
    """

    matrix: sp.csc_array
    width: int
    height: int
    factor: int
    kernel_size: int
    variance: float

    def __post_init__(self):
        self.matrix = sp.csc_array(self.matrix)
        lw = -(-self.width // self.factor)
        lh = -(-self.height // self.factor)
        expected = (self.width * self.height, lw * lh)
        if self.matrix.shape != expected:
            raise ValueError(f"G has shape {self.matrix.shape}, expected {expected}")
        col_sums = np.asarray(self.matrix.sum(axis=0)).ravel()
        if not np.allclose(col_sums, 1.0, atol=1e-12):
            raise ValueError("spatial response columns must sum to 1")

    @property
    def low_width(self):
        return -(-self.width // self.factor)

    @property
    def low_height(self):
        return -(-self.height // self.factor)


def build_spatial_response(width, height, kernel_size=11, variance=1.7**2, factor=4):
    """Gaussian blur followed by decimation, as one sparse matrix.

    Low-resolution pixel (i, j) is centred on high-resolution pixel
    ``(factor*i + factor//2, factor*j + factor//2)`` (clamped to the
    grid on ragged edges). Its column holds the isotropic Gaussian
    kernel of the given variance on a ``kernel_size`` square window,
    truncated at the image boundary and renormalised to sum to 1.
    """
    width = int(width)
    height = int(height)
    factor = int(factor)
    kernel_size = int(kernel_size)
    if factor < 1 or kernel_size < 1 or kernel_size % 2 == 0:
        raise ValueError(
            f"factor must be >= 1 and kernel_size odd and positive, "
            f"got factor={factor}, kernel_size={kernel_size}"
        )
    if variance <= 0:
        raise ValueError(f"variance must be positive, got {variance}")
    low_w = -(-width // factor)
    low_h = -(-height // factor)
    half = kernel_size // 2
    offsets = np.arange(-half, half + 1)

    rows, cols, vals = [], [], []
    for i in range(low_h):
        cy = min(factor * i + factor // 2, height - 1)
        ys = cy + offsets
        ok_y = (ys >= 0) & (ys < height)
        for j in range(low_w):
            cx = min(factor * j + factor // 2, width - 1)
            xs = cx + offsets
            ok_x = (xs >= 0) & (xs < width)
            yy = ys[ok_y]
            xx = xs[ok_x]
            w = np.exp(
                -((yy[:, None] - cy) ** 2 + (xx[None, :] - cx) ** 2) / (2.0 * variance)
            )
            w = w / w.sum()
            pix = (yy[:, None] * width + xx[None, :]).ravel()
            col = i * low_w + j
            rows.extend(pix.tolist())
            cols.extend([col] * pix.size)
            vals.extend(w.ravel().tolist())

    g = sp.csc_array(
        sp.coo_array(
            (vals, (rows, cols)), shape=(width * height, low_w * low_h)
        )
    )
    return SpatialResponse(
        matrix=g,
        width=width,
        height=height,
        factor=factor,
        kernel_size=kernel_size,
        variance=float(variance),
    )


@dataclass
class NoiseSpec:
    """Additive white Gaussian noise levels for the two observations."""

    snr_m_db: float = 25.0
    snr_h_db: float = 25.0
    seed: int = 0


def _noise_sigma(signal, snr_db):
    if math.isinf(snr_db):
        return 0.0
    power = float(np.sum(signal**2))
    if power == 0.0:
        return 0.0
    return math.sqrt(power / (signal.size * 10.0 ** (snr_db / 10.0)))


def degrade(x, f, g, noise=None):
    """Apply the observation model to a ground-truth image.

    Parameters
    ----------
    x : HSImage
        Ground truth with M bands on the full grid.
    f : SpectralResponse
    g : SpatialResponse
    noise : NoiseSpec, optional
        Omit for noise-free observations. The multispectral noise is
        drawn first, then the hyperspectral noise, from one generator
        seeded with ``noise.seed``.

    Returns
    -------
    y_m : HSImage
        (M_m, L) multispectral observation on the full grid.
    y_h : HSImage
        (M, L_h) low-resolution hyperspectral observation.
    """
    if x.n_bands != f.n_input_bands:
        raise ValueError(
            f"image has {x.n_bands} bands but F expects {f.n_input_bands}"
        )
    if (x.width, x.height) != (g.width, g.height):
        raise ValueError(
            f"image grid {x.width}x{x.height} does not match G's "
            f"{g.width}x{g.height}"
        )
    y_m = f.matrix @ x.data
    y_h = x.data @ g.matrix
    if noise is not None:
        rng = np.random.default_rng(noise.seed)
        sig_m = _noise_sigma(y_m, noise.snr_m_db)
        y_m = y_m + sig_m * rng.standard_normal(y_m.shape)
        sig_h = _noise_sigma(y_h, noise.snr_h_db)
        y_h = y_h + sig_h * rng.standard_normal(y_h.shape)
    return (
        HSImage(y_m, x.width, x.height),
        HSImage(y_h, g.low_width, g.low_height),
    )


def wald_simulate(
    x,
    n_output_bands=6,
    response_mode="boxcar",
    kernel_size=11,
    variance=1.7**2,
    factor=4,
    snr_m_db=25.0,
    snr_h_db=25.0,
    seed=0,
):
    """Degrade a reference image into a co-registered observation pair.

    Builds the spectral and spatial operators for the image's own grid,
    applies them, and adds noise at the requested SNRs. Returns
    ``(y_m, y_h, f, g)`` so the exact operators used are available to
    the solver.
    """
    f = build_spectral_response(x.n_bands, n_output_bands, mode=response_mode)
    g = build_spatial_response(
        x.width, x.height, kernel_size=kernel_size, variance=variance, factor=factor
    )
    noise = NoiseSpec(snr_m_db=snr_m_db, snr_h_db=snr_h_db, seed=seed)
    y_m, y_h = degrade(x, f, g, noise)
    return y_m, y_h, f, g
