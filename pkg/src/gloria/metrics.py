"""Reconstruction quality metrics for hyperspectral estimates.

All functions compare a reference cube against an estimate of the same
shape, given as (bands, pixels) matrices or HSImage objects. Spatial
structure only matters for exporting the angle map.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .validation import check_matrix

__all__ = [
    "psnr",
    "sam",
    "ergas",
    "uiqi",
    "evaluate",
    "MetricsReport",
    "sam_map_to_pgm",
]

PSNR_CAP_DB = 300.0


def _pair(reference, estimate):
    ref = check_matrix(getattr(reference, "data", reference), "reference")
    est = check_matrix(getattr(estimate, "data", estimate), "estimate")
    if ref.shape != est.shape:
        raise ValueError(f"shape mismatch: reference {ref.shape}, estimate {est.shape}")
    return ref, est


def psnr(reference, estimate, peak="reference"):
    """Mean and per-band peak signal-to-noise ratio in dB.

    Parameters
    ----------
    peak : {"reference", "one"}
        Per-band peak value: the reference band's maximum, or a fixed
        1.0 for reflectance data.

    Returns
    -------
    mean_db : float
    band_db : (M,) ndarray
        Identical bands are reported as the 300 dB cap.
    """
    ref, est = _pair(reference, estimate)
    n_pix = ref.shape[1]
    out = np.empty(ref.shape[0])
    for m in range(ref.shape[0]):
        if peak == "reference":
            pk = float(ref[m].max())
        elif peak == "one":
            pk = 1.0
        else:
            raise ValueError(f'peak must be "reference" or "one", got {peak!r}')
        err = float(np.sum((ref[m] - est[m]) ** 2))
        if err == 0.0:
            out[m] = PSNR_CAP_DB
            continue
        if pk <= 0.0:
            raise ValueError(f"reference band {m} has non-positive peak {pk}")
        out[m] = min(10.0 * np.log10(pk * pk * n_pix / err), PSNR_CAP_DB)
    return float(out.mean()), out


def sam(reference, estimate, exclude_degenerate=False):
    """Spectral angle map in degrees.

    Pixels whose reference or estimate spectrum has norm at most 1e-12
    get angle 0; they are excluded from the mean when
    ``exclude_degenerate`` is set, otherwise they count as 0 degrees.

    Returns
    -------
    mean_deg : float
    angles : (L,) ndarray
    n_degenerate : int
    """
    ref, est = _pair(reference, estimate)
    sq_ref = np.sum(ref * ref, axis=0)
    sq_est = np.sum(est * est, axis=0)
    bad = (np.sqrt(sq_ref) <= 1e-12) | (np.sqrt(sq_est) <= 1e-12)
    dots = np.sum(ref * est, axis=0)
    denom_sq = np.where(bad, 1.0, sq_ref * sq_est)
    cosines = np.clip(dots / np.sqrt(denom_sq), -1.0, 1.0)
    # Cauchy-Schwarz holds with equality exactly when the spectra are
    # colinear; checking it on the squared sums avoids sqrt roundoff,
    # so identical pixels come out at exactly 0 degrees.
    colinear = ~bad & (dots * dots >= denom_sq)
    cosines[colinear] = np.sign(dots[colinear])
    angles = np.degrees(np.arccos(cosines))
    angles[bad] = 0.0
    if exclude_degenerate and bad.any():
        kept = angles[~bad]
        mean = float(kept.mean()) if kept.size else 0.0
    else:
        mean = float(angles.mean())
    return mean, angles, int(bad.sum())


def ergas(reference, estimate, ratio):
    """Relative global dimensionless synthesis error.

    ``ratio`` is the spatial downsampling factor between the fused
    product and the low-resolution input. A reference band with zero
    mean makes the relative RMSE undefined and raises ``ValueError``.
    """
    ref, est = _pair(reference, estimate)
    if not ratio > 0:
        raise ValueError(f"ratio must be positive, got {ratio}")
    means = ref.mean(axis=1)
    if np.any(means == 0.0):
        raise ValueError("reference has a zero-mean band; ERGAS is undefined")
    rmse = np.sqrt(np.mean((ref - est) ** 2, axis=1))
    return float(100.0 / ratio * np.sqrt(np.mean((rmse / means) ** 2)))


def _uiqi_band(x, y):
    mu_x = x.mean()
    mu_y = y.mean()
    var_x = x.var()
    var_y = y.var()
    cov = ((x - mu_x) * (y - mu_y)).mean()
    d_var = var_x + var_y
    d_mu = mu_x * mu_x + mu_y * mu_y
    if d_var > 0.0 and d_mu > 0.0:
        return 4.0 * cov * mu_x * mu_y / (d_var * d_mu)
    if d_var > 0.0:
        return 2.0 * cov / d_var
    if d_mu > 0.0:
        return 2.0 * mu_x * mu_y / d_mu
    return 0.0


def uiqi(reference, estimate):
    """Mean universal image quality index over bands.

    Each band is treated as one window. When the luminance or contrast
    part of the denominator vanishes the corresponding factor drops
    out, and a band that is identically zero in both images
    contributes 0.
    """
    ref, est = _pair(reference, estimate)
    vals = [_uiqi_band(ref[m], est[m]) for m in range(ref.shape[0])]
    return float(np.mean(vals))


@dataclass
class MetricsReport:
    """Bundle of the four quality metrics plus the angle map."""

    psnr_db: float
    sam_deg: float
    ergas: float
    uiqi: float
    per_band_psnr: list
    sam_degenerate_pixels: int
    sam_map: np.ndarray = field(repr=False, default=None)

    def to_dict(self):
        """JSON-ready dictionary (the per-pixel map is left out)."""
        return {
            "psnr_db": self.psnr_db,
            "sam_deg": self.sam_deg,
            "ergas": self.ergas,
            "uiqi": self.uiqi,
            "per_band_psnr": list(map(float, self.per_band_psnr)),
            "sam_degenerate_pixels": self.sam_degenerate_pixels,
        }

    def to_json(self, indent=2):
        return json.dumps(self.to_dict(), indent=indent, sort_keys=True)


def evaluate(reference, estimate, ratio=4, peak="reference", exclude_degenerate=False):
    """Compute every metric at once and return a :class:`MetricsReport`."""
    mean_psnr, band_psnr = psnr(reference, estimate, peak=peak)
    mean_sam, angle_map, n_bad = sam(
        reference, estimate, exclude_degenerate=exclude_degenerate
    )
    return MetricsReport(
        psnr_db=mean_psnr,
        sam_deg=mean_sam,
        ergas=ergas(reference, estimate, ratio),
        uiqi=uiqi(reference, estimate),
        per_band_psnr=band_psnr.tolist(),
        sam_degenerate_pixels=n_bad,
        sam_map=angle_map,
    )


def sam_map_to_pgm(angles, width, height, path, cap_deg=30.0):
    """Write the angle map as an 8-bit binary PGM image.

    0 degrees maps to 0 and ``cap_deg`` (and above) to 255; pixels are
    written in raster order.
    """
    angles = np.asarray(angles, dtype=np.float64).ravel()
    if angles.size != width * height:
        raise ValueError(
            f"angle map has {angles.size} pixels, grid is {width}x{height}"
        )
    if not cap_deg > 0:
        raise ValueError(f"cap_deg must be positive, got {cap_deg}")
    levels = np.round(np.clip(angles / cap_deg, 0.0, 1.0) * 255.0).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{width} {height}\n255\n".encode("ascii"))
        fh.write(levels.tobytes())
