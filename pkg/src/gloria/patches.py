"""Rectangular patch layouts and the patch-major column ordering.

A layout splits a ``width x height`` pixel grid into P axis-aligned
rectangles. Image matrices keep one column per pixel in raster order
(row-major over the grid); the solvers work on the patch-major
ordering, in which each patch's pixels occupy a contiguous block of
columns. Blocks are listed row-major over the grid of rectangles, and
pixels keep raster order inside their block.
"""

import numpy as np

from .exceptions import ConfigError

__all__ = ["PatchLayout", "grid_layout", "random_rect_layout"]


class PatchLayout:
    """A partition of the pixel grid into rectangular patches.

    Parameters
    ----------
    width, height : int
        Grid dimensions in pixels.
    blocks : sequence of (row0, row1, col0, col1)
        Half-open rectangles. They must tile the grid exactly.

    Attributes
    ----------
    n_patches : int
        Number of rectangles P.
    sizes : (P,) ndarray
        Pixel count of each patch.
    offsets : (P+1,) ndarray
        Column offsets of each patch in the patch-major ordering.
    permutation : (L,) ndarray
        ``permutation[t]`` is the raster index of the pixel stored in
        patch-major column ``t``.
    """

    def __init__(self, width, height, blocks):
        width = int(width)
        height = int(height)
        if width < 1 or height < 1:
            raise ConfigError(f"grid must be non-empty, got {width}x{height}")
        self.width = width
        self.height = height
        self.blocks = [tuple(int(v) for v in b) for b in blocks]
        if not self.blocks:
            raise ConfigError("layout needs at least one block")

        covered = np.zeros(width * height, dtype=bool)
        index_lists = []
        for r0, r1, c0, c1 in self.blocks:
            if not (0 <= r0 < r1 <= height and 0 <= c0 < c1 <= width):
                raise ConfigError(f"block {(r0, r1, c0, c1)} out of bounds")
            rows = np.arange(r0, r1)
            cols = np.arange(c0, c1)
            idx = (rows[:, None] * width + cols[None, :]).ravel()
            if covered[idx].any():
                raise ConfigError(f"block {(r0, r1, c0, c1)} overlaps another block")
            covered[idx] = True
            index_lists.append(idx)
        if not covered.all():
            raise ConfigError("blocks do not cover the pixel grid")

        self.sizes = np.array([len(ix) for ix in index_lists], dtype=np.int64)
        self.offsets = np.concatenate([[0], np.cumsum(self.sizes)])
        self.permutation = np.concatenate(index_lists)
        self._inverse = np.empty_like(self.permutation)
        self._inverse[self.permutation] = np.arange(self.permutation.size)

    @property
    def n_patches(self):
        return len(self.blocks)

    @property
    def n_pixels(self):
        return self.width * self.height

    def to_patch_order(self, x):
        """Reorder columns of ``x`` from raster order to patch-major order."""
        x = np.asarray(x)
        if x.shape[-1] != self.n_pixels:
            raise ValueError(
                f"expected {self.n_pixels} columns for a {self.width}x{self.height} grid, "
                f"got {x.shape[-1]}"
            )
        return x[..., self.permutation]

    def from_patch_order(self, x):
        """Inverse of :meth:`to_patch_order`."""
        x = np.asarray(x)
        if x.shape[-1] != self.n_pixels:
            raise ValueError(
                f"expected {self.n_pixels} columns for a {self.width}x{self.height} grid, "
                f"got {x.shape[-1]}"
            )
        return x[..., self._inverse]

    def patch_slice(self, i):
        """Column slice of patch ``i`` in the patch-major ordering."""
        return slice(int(self.offsets[i]), int(self.offsets[i + 1]))

    def to_dict(self):
        return {
            "width": self.width,
            "height": self.height,
            "blocks": [list(b) for b in self.blocks],
        }

    @classmethod
    def from_dict(cls, doc):
        try:
            return cls(doc["width"], doc["height"], doc["blocks"])
        except KeyError as exc:
            raise ConfigError(f"layout document missing key {exc}") from exc

    def __repr__(self):
        return (
            f"PatchLayout(width={self.width}, height={self.height}, "
            f"n_patches={self.n_patches})"
        )


def grid_layout(width, height, rows, cols):
    """Split the grid into ``rows x cols`` near-equal rectangles.

    Block edges sit at ``floor(height * i / rows)`` and
    ``floor(width * j / cols)``, so block sizes differ by at most one
    pixel along each axis.
    """
    rows = int(rows)
    cols = int(cols)
    if rows < 1 or cols < 1:
        raise ConfigError(f"rows and cols must be >= 1, got {rows}x{cols}")
    if rows > height or cols > width:
        raise ConfigError(
            f"{rows}x{cols} grid does not fit a {width}x{height} image"
        )
    redges = [height * i // rows for i in range(rows + 1)]
    cedges = [width * j // cols for j in range(cols + 1)]
    blocks = [
        (redges[bi], redges[bi + 1], cedges[bj], cedges[bj + 1])
        for bi in range(rows)
        for bj in range(cols)
    ]
    return PatchLayout(width, height, blocks)


def _cut_edges(extent, pieces, rng):
    # Sorted iid draws in the slack range, shifted so every piece is >= 2.
    if pieces == 1:
        return [0, extent]
    z = np.sort(rng.integers(0, extent - 2 * pieces + 1, size=pieces - 1))
    return [0] + [int(z[k]) + 2 * (k + 1) for k in range(pieces - 1)] + [extent]


def random_rect_layout(width, height, target_p, seed):
    """Random rectangular partition with exactly ``target_p`` blocks.

    Draws a divisor pair (r, c) of ``target_p`` uniformly among the
    pairs whose blocks can all be at least 2 pixels tall and wide, then
    draws the r-1 horizontal and c-1 vertical cut positions.
    """
    target_p = int(target_p)
    if target_p < 1:
        raise ConfigError(f"target_p must be >= 1, got {target_p}")
    pairs = [
        (r, target_p // r)
        for r in range(1, target_p + 1)
        if target_p % r == 0 and 2 * r <= height and 2 * (target_p // r) <= width
    ]
    if not pairs:
        raise ConfigError(
            f"no divisor pair of {target_p} fits a {width}x{height} image "
            "with blocks of at least 2x2 pixels"
        )
    rng = np.random.default_rng(seed)
    r, c = pairs[int(rng.integers(len(pairs)))]
    redges = _cut_edges(height, r, rng)
    cedges = _cut_edges(width, c, rng)
    blocks = [
        (redges[bi], redges[bi + 1], cedges[bj], cedges[bj + 1])
        for bi in range(r)
        for bj in range(c)
    ]
    return PatchLayout(width, height, blocks)
