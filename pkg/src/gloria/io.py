"""On-disk formats: HSRM matrices, sparse operators, CSV tables.

HSRM is a small binary container for float64 matrices::

    bytes 0-3   magic "HSRM"
    byte  4     format version, currently 1
    byte  5     dtype code, 1 = float64 little-endian
    bytes 6-7   reserved, zero
    bytes 8-23  four uint32 (LE): rows, cols, width, height
    payload     rows*cols float64 values, column-major

``width``/``height`` carry the pixel grid when the matrix is an image
(``width * height == cols``) and are 0 otherwise. The sparse-operator
format and the response-table CSV are plain text with ``repr`` floats,
so both round-trip bit exactly.
"""

import json
import struct

import numpy as np
import scipy.sparse as sp

from .exceptions import FormatError
from .operators import HSImage
from .validation import check_matrix

__all__ = [
    "write_hsrm",
    "read_hsrm",
    "read_hsrm_image",
    "write_sparse",
    "read_sparse",
    "write_dense_csv",
    "read_dense_csv",
    "write_trace_csv",
    "write_rank_table_csv",
    "write_json",
    "read_json",
]

_MAGIC = b"HSRM"
_VERSION = 1
_DTYPE_F64 = 1
_HEADER = struct.Struct("<4sBBxxIIII")


def write_hsrm(path, data, width=None, height=None):
    """Write a matrix or HSImage to an HSRM file."""
    if isinstance(data, HSImage):
        width = data.width
        height = data.height
        data = data.data
    data = check_matrix(data, "data")
    width = int(width) if width else 0
    height = int(height) if height else 0
    if width * height not in (0, data.shape[1]) or (width > 0) != (height > 0):
        raise ValueError(
            f"grid {width}x{height} does not match {data.shape[1]} columns"
        )
    with open(path, "wb") as fh:
        fh.write(
            _HEADER.pack(
                _MAGIC, _VERSION, _DTYPE_F64, data.shape[0], data.shape[1], width, height
            )
        )
        fh.write(np.asarray(data, dtype="<f8").tobytes(order="F"))


def read_hsrm(path):
    """Read an HSRM file; returns ``(matrix, width, height)``."""
    with open(path, "rb") as fh:
        header = fh.read(_HEADER.size)
        if len(header) != _HEADER.size:
            raise FormatError(f"{path}: truncated HSRM header")
        magic, version, dtype, rows, cols, width, height = _HEADER.unpack(header)
        if magic != _MAGIC:
            raise FormatError(f"{path}: bad magic {magic!r}")
        if version != _VERSION:
            raise FormatError(f"{path}: unsupported version {version}")
        if dtype != _DTYPE_F64:
            raise FormatError(f"{path}: unsupported dtype code {dtype}")
        if header[6:8] != b"\x00\x00":
            raise FormatError(f"{path}: reserved bytes are not zero")
        payload = fh.read(8 * rows * cols)
        if len(payload) != 8 * rows * cols:
            raise FormatError(f"{path}: truncated payload")
        if fh.read(1):
            raise FormatError(f"{path}: trailing bytes after payload")
    data = np.frombuffer(payload, dtype="<f8").reshape((rows, cols), order="F")
    if width * height not in (0, cols):
        raise FormatError(f"{path}: grid {width}x{height} does not match {cols} columns")
    return np.ascontiguousarray(data), width, height


def read_hsrm_image(path):
    """Read an HSRM file that must carry a pixel grid, as an HSImage."""
    data, width, height = read_hsrm(path)
    if width == 0 or height == 0:
        raise FormatError(f"{path}: file has no spatial grid")
    return HSImage(data, width, height)


def write_sparse(path, g):
    """Write a sparse operator as sorted ``row col value`` text."""
    mat = getattr(g, "matrix", g)
    coo = sp.coo_array(mat)
    order = np.lexsort((coo.col, coo.row))
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"HSRG {coo.shape[0]} {coo.shape[1]} {coo.nnz}\n")
        for k in order:
            # plain Python floats repr to the shortest exact form
            fh.write(f"{int(coo.row[k])} {int(coo.col[k])} {float(coo.data[k])!r}\n")


def read_sparse(path):
    """Read the text sparse format back into a CSC array."""
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().split()
        if len(header) != 4 or header[0] != "HSRG":
            raise FormatError(f"{path}: bad sparse header")
        try:
            rows, cols, nnz = (int(v) for v in header[1:])
        except ValueError as exc:
            raise FormatError(f"{path}: bad sparse header") from exc
        r = np.empty(nnz, dtype=np.int64)
        c = np.empty(nnz, dtype=np.int64)
        v = np.empty(nnz, dtype=np.float64)
        for k in range(nnz):
            parts = fh.readline().split()
            if len(parts) != 3:
                raise FormatError(f"{path}: truncated sparse entries")
            r[k], c[k], v[k] = int(parts[0]), int(parts[1]), float(parts[2])
        if fh.readline():
            raise FormatError(f"{path}: trailing lines after {nnz} entries")
    if nnz and (r.min() < 0 or r.max() >= rows or c.min() < 0 or c.max() >= cols):
        raise FormatError(f"{path}: entry outside the declared {rows}x{cols} shape")
    return sp.csc_array(sp.coo_array((v, (r, c)), shape=(rows, cols)))


def write_dense_csv(path, matrix):
    """Comma-separated matrix with ``repr`` floats, no header."""
    matrix = check_matrix(matrix, "matrix")
    with open(path, "w", encoding="ascii") as fh:
        for row in matrix:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def read_dense_csv(path):
    rows = []
    with open(path, "r", encoding="ascii") as fh:
        for line in fh:
            line = line.strip()
            if line:
                rows.append([float(v) for v in line.split(",")])
    if not rows:
        raise FormatError(f"{path}: empty matrix file")
    width = len(rows[0])
    if any(len(row) != width for row in rows):
        raise FormatError(f"{path}: ragged rows")
    return np.asarray(rows, dtype=np.float64)


def write_trace_csv(path, report):
    """Objective trace of a solve as ``iter,objective,step_size,wall_ms``."""
    trace = report.objective_trace
    steps = report.step_sizes
    wall = report.wall_ms_trace
    with open(path, "w", encoding="ascii") as fh:
        fh.write("iter,objective,step_size,wall_ms\n")
        for k, obj in enumerate(trace):
            step = repr(float(steps[k - 1])) if k > 0 else ""
            fh.write(f"{k},{float(obj)!r},{step},{float(wall[k])!r}\n")


def write_rank_table_csv(path, rows):
    with open(path, "w", encoding="ascii") as fh:
        fh.write("grid,patch_pixels,mean_rank,std_rank,global_rank\n")
        for row in rows:
            fh.write(
                f"{int(row.grid)},{int(row.patch_pixels)},{float(row.mean_rank)!r},"
                f"{float(row.std_rank)!r},{int(row.global_rank)}\n"
            )


def write_json(path, doc):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_json(path):
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)
