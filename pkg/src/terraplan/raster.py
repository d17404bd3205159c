"""Regular raster grids: the DEM container, bilinear sampling, and the
on-disk formats (TPRAS1 binary grids, 16-bit PGM export).

Grid convention: ``arr[i, j]`` is the cell whose *center* sits at
``origin + (j * cell_size, i * cell_size)`` — ``i`` indexes y (rows),
``j`` indexes x (columns).  A raster's world extent reaches half a cell
beyond the outermost centers.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import OutOfBoundsError

TPRAS_MAGIC = b"TPRAS1"

# slack for "on the boundary" world queries; half a nanometer in practice
_EDGE_EPS = 1e-9


def freeze(arr: np.ndarray, dtype=np.float64) -> np.ndarray:
    """Return a C-contiguous read-only copy-or-view of ``arr``."""
    out = np.ascontiguousarray(arr, dtype=dtype)
    if out is arr:
        out = arr.copy()
    out.setflags(write=False)
    return out


def cell_center(i, j, cell_size: float, origin) -> tuple:
    return origin[0] + np.asarray(j) * cell_size, origin[1] + np.asarray(i) * cell_size


def world_to_cell(x, y, cell_size: float, origin):
    """Nearest cell indices (i, j) for world points."""
    j = np.rint((np.asarray(x, dtype=np.float64) - origin[0]) / cell_size).astype(np.int64)
    i = np.rint((np.asarray(y, dtype=np.float64) - origin[1]) / cell_size).astype(np.int64)
    return i, j


def in_bounds(shape, x, y, cell_size: float, origin) -> np.ndarray:
    """True where world points fall inside the raster extent (half-cell fringe included)."""
    ny, nx = shape
    u = (np.asarray(x, dtype=np.float64) - origin[0]) / cell_size
    v = (np.asarray(y, dtype=np.float64) - origin[1]) / cell_size
    return (
        (u >= -0.5 - _EDGE_EPS)
        & (u <= nx - 0.5 + _EDGE_EPS)
        & (v >= -0.5 - _EDGE_EPS)
        & (v <= ny - 0.5 + _EDGE_EPS)
    )


def bilinear(arr: np.ndarray, x, y, cell_size: float, origin):
    """Bilinear interpolation of ``arr`` at world points.

    Within the outer half-cell fringe the interpolation clamps to the edge
    value; beyond it an OutOfBoundsError is raised.
    """
    ny, nx = arr.shape
    u = (np.asarray(x, dtype=np.float64) - origin[0]) / cell_size
    v = (np.asarray(y, dtype=np.float64) - origin[1]) / cell_size
    scalar = u.ndim == 0
    u = np.atleast_1d(u)
    v = np.atleast_1d(v)
    bad = (
        (u < -0.5 - _EDGE_EPS)
        | (u > nx - 0.5 + _EDGE_EPS)
        | (v < -0.5 - _EDGE_EPS)
        | (v > ny - 0.5 + _EDGE_EPS)
    )
    if bad.any():
        k = int(np.flatnonzero(bad)[0])
        raise OutOfBoundsError(
            f"query ({float(np.ravel(x)[k] if np.ndim(x) else x):.3f}, "
            f"{float(np.ravel(y)[k] if np.ndim(y) else y):.3f}) outside raster extent"
        )
    uc = np.clip(u, 0.0, nx - 1.0)
    vc = np.clip(v, 0.0, ny - 1.0)
    j0 = np.minimum(uc.astype(np.int64), max(nx - 2, 0))
    i0 = np.minimum(vc.astype(np.int64), max(ny - 2, 0))
    fu = uc - j0
    fv = vc - i0
    j1 = np.minimum(j0 + 1, nx - 1)
    i1 = np.minimum(i0 + 1, ny - 1)
    top = arr[i0, j0] * (1.0 - fu) + arr[i0, j1] * fu
    bot = arr[i1, j0] * (1.0 - fu) + arr[i1, j1] * fu
    out = top * (1.0 - fv) + bot * fv
    return float(out[0]) if scalar else out


@dataclass(frozen=True)
class Dem:
    """Digital elevation model on a regular grid."""

    heights: np.ndarray
    cell_size: float
    origin: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        h = freeze(self.heights)
        if h.ndim != 2 or min(h.shape) < 1:
            raise ValueError("heights must be a non-empty 2-D grid")
        if not np.isfinite(h).all():
            raise ValueError("heights must be finite")
        if not self.cell_size > 0:
            raise ValueError("cell_size must be positive")
        object.__setattr__(self, "heights", h)
        object.__setattr__(self, "origin", (float(self.origin[0]), float(self.origin[1])))

    @property
    def shape(self) -> tuple[int, int]:
        return self.heights.shape

    def sample(self, x, y):
        """Bilinear height at world points."""
        return bilinear(self.heights, x, y, self.cell_size, self.origin)

    def in_bounds(self, x, y):
        return in_bounds(self.shape, x, y, self.cell_size, self.origin)


# ---------------------------------------------------------------------------
# TPRAS1 binary grid format
# ---------------------------------------------------------------------------
# magic "TPRAS1" | u32le width | u32le height | f64le cell_size
# | f64le origin_x | f64le origin_y | row-major f32le cells


def write_tpras(path, arr: np.ndarray, cell_size: float, origin=(0.0, 0.0)) -> None:
    arr = np.asarray(arr, dtype=np.float32)
    if arr.ndim != 2:
        raise ValueError("TPRAS rasters are 2-D")
    ny, nx = arr.shape
    header = TPRAS_MAGIC + struct.pack("<II", nx, ny) + struct.pack(
        "<ddd", float(cell_size), float(origin[0]), float(origin[1])
    )
    Path(path).write_bytes(header + arr.astype("<f4").tobytes(order="C"))


def read_tpras(path):
    """Read a TPRAS1 grid; returns (float64 array, cell_size, origin)."""
    blob = Path(path).read_bytes()
    if blob[: len(TPRAS_MAGIC)] != TPRAS_MAGIC:
        raise ValueError(f"{path}: not a TPRAS1 file")
    off = len(TPRAS_MAGIC)
    nx, ny = struct.unpack_from("<II", blob, off)
    off += 8
    cell_size, ox, oy = struct.unpack_from("<ddd", blob, off)
    off += 24
    expect = nx * ny * 4
    body = blob[off : off + expect]
    if len(body) != expect:
        raise ValueError(f"{path}: truncated TPRAS1 payload")
    arr = np.frombuffer(body, dtype="<f4").reshape(ny, nx).astype(np.float64)
    return arr, cell_size, (ox, oy)


def write_pgm(path, arr: np.ndarray) -> None:
    """Export a raster as a 16-bit binary PGM, normalized so max -> 65535."""
    arr = np.asarray(arr, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError("PGM export needs a 2-D raster")
    finite = np.where(np.isfinite(arr), arr, 0.0)
    top = float(finite.max()) if finite.size else 0.0
    if top > 0:
        scaled = np.clip(finite / top, 0.0, 1.0) * 65535.0
    else:
        scaled = np.zeros_like(finite)
    pix = np.rint(scaled).astype(">u2")
    ny, nx = arr.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{nx} {ny}\n65535\n".encode("ascii"))
        fh.write(pix.tobytes(order="C"))
