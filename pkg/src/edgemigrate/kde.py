"""Bivariate Gaussian kernel density estimation over boundary points.

The density is discretized on a regular grid; the highest-density region at
an iso-proportion threshold is then split into connected "islands".
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from ._backend import kernels
from .core import BoundingBox, as_array

DEFAULT_RESOLUTION = 128
DEFAULT_PADDING = 3.0
VARIANCE_FLOOR_STD = 1e-3


class DegenerateSampleError(ValueError):
    pass


@dataclass(frozen=True)
class BandwidthMatrix:
    h11: float
    h22: float
    h12: float = 0.0

    def __post_init__(self):
        if not (self.h11 > 0 and self.h22 > 0 and self.det > 0):
            raise ValueError(f"bandwidth matrix is not positive definite: {self}")

    @property
    def det(self) -> float:
        return self.h11 * self.h22 - self.h12 * self.h12

    def inverse(self) -> tuple[float, float, float]:
        d = self.det
        return self.h22 / d, -self.h12 / d, self.h11 / d

    def as_array(self) -> np.ndarray:
        return np.array([[self.h11, self.h12], [self.h12, self.h22]])


@dataclass(frozen=True)
class DensityGrid:
    x_edges: np.ndarray
    y_edges: np.ndarray
    values: np.ndarray  # shape (nx, ny); axis 0 runs along x

    @property
    def x_range(self) -> tuple[float, float]:
        return float(self.x_edges[0]), float(self.x_edges[-1])

    @property
    def y_range(self) -> tuple[float, float]:
        return float(self.y_edges[0]), float(self.y_edges[-1])

    @property
    def resolution(self) -> tuple[int, int]:
        return self.values.shape

    @property
    def x_centers(self) -> np.ndarray:
        return 0.5 * (self.x_edges[:-1] + self.x_edges[1:])

    @property
    def y_centers(self) -> np.ndarray:
        return 0.5 * (self.y_edges[:-1] + self.y_edges[1:])

    @property
    def cell_area(self) -> float:
        return float((self.x_edges[1] - self.x_edges[0]) * (self.y_edges[1] - self.y_edges[0]))

    @property
    def mass(self) -> float:
        return float(self.values.sum() * self.cell_area)

    def cell_box(self, ix: slice, iy: slice) -> BoundingBox:
        return BoundingBox(float(self.x_edges[ix.start]), float(self.y_edges[iy.start]),
                           float(self.x_edges[ix.stop]), float(self.y_edges[iy.stop]))


@dataclass(frozen=True)
class Island:
    box: BoundingBox
    mass_fraction: float
    n_cells: int


@dataclass(frozen=True)
class IslandSet:
    level: float
    islands: list[Island]

    def __len__(self):
        return len(self.islands)

    def __bool__(self):
        return bool(self.islands)


def select_bandwidth(points) -> BandwidthMatrix:
    """Diagonal Scott's rule for p = 2: ``h_jj = (sd_j * n**(-1/6))**2``.

    Per-axis standard deviations are floored at ``VARIANCE_FLOOR_STD``; a
    sample with no spread at all on either axis is rejected.
    """
    arr = as_array(points)
    n = arr.shape[0]
    if n < 2:
        raise DegenerateSampleError("bandwidth selection needs at least 2 points")
    sd = arr.std(axis=0, ddof=1)
    if np.all(sd == 0.0):
        raise DegenerateSampleError("sample has zero variance on both axes")
    sd = np.maximum(sd, VARIANCE_FLOOR_STD)
    factor = n ** (-1.0 / 6.0)
    h = (sd * factor) ** 2
    return BandwidthMatrix(float(h[0]), float(h[1]), 0.0)


def _norm(n: int, H: BandwidthMatrix) -> float:
    return 1.0 / (2.0 * math.pi * n * math.sqrt(H.det))


def estimate_density(points, H: BandwidthMatrix, q) -> float:
    arr = as_array(points)
    if arr.shape[0] == 0:
        raise ValueError("density estimate needs at least one point")
    i11, i12, i22 = H.inverse()
    query = np.array([[float(q[0]), float(q[1])]])
    return float(kernels.kde_eval(arr, query, i11, i12, i22, _norm(arr.shape[0], H))[0])


def evaluate(points, H: BandwidthMatrix, queries) -> np.ndarray:
    """Vectorized :func:`estimate_density` over an (m, 2) array of queries."""
    arr = as_array(points)
    i11, i12, i22 = H.inverse()
    return kernels.kde_eval(arr, as_array(queries), i11, i12, i22, _norm(arr.shape[0], H))


def build_grid(points, H: BandwidthMatrix, resolution: int = DEFAULT_RESOLUTION,
               padding: float = DEFAULT_PADDING) -> DensityGrid:
    if resolution < 16:
        raise ValueError("grid resolution must be at least 16")
    arr = as_array(points)
    lo = arr.min(axis=0)
    hi = arr.max(axis=0)
    pad = padding * np.sqrt([H.h11, H.h22])
    lo = lo - pad
    hi = hi + pad
    if np.any(hi - lo <= 0.0):
        raise DegenerateSampleError("padded grid extent has zero area")
    x_edges = np.linspace(lo[0], hi[0], resolution + 1)
    y_edges = np.linspace(lo[1], hi[1], resolution + 1)
    xc = 0.5 * (x_edges[:-1] + x_edges[1:])
    yc = 0.5 * (y_edges[:-1] + y_edges[1:])
    gx, gy = np.meshgrid(xc, yc, indexing="ij")
    queries = np.column_stack([gx.ravel(), gy.ravel()])
    values = evaluate(arr, H, queries).reshape(resolution, resolution)
    return DensityGrid(x_edges, y_edges, values)


def hdr_level(grid: DensityGrid, thresh: float) -> float:
    """Density level ``c`` whose super-level set ``{f >= c}`` is the smallest
    set of cells holding at least ``1 - thresh`` of the grid mass."""
    if not 0.0 < thresh < 1.0:
        raise ValueError("thresh must lie in (0, 1)")
    flat = np.sort(grid.values, axis=None)[::-1]
    cum = np.cumsum(flat)
    total = cum[-1]
    if not total > 0.0:
        raise ValueError("grid has no mass")
    k = int(np.searchsorted(cum, (1.0 - thresh) * total, side="left"))
    return float(flat[min(k, flat.size - 1)])


def extract_islands(grid: DensityGrid, level: float) -> IslandSet:
    """4-connected components of ``{cell : value >= level}``, largest mass first."""
    if level < 0:
        raise ValueError("level must be nonnegative")
    mask = grid.values >= level
    labels, count = ndimage.label(mask)  # default structure is 4-connectivity
    if count == 0:
        return IslandSet(level, [])
    total = grid.values.sum()
    index = np.arange(1, count + 1)
    masses = ndimage.sum(grid.values, labels, index)
    sizes = ndimage.sum(mask, labels, index)
    slices = ndimage.find_objects(labels)
    islands = [
        Island(grid.cell_box(sl[0], sl[1]), float(m / total) if total > 0 else 0.0, int(sz))
        for sl, m, sz in zip(slices, masses, sizes)
    ]
    # stable sort keeps label order (row-major scan) for equal masses
    islands.sort(key=lambda isl: -isl.mass_fraction)
    return IslandSet(level, islands)


def dominant_island_box(points, thresh: float, resolution: int = DEFAULT_RESOLUTION,
                        padding: float = DEFAULT_PADDING):
    """Bounding box of the most massive island at iso-proportion ``thresh``."""
    H = select_bandwidth(points)
    grid = build_grid(points, H, resolution, padding)
    islands = extract_islands(grid, hdr_level(grid, thresh))
    return islands.islands[0].box if islands else None
