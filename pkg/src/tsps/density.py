"""Piecewise-constant densities on the unit cube and i.i.d. point sampling.

A :class:`DensityGrid` holds one value per cell of a regular ``g**d`` grid
over ``[0, 1]**d``.  Values are densities (not masses): the mass of a cell is
``value * cell_volume``.

Two exponent maps connect the density points are drawn from and the density
the travelling-salesman curve through them spreads its arc length over:

* :func:`exponent_transform` takes the density you want the curve to follow
  and returns the one to draw points from (power ``d / (d - 1)``);
* :func:`curve_limit_density` goes the other way (power ``(d - 1) / d``).

Random streams: ``sample(pi, n, seed)`` uses ``numpy.random.PCG64(seed)``
and consumes exactly one ``(n, d + 1)`` block of doubles (column 0 picks the
cell, the rest jitter within it).  The first ``k`` points of a draw of size
``n >= k`` therefore equal a draw of size ``k``.  Independent streams for
trials or levels use ``seed + index``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidDensityError, UnsupportedDimensionError

NORMALIZATION_TOL = 1e-12


@dataclass(frozen=True)
class DensityGrid:
    dim: int
    resolution: int
    values: np.ndarray

    def __post_init__(self):
        if self.dim < 1 or self.resolution < 1:
            raise InvalidDensityError(
                f"bad grid shape: dim={self.dim}, resolution={self.resolution}")
        vals = np.array(self.values, dtype=float)
        shape = (self.resolution,) * self.dim
        if vals.size != self.resolution ** self.dim:
            raise InvalidDensityError(
                f"expected {self.resolution ** self.dim} values, got {vals.size}")
        vals = vals.reshape(shape)
        if not np.all(np.isfinite(vals)):
            raise InvalidDensityError("density values must be finite")
        if np.any(vals < 0):
            raise InvalidDensityError("density values must be nonnegative")
        if not np.any(vals > 0):
            raise InvalidDensityError("density must have at least one positive value")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    @property
    def cell_volume(self) -> float:
        return float(self.resolution) ** (-self.dim)

    @property
    def masses(self) -> np.ndarray:
        """Per-cell probability mass, flattened row-major (last axis fastest)."""
        return self.values.ravel() * self.cell_volume

    def total_mass(self) -> float:
        return float(self.values.sum() * self.cell_volume)

    def is_normalized(self, tol: float = NORMALIZATION_TOL) -> bool:
        return abs(self.total_mass() - 1.0) <= tol

    @classmethod
    def uniform(cls, dim: int, resolution: int) -> "DensityGrid":
        return cls(dim, resolution, np.ones((resolution,) * dim))


@dataclass(frozen=True)
class PointSet:
    dim: int
    points: np.ndarray
    seed: int | None = None

    def __post_init__(self):
        pts = np.array(self.points, dtype=float).reshape(-1, self.dim)
        if pts.size and (pts.min() < 0.0 or pts.max() > 1.0):
            raise InvalidDensityError("points must lie in the unit cube")
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)

    def __len__(self):
        return self.points.shape[0]

    def subset(self, indices) -> "PointSet":
        return PointSet(self.dim, self.points[np.asarray(indices, dtype=int)], self.seed)


def normalize(grid: DensityGrid) -> DensityGrid:
    """Rescale ``grid`` to unit total mass."""
    mass = grid.values.sum() * grid.cell_volume
    return DensityGrid(grid.dim, grid.resolution, grid.values / mass)


def _check_dim(grid: DensityGrid):
    if grid.dim < 2:
        raise UnsupportedDimensionError(
            f"exponent correction needs d >= 2, got d={grid.dim}")


def exponent_transform(target: DensityGrid) -> DensityGrid:
    """Drawing density whose TSP curve spreads arc length like ``target``.

    Returns ``target ** (d / (d - 1))`` renormalized.
    """
    _check_dim(target)
    d = target.dim
    return normalize(DensityGrid(d, target.resolution, target.values ** (d / (d - 1))))


def curve_limit_density(drawing: DensityGrid) -> DensityGrid:
    """Limit density of the curve's arc-length measure for points drawn from ``drawing``."""
    _check_dim(drawing)
    d = drawing.dim
    return normalize(DensityGrid(d, drawing.resolution, drawing.values ** ((d - 1) / d)))


def sample(pi: DensityGrid, n: int, seed: int) -> PointSet:
    """Draw ``n`` i.i.d. points from ``pi``.

    A cell is picked by inverse CDF over the flattened cell masses, then the
    point is placed uniformly inside it.
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    d, g = pi.dim, pi.resolution
    if n == 0:
        return PointSet(d, np.empty((0, d)), seed)
    rng = np.random.Generator(np.random.PCG64(seed))
    u = rng.random((n, d + 1))
    cdf = np.cumsum(pi.values.ravel())
    # side="right" never selects a zero-mass cell
    cells = np.searchsorted(cdf, u[:, 0] * cdf[-1], side="right")
    cells = np.minimum(cells, cdf.size - 1)
    idx = np.stack(np.unravel_index(cells, (g,) * d), axis=1)
    pts = (idx + u[:, 1:]) / g
    return PointSet(d, np.minimum(pts, 1.0), seed)


def radial_density(dim: int, resolution: int, scale: float = 0.2,
                   power: float = 2.0) -> DensityGrid:
    """Radially decaying density centred at the middle of the cube.

    ``(1 + r / scale) ** -power`` evaluated at cell centres, normalized.  This
    is a generic variable-density profile, not an optimal one.
    """
    centres = (np.arange(resolution) + 0.5) / resolution - 0.5
    grids = np.meshgrid(*([centres] * dim), indexing="ij")
    r = np.sqrt(sum(c ** 2 for c in grids))
    return normalize(DensityGrid(dim, resolution, (1.0 + r / scale) ** (-power)))
