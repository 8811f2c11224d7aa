"""k-space sampling masks: rasterized trajectories and i.i.d. draws.

Mask cell ``[i0, i1]`` covers ``[i0/n, (i0+1)/n) x [i1/n, (i1+1)/n)`` of the
unit square, the same cell layout as a :class:`DensityGrid` of resolution
``n``.  DC is cell ``(n // 2, n // 2)`` and is always sampled.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..curve import Curve, cell_index, segment_pieces
from ..density import DensityGrid
from ..errors import DimensionError, InfeasibleError


@dataclass(frozen=True)
class KSpaceMask:
    cells: np.ndarray

    def __post_init__(self):
        cells = np.array(self.cells, dtype=bool)
        n = cells.shape[0]
        if cells.shape != (n, n):
            raise DimensionError("mask must be square")
        cells[n // 2, n // 2] = True
        cells.flags.writeable = False
        object.__setattr__(self, "cells", cells)

    @property
    def side(self) -> int:
        return self.cells.shape[0]

    @property
    def count(self) -> int:
        return int(self.cells.sum())

    @property
    def sampled_fraction(self) -> float:
        return self.count / self.cells.size

    @classmethod
    def full(cls, n: int) -> "KSpaceMask":
        return cls(np.ones((n, n), dtype=bool))


def dc_index(n: int) -> tuple:
    return (n // 2, n // 2)


def rasterize(curve: Curve, n: int) -> KSpaceMask:
    """Mark every cell of the ``n x n`` grid the polyline passes through.

    Each segment is split at the grid lines and every piece marks its cell;
    the cells holding the vertices are marked as well, so a segment that only
    touches a cell at its endpoint still counts.
    """
    if curve.dim != 2:
        raise DimensionError("k-space masks are two-dimensional")
    v = curve.vertices
    _, cells, _ = segment_pieces(v[:-1], v[1:], n)
    flat = np.zeros(n * n, dtype=bool)
    flat[cells] = True
    flat[cell_index(v, n)] = True
    return KSpaceMask(flat.reshape(n, n))


def iid_mask(target: DensityGrid, budget: int, seed: int) -> KSpaceMask:
    """``budget`` distinct cells drawn i.i.d. from ``target``, repeats discarded.

    DC is placed first.  Drawing with replacement and discarding repeats is
    the same law as successive sampling without replacement proportional to
    the cell masses, which is realized exactly with exponential race keys
    (smallest ``E_i / w_i`` first).  This avoids the coupon-collector blowup
    of literal redraws when the budget reaches low-density cells.
    """
    if target.dim != 2:
        raise DimensionError("k-space masks are two-dimensional")
    n = target.resolution
    if budget > n * n:
        raise InfeasibleError(f"budget {budget} exceeds the {n * n} available cells")
    if budget < 1:
        raise InfeasibleError("budget must be positive")
    w = target.values.ravel()
    dc = np.ravel_multi_index(dc_index(n), (n, n))
    rng = np.random.Generator(np.random.PCG64(seed))
    e = rng.exponential(size=n * n)
    with np.errstate(divide="ignore"):
        keys = np.where(w > 0, e / w, np.inf)
    keys[dc] = -np.inf
    if np.count_nonzero(np.isfinite(keys) | (keys == -np.inf)) < budget:
        raise InfeasibleError("target support is smaller than the budget")
    chosen = np.argsort(keys, kind="stable")[:budget]
    flat = np.zeros(n * n, dtype=bool)
    flat[chosen] = True
    return KSpaceMask(flat.reshape(n, n))


def uniform_mask(n: int, fraction: float, seed: int) -> KSpaceMask:
    budget = max(1, int(round(fraction * n * n)))
    return iid_mask(DensityGrid.uniform(2, n), budget, seed)
