"""Constant-speed polylines and their arc-length measure on a cell partition."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .density import DensityGrid
from .errors import (DegenerateCurveError, DomainError, ResolutionMismatchError,
                     ZeroLengthCurveError)


@dataclass(frozen=True)
class Curve:
    vertices: np.ndarray
    cumulative_lengths: np.ndarray

    @property
    def total_length(self) -> float:
        return float(self.cumulative_lengths[-1])

    @property
    def dim(self) -> int:
        return self.vertices.shape[1]


@dataclass(frozen=True)
class EmpiricalMeasure:
    partition_m: int
    masses: np.ndarray
    point_counts: np.ndarray
    total_length: float

    def to_dict(self) -> dict:
        return {
            "m": int(self.partition_m),
            "masses": [float(v) for v in self.masses],
            "point_counts": [int(v) for v in self.point_counts],
            "total_length": float(self.total_length),
        }


def parameterize(points, order=None) -> Curve:
    """Polyline through ``points`` in visit ``order`` (open, no closing edge)."""
    pts = np.asarray(getattr(points, "points", points), dtype=float)
    if order is not None:
        pts = pts[np.asarray(order, dtype=np.int64)]
    if pts.ndim != 2 or pts.shape[0] <= 1:
        raise DegenerateCurveError("a curve needs at least two vertices")
    seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    if cum[-1] <= 0.0:
        raise ZeroLengthCurveError("all vertices coincide")
    pts = pts.copy()
    pts.flags.writeable = False
    cum.flags.writeable = False
    return Curve(pts, cum)


def point_at(curve: Curve, t):
    """Position after a fraction ``t`` of the total arc length.

    Accepts a scalar or an array of parameters in ``[0, 1]``.
    """
    t_arr = np.asarray(t, dtype=float)
    if np.any((t_arr < 0.0) | (t_arr > 1.0)) or np.any(np.isnan(t_arr)):
        raise DomainError("curve parameter must lie in [0, 1]")
    s = t_arr.ravel() * curve.total_length
    cum = curve.cumulative_lengths
    k = np.clip(np.searchsorted(cum, s, side="right") - 1, 0, cum.size - 2)
    seg = cum[k + 1] - cum[k]
    # zero-length segments (repeated vertices) have nowhere to interpolate
    frac = np.divide(s - cum[k], seg, out=np.zeros_like(s), where=seg > 0)
    frac = np.clip(frac, 0.0, 1.0)
    v = curve.vertices
    out = v[k] + frac[:, None] * (v[k + 1] - v[k])
    if t_arr.ndim == 0:
        return out[0]
    return out.reshape(t_arr.shape + (curve.dim,))


def cell_index(coords: np.ndarray, m: int) -> np.ndarray:
    """Flat row-major index of the cell holding each point.

    A point on a shared face goes to the higher-index cell (floor), except at
    the far boundary 1.0 which belongs to the last cell.
    """
    ij = np.clip(np.floor(np.asarray(coords) * m).astype(np.int64), 0, m - 1)
    return np.ravel_multi_index(tuple(ij.T), (m,) * ij.shape[1])


def segment_pieces(a: np.ndarray, b: np.ndarray, m: int):
    """Split segments ``a[k] -> b[k]`` at every grid plane ``i / m``.

    Returns ``(seg_id, cell, frac)``: for each sub-piece, the segment it came
    from, the flat cell it lies in and its length as a fraction of the
    segment.  Pieces are ordered by segment, then along the segment.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    nseg, d = a.shape
    if m == 1:
        return np.arange(nseg), np.zeros(nseg, dtype=np.int64), np.ones(nseg)
    planes = np.arange(1, m) / m
    delta = b - a
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (planes[None, None, :] - a[:, :, None]) / delta[:, :, None]
    t = t.reshape(nseg, d * (m - 1))
    t = np.where(np.isfinite(t) & (t > 0.0) & (t < 1.0), t, 1.0)
    t = np.concatenate([np.zeros((nseg, 1)), np.sort(t, axis=1), np.ones((nseg, 1))], axis=1)
    frac = np.diff(t, axis=1)
    mid = 0.5 * (t[:, :-1] + t[:, 1:])
    pos = a[:, None, :] + mid[:, :, None] * delta[:, None, :]
    keep = frac > 0.0
    seg_id = np.broadcast_to(np.arange(nseg)[:, None], frac.shape)[keep]
    cells = cell_index(pos[keep], m)
    return seg_id, cells, frac[keep]


def empirical_measure(curve: Curve, m: int) -> EmpiricalMeasure:
    """Fraction of the curve's arc length inside each of the ``m**d`` cells.

    Segments are clipped exactly against the grid planes; each piece is
    assigned by its midpoint, which sends pieces lying on a face to the
    higher-index cell.
    """
    if m < 1:
        raise DomainError("partition needs m >= 1")
    v = curve.vertices
    d = curve.dim
    seg_len = np.diff(curve.cumulative_lengths)
    seg_id, cells, frac = segment_pieces(v[:-1], v[1:], m)
    masses = np.zeros(m ** d)
    # np.add.at accumulates sequentially, so the sum order is fixed
    np.add.at(masses, cells, frac * seg_len[seg_id])
    masses /= curve.total_length
    counts = np.bincount(cell_index(v, m), minlength=m ** d)
    return EmpiricalMeasure(m, masses, counts, curve.total_length)


def coarsen(masses: np.ndarray, m: int, dim: int, factor: int) -> np.ndarray:
    """Block-sum a flat ``m**dim`` mass vector down to ``(m // factor)**dim``."""
    if m % factor:
        raise ResolutionMismatchError(f"{m} is not a multiple of {factor}")
    c = m // factor
    blocks = np.asarray(masses).reshape(sum(((c, factor) for _ in range(dim)), ()))
    return blocks.sum(axis=tuple(range(1, 2 * dim, 2))).ravel()


def cell_masses(density: DensityGrid, m: int) -> np.ndarray:
    """Exact mass of ``density`` inside each partition cell (flat, row-major)."""
    g = density.resolution
    if m < 1 or g % m:
        raise ResolutionMismatchError(
            f"density resolution {g} is not a multiple of partition m={m}")
    return coarsen(density.masses, g, density.dim, g // m)
