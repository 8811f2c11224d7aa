"""Open Hamiltonian paths over point sets.

Two metrics are supported: plain Euclidean, and the boundary-quotient metric
of an axis-aligned box ``R`` in which the whole boundary of ``R`` is glued to
a single point, so

    d_R(a, b) = min(|a - b|, dist(a, dR) + dist(b, dR)).

A metric is passed as ``None`` (Euclidean) or as the :class:`Region` whose
boundary is collapsed.  Internally both reduce to a per-point "boundary
offset" array (``inf`` for Euclidean) so one set of kernels serves both.

Solvers: greedy nearest neighbour, first-improvement 2-opt for open paths,
and an exact Held-Karp dynamic program with free endpoints for ``n <= 13``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np
from scipy.spatial import cKDTree

from .density import PointSet
from .errors import (DomainError, EmptyInputError, InstanceTooLargeError,
                     InvalidOrderError)

EXACT_MAX_N = 13
IMPROVEMENT_EPS = 1e-12
NEIGHBOR_SWEEP_MIN_N = 50
_INSIDE_TOL = 1e-12


@dataclass(frozen=True)
class Region:
    lo: tuple
    hi: tuple

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lo)
        hi = tuple(float(v) for v in self.hi)
        if len(lo) != len(hi):
            raise DomainError("lo and hi must have the same length")
        if any(a >= b for a, b in zip(lo, hi)):
            raise DomainError(f"empty region: lo={lo}, hi={hi}")
        if any(a < 0.0 for a in lo) or any(b > 1.0 for b in hi):
            raise DomainError("region must lie inside the unit cube")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def unit(cls, dim: int) -> "Region":
        return cls((0.0,) * dim, (1.0,) * dim)

    @property
    def dim(self) -> int:
        return len(self.lo)

    def contains(self, points: np.ndarray, tol: float = _INSIDE_TOL) -> np.ndarray:
        pts = np.atleast_2d(points)
        lo, hi = np.asarray(self.lo), np.asarray(self.hi)
        return np.all((pts >= lo - tol) & (pts <= hi + tol), axis=1)

    def half_open_mask(self, points: np.ndarray) -> np.ndarray:
        """Membership in ``[lo, hi)`` per axis, closed at 1.0.

        Used to split a point set among a partition without double counting.
        """
        pts = np.atleast_2d(points)
        lo, hi = np.asarray(self.lo), np.asarray(self.hi)
        upper = np.where(hi >= 1.0, pts <= hi, pts < hi)
        return np.all((pts >= lo) & upper, axis=1)

    def boundary_offsets(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if not np.all(self.contains(pts)):
            raise DomainError("point outside region")
        lo, hi = np.asarray(self.lo), np.asarray(self.hi)
        off = np.minimum(pts - lo, hi - pts).min(axis=1)
        return np.maximum(off, 0.0)


@dataclass(frozen=True)
class Path:
    order: np.ndarray
    length: float
    metric_tag: str = "euclidean"

    def __post_init__(self):
        order = np.asarray(self.order, dtype=np.int64).copy()
        order.flags.writeable = False
        object.__setattr__(self, "order", order)

    def __len__(self):
        return self.order.size


def metric_tag(metric: Region | None) -> str:
    return "euclidean" if metric is None else "boundary"


def _as_array(points) -> np.ndarray:
    if isinstance(points, PointSet):
        return np.ascontiguousarray(points.points, dtype=np.float64)
    return np.ascontiguousarray(np.atleast_2d(np.asarray(points, dtype=np.float64)))


def _offsets(pts: np.ndarray, metric: Region | None) -> np.ndarray:
    if metric is None:
        return np.full(pts.shape[0], np.inf)
    if pts.shape[0] == 0:
        return np.empty(0)
    if metric.dim != pts.shape[1]:
        raise DomainError("region and points differ in dimension")
    return np.ascontiguousarray(metric.boundary_offsets(pts))


def boundary_distance(a, b, r: Region) -> float:
    """Distance between ``a`` and ``b`` once the boundary of ``r`` is collapsed."""
    off = r.boundary_offsets(np.array([a, b], dtype=float))
    e = float(np.linalg.norm(np.asarray(a, dtype=float) - np.asarray(b, dtype=float)))
    return min(e, float(off[0] + off[1]))


def distance_matrix(points, metric: Region | None = None) -> np.ndarray:
    pts = _as_array(points)
    diff = pts[:, None, :] - pts[None, :, :]
    dm = np.sqrt((diff ** 2).sum(axis=-1))
    if metric is not None and pts.shape[0]:
        off = _offsets(pts, metric)
        dm = np.minimum(dm, off[:, None] + off[None, :])
        np.fill_diagonal(dm, 0.0)
    return dm


def _check_order(order, n: int) -> np.ndarray:
    order = np.asarray(order, dtype=np.int64).ravel()
    if order.size != n or not np.array_equal(np.sort(order), np.arange(n)):
        raise InvalidOrderError(f"order is not a permutation of 0..{n - 1}")
    return order


def path_length(points, order, metric: Region | None = None) -> float:
    pts = _as_array(points)
    order = _check_order(order, pts.shape[0])
    if order.size <= 1:
        return 0.0
    return float(_path_length(pts, _offsets(pts, metric), order))


# --- kernels -------------------------------------------------------------

@numba.njit(cache=True, nogil=True, inline="always")
def _d(pts, off, i, j):
    s = 0.0
    for k in range(pts.shape[1]):
        t = pts[i, k] - pts[j, k]
        s += t * t
    e = np.sqrt(s)
    q = off[i] + off[j]
    return q if q < e else e


@numba.njit(cache=True, nogil=True)
def _path_length(pts, off, order):
    total = 0.0
    for k in range(order.size - 1):
        total += _d(pts, off, order[k], order[k + 1])
    return total


@numba.njit(cache=True, nogil=True)
def _nearest_neighbor(pts, off, start):
    n = pts.shape[0]
    visited = np.zeros(n, dtype=np.bool_)
    order = np.empty(n, dtype=np.int64)
    order[0] = start
    visited[start] = True
    cur = start
    for k in range(1, n):
        best = -1
        best_d = np.inf
        for j in range(n):
            if not visited[j]:
                dj = _d(pts, off, cur, j)
                if dj < best_d:
                    best_d = dj
                    best = j
        order[k] = best
        visited[best] = True
        cur = best
    return order


@numba.njit(cache=True, nogil=True, inline="always")
def _dp(p, off, i, j):
    # distance between path positions i and j of the path-ordered arrays
    s = 0.0
    for k in range(p.shape[1]):
        t = p[i, k] - p[j, k]
        s += t * t
    e = np.sqrt(s)
    q = off[i] + off[j]
    return q if q < e else e


@numba.njit(cache=True, nogil=True, inline="always")
def _sq(p, i, j):
    s = 0.0
    for k in range(p.shape[1]):
        t = p[i, k] - p[j, k]
        s += t * t
    return s


@numba.njit(cache=True, nogil=True)
def _next_candidate(p, edge, i, j, n):
    """First ``j' >= j`` whose reversal of ``[i, j']`` could shorten the path.

    A reversal replaces edges (i-1, i) and (j, j+1) by (i-1, j) and
    (i, j+1); it can only improve if one new edge is shorter than the old
    edge at the same end.  Euclidean only; returns ``n`` when none is left.
    """
    last = n - 1
    if i == 0:
        # prefix reversal: only the right edge changes; j = last is a no-op
        for jj in range(j, last):
            if _sq(p, 0, jj + 1) < edge[jj] * edge[jj]:
                return jj
        return n
    dab2 = edge[i - 1] * edge[i - 1]
    if p.shape[1] == 2:
        ax = p[i - 1, 0]
        ay = p[i - 1, 1]
        bx = p[i, 0]
        by = p[i, 1]
        for jj in range(j, last):
            dx = ax - p[jj, 0]
            dy = ay - p[jj, 1]
            ex = bx - p[jj + 1, 0]
            ey = by - p[jj + 1, 1]
            if dx * dx + dy * dy < dab2 or ex * ex + ey * ey < edge[jj] * edge[jj]:
                return jj
    else:
        for jj in range(j, last):
            if _sq(p, i - 1, jj) < dab2 or _sq(p, i, jj + 1) < edge[jj] * edge[jj]:
                return jj
    if j <= last and _sq(p, i - 1, last) < dab2:
        return last
    return n


@numba.njit(cache=True, nogil=True)
def _two_opt(pts, off, order, max_passes, eps):
    # Coordinates, offsets and edge lengths are kept in path order so the
    # scan reads memory linearly; edge[k] joins positions k and k + 1.
    n = order.size
    dim = pts.shape[1]
    euclid = True
    for k in range(n):
        if off[k] != np.inf:
            euclid = False
    p = np.empty((n, dim))
    po = np.empty(n)
    for k in range(n):
        p[k] = pts[order[k]]
        po[k] = off[order[k]]
    edge = np.empty(max(n - 1, 0))
    for k in range(n - 1):
        edge[k] = _dp(p, po, k, k + 1)
    passes = 0
    while passes < max_passes:
        passes += 1
        improved = False
        for i in range(n - 1):
            j = i + 1
            while j < n:
                if euclid:
                    j = _next_candidate(p, edge, i, j, n)
                    if j >= n:
                        break
                if i == 0 and j == n - 1:
                    break  # reversing the whole path changes nothing
                delta = 0.0
                if i > 0:
                    delta += _dp(p, po, i - 1, j) - edge[i - 1]
                if j < n - 1:
                    delta += _dp(p, po, i, j + 1) - edge[j]
                if delta < -eps:
                    lo, hi = i, j
                    while lo < hi:
                        tmp = order[lo]
                        order[lo] = order[hi]
                        order[hi] = tmp
                        for k in range(dim):
                            t = p[lo, k]
                            p[lo, k] = p[hi, k]
                            p[hi, k] = t
                        t = po[lo]
                        po[lo] = po[hi]
                        po[hi] = t
                        lo += 1
                        hi -= 1
                    lo, hi = i, j - 1
                    while lo < hi:
                        t = edge[lo]
                        edge[lo] = edge[hi]
                        edge[hi] = t
                        lo += 1
                        hi -= 1
                    if i > 0:
                        edge[i - 1] = _dp(p, po, i - 1, i)
                    if j < n - 1:
                        edge[j] = _dp(p, po, j, j + 1)
                    improved = True
                j += 1
        if not improved:
            break
    return order, passes


@numba.njit(cache=True, nogil=True, inline="always")
def _move_delta(pts, off, order, i, j):
    n = order.size
    b = order[i]
    c = order[j]
    delta = 0.0
    if i > 0:
        a = order[i - 1]
        delta += _d(pts, off, a, c) - _d(pts, off, a, b)
    if j < n - 1:
        e = order[j + 1]
        delta += _d(pts, off, b, e) - _d(pts, off, c, e)
    return delta


@numba.njit(cache=True, nogil=True)
def _two_opt_neighbors(pts, off, order, nbrs, eps):
    """2-opt moves that create an edge to a listed near neighbour.

    Cities wait in a FIFO queue; a city leaves it when none of its candidate
    moves improves, and re-enters when one of its edges changes.
    """
    n = order.size
    k = nbrs.shape[1]
    pos = np.empty(n, dtype=np.int64)
    for p in range(n):
        pos[order[p]] = p
    queue = np.empty(n, dtype=np.int64)
    queued = np.ones(n, dtype=np.bool_)
    for p in range(n):
        queue[p] = order[p]
    head = 0
    size = n
    touched = np.empty(4, dtype=np.int64)
    moves = 0
    while size > 0:
        x = queue[head]
        head = (head + 1) % n
        size -= 1
        queued[x] = False
        improved = True
        while improved:
            improved = False
            for q in range(k):
                c = nbrs[x, q]
                if c < 0 or c == x:
                    continue
                px = pos[x]
                pc = pos[c]
                lo_p = min(px, pc)
                hi_p = max(px, pc)
                for variant in range(2):
                    i = lo_p + 1 - variant
                    j = hi_p - variant
                    if i >= j or (i == 0 and j == n - 1):
                        continue
                    if _move_delta(pts, off, order, i, j) < -eps:
                        touched[0] = order[i]
                        touched[1] = order[j]
                        touched[2] = order[i - 1] if i > 0 else order[i]
                        touched[3] = order[j + 1] if j < n - 1 else order[j]
                        lo, hi = i, j
                        while lo < hi:
                            tmp = order[lo]
                            order[lo] = order[hi]
                            order[hi] = tmp
                            pos[order[lo]] = lo
                            pos[order[hi]] = hi
                            lo += 1
                            hi -= 1
                        moves += 1
                        for t in range(4):
                            y = touched[t]
                            if not queued[y] and y != x:
                                queued[y] = True
                                queue[(head + size) % n] = y
                                size += 1
                        improved = True
                        break
                if improved:
                    break
    return order, moves


@numba.njit(cache=True, nogil=True)
def _held_karp(dm):
    n = dm.shape[0]
    full = (1 << n) - 1
    cost = np.full((1 << n, n), np.inf)
    parent = np.full((1 << n, n), -1, dtype=np.int64)
    for i in range(n):
        cost[1 << i, i] = 0.0
    for mask in range(1, full + 1):
        for last in range(n):
            c = cost[mask, last]
            if c == np.inf:
                continue
            for nxt in range(n):
                if mask & (1 << nxt):
                    continue
                m2 = mask | (1 << nxt)
                v = c + dm[last, nxt]
                if v < cost[m2, nxt]:
                    cost[m2, nxt] = v
                    parent[m2, nxt] = last
    last = 0
    for i in range(1, n):
        if cost[full, i] < cost[full, last]:
            last = i
    best = cost[full, last]
    order = np.empty(n, dtype=np.int64)
    mask = full
    for k in range(n - 1, -1, -1):
        order[k] = last
        prev = parent[mask, last]
        mask ^= 1 << last
        last = prev
    return order, best


# --- public solvers ------------------------------------------------------

def nearest_neighbor(points, metric: Region | None = None, start: int = 0) -> Path:
    """Greedy path from ``start``; ties go to the lowest index."""
    pts = _as_array(points)
    n = pts.shape[0]
    if n == 0:
        raise EmptyInputError("nearest_neighbor needs at least one point")
    if not 0 <= start < n:
        raise DomainError(f"start index {start} out of range for {n} points")
    off = _offsets(pts, metric)
    order = _nearest_neighbor(pts, off, start)
    return Path(order, float(_path_length(pts, off, order)), metric_tag(metric))


def near_neighbors(pts: np.ndarray, k: int) -> np.ndarray:
    """Indices of the ``k`` nearest other points (Euclidean), ``-1`` padded."""
    n = pts.shape[0]
    kk = min(k + 1, n)
    _, idx = cKDTree(pts).query(pts, k=kk)
    idx = np.asarray(idx, dtype=np.int64).reshape(n, kk)
    out = np.full((n, k), -1, dtype=np.int64)
    for row in range(n):
        others = idx[row][idx[row] != row][:k]
        out[row, :others.size] = others
    return out


def two_opt(points, path: Path, metric: Region | None = None,
            max_passes: int = 1000, neighbors: int = 10) -> Path:
    """First-improvement 2-opt for open paths.

    Any contiguous block may be reversed, including prefixes and suffixes, so
    the endpoints can move.  When ``neighbors > 0`` and the instance is large
    enough, a neighbour-list sweep applies the cheap improving moves first.
    Exhaustive scans then run until a pass finds no move improving the length
    by more than ``IMPROVEMENT_EPS`` or ``max_passes`` scans are done.
    """
    pts = _as_array(points)
    order = _check_order(path.order, pts.shape[0]).copy()
    off = _offsets(pts, metric)
    if order.size >= 3 and max_passes > 0:
        if neighbors > 0 and order.size > NEIGHBOR_SWEEP_MIN_N:
            nbrs = near_neighbors(pts, neighbors)
            order, _ = _two_opt_neighbors(pts, off, order, nbrs, IMPROVEMENT_EPS)
        order, _ = _two_opt(pts, off, order, max_passes, IMPROVEMENT_EPS)
    length = float(_path_length(pts, off, order)) if order.size > 1 else 0.0
    return Path(order, length, metric_tag(metric))


def exact_path(points, metric: Region | None = None) -> Path:
    """Shortest Hamiltonian path (free endpoints) by Held-Karp, ``n <= 13``."""
    pts = _as_array(points)
    n = pts.shape[0]
    if n > EXACT_MAX_N:
        raise InstanceTooLargeError(f"exact solver is capped at {EXACT_MAX_N} points, got {n}")
    if n <= 1:
        return Path(np.arange(n), 0.0, metric_tag(metric))
    order, _ = _held_karp(np.ascontiguousarray(distance_matrix(pts, metric)))
    off = _offsets(pts, metric)
    return Path(order, float(_path_length(pts, off, order)), metric_tag(metric))


def heuristic_path(points, metric: Region | None = None, start: int = 0,
                   improve: bool = True, max_passes: int = 1000,
                   neighbors: int = 10) -> Path:
    """Nearest neighbour followed (optionally) by 2-opt."""
    path = nearest_neighbor(points, metric, start)
    if improve:
        path = two_opt(points, path, metric, max_passes, neighbors)
    return path
