"""Empirical checks of the curve-measure limit and the TSP lemmas.

All curves built here come from nearest-neighbour + 2-opt paths (except in
:func:`lemma_suite`, which uses the exact solver), so convergence figures are
empirical statements about heuristic curves.

Seeds: level ``k`` of a sweep (or trial ``k`` of a suite) uses ``seed + k``,
so reports do not depend on scheduling.  The corrected and the control run at
one level share that seed.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .curve import cell_masses, empirical_measure, parameterize
from .density import DensityGrid, curve_limit_density, exponent_transform, sample
from .errors import (DegenerateCurveError, DimensionError, InstanceTooLargeError,
                     InvalidInputError)
from .tsp import EXACT_MAX_N, Path, Region, exact_path, heuristic_path

VIOLATION_TOL = 1e-9


def tv_distance(mu, nu) -> float:
    """Total variation distance ``0.5 * sum |mu - nu|`` between mass vectors."""
    mu = np.asarray(mu, dtype=float).ravel()
    nu = np.asarray(nu, dtype=float).ravel()
    if mu.shape != nu.shape:
        raise DimensionError(f"mass vectors differ in length: {mu.size} vs {nu.size}")
    for v in (mu, nu):
        if abs(v.sum() - 1.0) > 1e-6:
            raise InvalidInputError(f"mass vector sums to {v.sum()}, not 1")
    return float(min(1.0, 0.5 * np.abs(mu - nu).sum()))


def bhh_ratio(points, path: Path) -> float:
    """Path length over ``N ** ((d - 1) / d)``."""
    pts = np.asarray(getattr(points, "points", points))
    n, d = pts.shape
    if n < 2:
        raise DegenerateCurveError("BHH ratio needs at least two points")
    return path.length / n ** ((d - 1) / d)


def power_integral(density: DensityGrid) -> float:
    """``integral of p ** ((d - 1) / d)`` over the cube, exact for grid densities."""
    d = density.dim
    return float((density.values ** ((d - 1) / d)).sum() * density.cell_volume)


@dataclass
class LevelRecord:
    N: int
    seed: int
    tv_corrected: float
    tv_uncorrected: float
    total_length: float
    bhh_ratio: float
    point_count_tv: float
    total_length_uncorrected: float


@dataclass
class ConvergenceReport:
    partition_m: int
    seed: int
    density: str
    records: list = field(default_factory=list)
    tv_control_limit: float = 0.0
    limit_integral: float = 0.0
    curve_kind: str = "nearest-neighbour + 2-opt (empirical, not optimal)"

    def to_dict(self) -> dict:
        return {
            "tool": "tsps",
            "version": __version__,
            "density": self.density,
            "partition_m": self.partition_m,
            "seed": self.seed,
            "curve_kind": self.curve_kind,
            "tv_control_limit": self.tv_control_limit,
            "limit_integral": self.limit_integral,
            "records": [asdict(r) for r in self.records],
        }


@dataclass
class BhhEstimate:
    Ns: list
    ratios: list
    limit_integral: float


def _curve_run(pi: DensityGrid, n: int, seed: int, m: int):
    pts = sample(pi, n, seed)
    path = heuristic_path(pts)
    meas = empirical_measure(parameterize(pts, path.order), m)
    return pts, path, meas


def _level(target, drawing, ref, drawing_ref, n, seed, m) -> LevelRecord:
    if n < 2:
        raise DegenerateCurveError("each level needs N >= 2")
    pts, path, meas = _curve_run(drawing, n, seed, m)
    _, path_u, meas_u = _curve_run(target, n, seed, m)
    return LevelRecord(
        N=int(n),
        seed=int(seed),
        tv_corrected=tv_distance(meas.masses, ref),
        tv_uncorrected=tv_distance(meas_u.masses, ref),
        total_length=path.length,
        bhh_ratio=bhh_ratio(pts, path),
        point_count_tv=tv_distance(meas.point_counts / n, drawing_ref),
        total_length_uncorrected=path_u.length,
    )


def convergence_experiment(target: DensityGrid, Ns, m: int, seed: int = 0,
                           description: str = "", threads: int = 1) -> ConvergenceReport:
    """Sweep ``Ns`` and measure how far each curve's cell masses are from ``target``.

    At each level the corrected run draws from ``exponent_transform(target)``;
    the control run draws from ``target`` itself.  ``point_count_tv``
    compares the corrected run's raw point counts with the drawing density.
    """
    Ns = [int(n) for n in Ns]
    if any(b <= a for a, b in zip(Ns, Ns[1:])):
        raise InvalidInputError("Ns must be strictly increasing")
    drawing = exponent_transform(target)
    ref = cell_masses(target, m)
    drawing_ref = cell_masses(drawing, m)
    control_limit = cell_masses(curve_limit_density(target), m)

    def run(k):
        return _level(target, drawing, ref, drawing_ref, Ns[k], seed + k, m)

    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            records = list(ex.map(run, range(len(Ns))))
    else:
        records = [run(k) for k in range(len(Ns))]
    return ConvergenceReport(
        partition_m=m, seed=seed,
        density=description or f"grid d={target.dim} g={target.resolution}",
        records=records,
        tv_control_limit=tv_distance(control_limit, ref),
        limit_integral=power_integral(drawing),
    )


def bhh_estimate(density: DensityGrid, Ns, seed: int = 0) -> BhhEstimate:
    """Heuristic-path BHH ratios at each ``N``; level ``k`` uses ``seed + k``."""
    ratios = []
    for k, n in enumerate(Ns):
        pts = sample(density, int(n), seed + k)
        ratios.append(bhh_ratio(pts, heuristic_path(pts)))
    return BhhEstimate([int(n) for n in Ns], ratios, power_integral(density))


def _quadrants(dim: int, m: int = 2):
    cells = []
    for idx in np.ndindex(*((m,) * dim)):
        lo = tuple(i / m for i in idx)
        hi = tuple((i + 1) / m for i in idx)
        cells.append(Region(lo, hi))
    return cells


def _exact_in(pts: np.ndarray, region: Region, boundary: bool) -> float:
    sub = pts[region.half_open_mask(pts)] if pts.size else pts
    return exact_path(sub, region if boundary else None).length


def lemma_suite(n: int, trials: int, seed: int = 0, dim: int = 2) -> dict:
    """Check the boundary-TSP inequalities with exact solvers on small instances.

    Per trial, on ``n`` uniform points (seed ``seed + trial``):

    * ``lower_bound``: T(F) >= T_B(F) on the unit cube;
    * ``restriction``: the optimal path's length inside each quadrant is at
      least the boundary path of that quadrant's points;
    * ``superadditive``: T_B on the cube >= sum of T_B over the two halves
      split on the first axis (open-path form; violations are only counted);
    * ``boundary_gap`` and ``grid_gap``: |T - T_B| and |T - sum T(quadrant)|
      divided by ``n ** ((d - 2) / (d - 1))``.
    """
    if n > EXACT_MAX_N:
        raise InstanceTooLargeError(f"lemma suite uses the exact solver (n <= {EXACT_MAX_N})")
    omega = Region.unit(dim)
    quads = _quadrants(dim)
    halves = [Region((0.0,) + (0.0,) * (dim - 1), (0.5,) + (1.0,) * (dim - 1)),
              Region((0.5,) + (0.0,) * (dim - 1), (1.0,) * dim)]
    scale = float(n) ** ((dim - 2) / (dim - 1)) if n > 0 else 1.0
    violations = {"lower_bound": 0, "restriction": 0, "superadditive": 0}
    rows = []
    for trial in range(trials):
        pts = sample(DensityGrid.uniform(dim, 1), n, seed + trial).points
        t_path = exact_path(pts)
        t_len = t_path.length
        tb_len = exact_path(pts, omega).length

        if t_len > 0:
            meas = empirical_measure(parameterize(pts, t_path.order), 2)
            restricted = meas.masses * t_len
        else:
            restricted = np.zeros(len(quads))
        tb_quads = [_exact_in(pts, q, boundary=True) for q in quads]
        t_quads = [_exact_in(pts, q, boundary=False) for q in quads]
        tb_halves = [_exact_in(pts, h, boundary=True) for h in halves]

        slack_lb = t_len - tb_len
        slack_rs = [float(r - b) for r, b in zip(restricted, tb_quads)]
        slack_sa = tb_len - sum(tb_halves)
        violations["lower_bound"] += slack_lb < -VIOLATION_TOL
        violations["restriction"] += sum(s < -VIOLATION_TOL for s in slack_rs)
        violations["superadditive"] += slack_sa < -VIOLATION_TOL
        rows.append({
            "trial": trial,
            "seed": seed + trial,
            "T": t_len,
            "T_B": tb_len,
            "lower_bound_slack": slack_lb,
            "restriction_slack_min": min(slack_rs),
            "superadditive_slack": slack_sa,
            "boundary_gap": abs(t_len - tb_len) / scale,
            "grid_gap": abs(t_len - sum(t_quads)) / scale,
        })
    return {
        "n": n,
        "trials": trials,
        "seed": seed,
        "dim": dim,
        "tolerance": VIOLATION_TOL,
        "violations": violations,
        "mean_boundary_gap": float(np.mean([r["boundary_gap"] for r in rows])) if rows else 0.0,
        "mean_grid_gap": float(np.mean([r["grid_gap"] for r in rows])) if rows else 0.0,
        "trials_detail": rows,
    }
