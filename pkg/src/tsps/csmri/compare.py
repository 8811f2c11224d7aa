"""Side-by-side reconstruction quality for three k-space sampling schemes.

* ``A_iid``: distinct cells drawn i.i.d. from the target density;
* ``B_tsp``: TSP curve through points drawn from the target, rasterized;
* ``C_tsp_corrected``: TSP curve through points drawn from the
  exponent-corrected density, rasterized.

All three masks sample the same number of cells, ``round(n**2 / r)``, up to
a 2% calibration tolerance for the curve schemes.  Scheme ``k`` (0, 1, 2)
uses seed ``seed + k``.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .. import __version__
from ..curve import parameterize
from ..density import DensityGrid, exponent_transform, sample
from ..errors import CalibrationError, DimensionError, InvalidInputError
from ..tsp import heuristic_path
from .masks import KSpaceMask, iid_mask, rasterize
from .operators import ReconConfig, default_lambda, measure, psnr, solve_l1

SCHEMES = ("A_iid", "B_tsp", "C_tsp_corrected")
LAMBDA_FACTORS = (0.1, 1.0, 10.0)
BUDGET_TOL = 0.02
MAX_CALIBRATION_STEPS = 30
MAX_POINTS_PER_CELL = 16  # near-full masks need about 8


@dataclass
class SchemeResult:
    name: str
    mask: KSpaceMask
    n_points: int
    lam: float
    psnr_db: float
    psnr_grid: dict
    reconstruction: np.ndarray
    calibration_steps: int = 0

    def to_dict(self) -> dict:
        return {
            "psnr_db": self.psnr_db,
            "sampled_fraction": self.mask.sampled_fraction,
            "n_points": self.n_points,
            "lambda": self.lam,
            "psnr_grid": {f"{k:g}": v for k, v in self.psnr_grid.items()},
            "calibration_steps": self.calibration_steps,
        }


@dataclass
class ComparisonReport:
    r: float
    seed: int
    budget: int
    side: int
    schemes: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {name: self.schemes[name].to_dict() for name in SCHEMES}
        out["meta"] = {
            "tool": "tsps",
            "version": __version__,
            "r": self.r,
            "seed": self.seed,
            "budget": self.budget,
            "side": self.side,
            "discretization": "curve rasterized by grid traversal",
        }
        return out


def trajectory_mask(drawing: DensityGrid, n_points: int, seed: int, n: int) -> KSpaceMask:
    pts = sample(drawing, n_points, seed)
    if n_points < 2:
        return rasterize_points(pts.points, n)
    path = heuristic_path(pts)
    return rasterize(parameterize(pts, path.order), n)


def rasterize_points(points: np.ndarray, n: int) -> KSpaceMask:
    cells = np.zeros((n, n), dtype=bool)
    if len(points):
        ij = np.clip(np.floor(points * n).astype(int), 0, n - 1)
        cells[ij[:, 0], ij[:, 1]] = True
    return KSpaceMask(cells)


def calibrate_trajectory(drawing: DensityGrid, budget: int, seed: int,
                         tol: float = BUDGET_TOL, max_steps: int = MAX_CALIBRATION_STEPS):
    """Bisect the number of drawn points until the rasterized mask hits ``budget``.

    Samples are nested in ``n_points`` (same seed), so the cell count grows
    almost monotonically.  Gives up after ``max_steps`` evaluations or once
    ``MAX_POINTS_PER_CELL * n**2`` points still fall short.  Returns
    ``(mask, n_points, steps)``.
    """
    n = drawing.resolution
    lo_ok, hi_ok = (1.0 - tol) * budget, (1.0 + tol) * budget
    steps = 0

    def evaluate(k):
        nonlocal steps
        steps += 1
        if steps > max_steps:
            raise CalibrationError(
                f"no point count within {tol:.0%} of budget {budget} after {max_steps} steps")
        return trajectory_mask(drawing, k, seed, n)

    lo, hi = 1, None
    k = max(2, budget // 4)
    k_max = MAX_POINTS_PER_CELL * n * n
    while True:
        mask = evaluate(k)
        c = mask.count
        if lo_ok <= c <= hi_ok:
            return mask, k, steps
        if c < budget:
            lo = k
            if hi is None:
                if k >= k_max:
                    raise CalibrationError(
                        f"{k} points cover only {c} cells, budget is {budget}")
                k = min(2 * k, k_max)
                continue
        else:
            hi = k
        if hi - lo <= 1:
            raise CalibrationError(
                f"cell count jumps past the budget between {lo} and {hi} points")
        # bisect in log scale: the count grows roughly like sqrt(points)
        k = int(round(np.sqrt(lo * hi)))
        k = min(max(k, lo + 1), hi - 1)


def _run_scheme(name, image, target, budget, seed, cfg):
    n = target.resolution
    steps = 0
    if name == "A_iid":
        mask = iid_mask(target, budget, seed)
        n_points = mask.count
    else:
        drawing = target if name == "B_tsp" else exponent_transform(target)
        mask, n_points, steps = calibrate_trajectory(drawing, budget, seed)
    y = measure(image, mask)
    base = default_lambda(y, mask, cfg.wavelet_levels) if cfg.lam is None else cfg.lam
    grid, recons = {}, {}
    for f in LAMBDA_FACTORS:
        c = ReconConfig(lam=base * f, max_iters=cfg.max_iters,
                        tolerance=cfg.tolerance, wavelet_levels=cfg.wavelet_levels)
        res = solve_l1(y, mask, c)
        recons[f] = res.image
        grid[f] = psnr(image, res.image)
    return SchemeResult(name, mask, int(n_points), base, grid[1.0], grid,
                        recons[1.0], steps)


@dataclass(frozen=True)
class ComparisonConfig:
    lam: float | None = None
    max_iters: int = 300
    tolerance: float = 1e-6
    wavelet_levels: int = 4


def scheme_comparison(image: np.ndarray, target: DensityGrid, r: float, seed: int = 0,
                      cfg: ComparisonConfig | None = None, threads: int = 1) -> ComparisonReport:
    """Build the three masks at sampling fraction ``1 / r`` and reconstruct with each.

    ``lam=None`` in ``cfg`` selects ``1e-3 * max|A^T y|`` per scheme; every
    scheme is also reconstructed at 0.1x and 10x that value.
    """
    cfg = cfg or ComparisonConfig()
    image = np.asarray(image, dtype=float)
    n = image.shape[0]
    if image.shape != (n, n):
        raise DimensionError("image must be square")
    if target.dim != 2 or target.resolution != n:
        raise DimensionError(
            f"target density must be 2D with resolution {n}, got d={target.dim} g={target.resolution}")
    if not r > 1:
        raise InvalidInputError("acceleration factor r must exceed 1")
    budget = int(round(n * n / r))

    def run(k):
        return _run_scheme(SCHEMES[k], image, target, budget, seed + k, cfg)

    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            results = list(ex.map(run, range(len(SCHEMES))))
    else:
        results = [run(k) for k in range(len(SCHEMES))]
    return ComparisonReport(r=float(r), seed=seed, budget=budget, side=n,
                            schemes={res.name: res for res in results})
