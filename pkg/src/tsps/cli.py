"""Command-line entry point: ``tsps <subcommand> ...``.

Exit codes: 0 success, 2 input error, 3 infeasible request, 4 numeric failure.
Every artifact carries the seed, tool version and subcommand arguments: JSON
files in a ``meta`` block, CSV files in a ``<file>.json`` sidecar and PGM
files in header comments.  Output paths are left out of the recorded
arguments so identical runs into different directories match byte for byte.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import __version__
from . import io
from .csmri import ComparisonConfig, phantom, scheme_comparison
from .curve import empirical_measure, parameterize
from .density import exponent_transform, radial_density, sample
from .errors import (CalibrationError, DegenerateCurveError, InfeasibleError,
                     InstanceTooLargeError, TspsError)
from .tsp import Region, exact_path, heuristic_path, nearest_neighbor
from .verify import convergence_experiment

EXIT_OK, EXIT_INPUT, EXIT_INFEASIBLE, EXIT_NUMERIC = 0, 2, 3, 4

# output locations and thread counts do not change results
_UNRECORDED = {"out", "outdir", "csv", "measure", "func", "command", "threads"}


class CliError(Exception):
    def __init__(self, message, code=EXIT_INPUT):
        super().__init__(message)
        self.code = code


def _meta(args) -> dict:
    recorded = {k: v for k, v in sorted(vars(args).items()) if k not in _UNRECORDED}
    return {"tool": "tsps", "version": __version__, "subcommand": args.command,
            "seed": args.seed, "args": recorded}


def _threads(args) -> int:
    if getattr(args, "threads", None):
        return args.threads
    try:
        return max(1, int(os.environ.get("TSPS_THREADS", "1")))
    except ValueError:
        return 1


def _require_file(path):
    if not os.path.isfile(path):
        raise CliError(f"no such file: {path}")


def _load_density(path):
    _require_file(path)
    try:
        return io.read_density(path)
    except TspsError as exc:
        raise CliError(f"{path}: {exc}") from None


def _load_points(path):
    _require_file(path)
    try:
        return io.read_points(path)
    except TspsError as exc:
        raise CliError(f"{path}: {exc}") from None


def _check_out_dir(path):
    parent = os.path.dirname(os.path.abspath(path))
    if not os.path.isdir(parent):
        raise CliError(f"output directory does not exist: {parent}")


def _write_csv_with_sidecar(path, text, sidecar):
    with io.atomic_write(path) as fh:
        fh.write(text)
    io.write_json(path + ".json", sidecar)


# --- subcommands ---------------------------------------------------------

def cmd_sample(args):
    density = _load_density(args.density)
    _check_out_dir(args.out)
    if args.n < 0:
        raise CliError("--n must be nonnegative")
    pi = exponent_transform(density) if args.correct else density
    pts = sample(pi, args.n, args.seed)
    sidecar = {"n": len(pts), "corrected": args.correct, "meta": _meta(args)}
    _write_csv_with_sidecar(args.out, io.format_points(pts.points), sidecar)


def cmd_path(args):
    pts = _load_points(args.points)
    _check_out_dir(args.out)
    n = len(pts)
    if n == 0:
        raise CliError("path needs at least one point")
    metric = Region.unit(pts.dim) if args.metric == "boundary" else None
    if args.heuristic == "exact":
        path = exact_path(pts, metric)
    else:
        starts = [0]
        if args.restarts > 1:
            rng = np.random.Generator(np.random.PCG64(args.seed))
            extra = rng.choice(n, size=min(n, args.restarts) - 1, replace=False) if n > 1 else []
            starts += [int(s) for s in extra if s != 0]
        path = None
        for s in starts:
            cand = (nearest_neighbor(pts, metric, s) if args.no_2opt
                    else heuristic_path(pts, metric, start=s))
            if path is None or cand.length < path.length:
                path = cand
    sidecar = io.path_sidecar(path, args.seed, {"heuristic": args.heuristic, "meta": _meta(args)})
    _write_csv_with_sidecar(args.out, io.format_path(path), sidecar)


def cmd_curve(args):
    pts = _load_points(args.points)
    _require_file(args.path)
    try:
        order = io.read_path_order(args.path)
    except TspsError as exc:
        raise CliError(f"{args.path}: {exc}") from None
    _check_out_dir(args.out)
    curve = parameterize(pts, order)
    meas = empirical_measure(curve, args.m)
    _write_csv_with_sidecar(args.out, io.format_points(curve.vertices),
                            {"total_length": curve.total_length, "meta": _meta(args)})
    if args.measure:
        out = meas.to_dict()
        out["meta"] = _meta(args)
        io.write_json(args.measure, out)


def cmd_verify(args):
    density = _load_density(args.density)
    _check_out_dir(args.out)
    m = args.m if args.m else (4 if density.dim == 2 else 2)
    report = convergence_experiment(density, args.Ns, m, args.seed,
                                    description=os.path.basename(args.density),
                                    threads=_threads(args))
    out = report.to_dict()
    out["meta"] = _meta(args)
    io.write_json(args.out, out)
    if args.csv:
        cols = ["N", "seed", "tv_corrected", "tv_uncorrected", "total_length",
                "bhh_ratio", "point_count_tv"]
        lines = [",".join(cols)]
        for rec in out["records"]:
            lines.append(",".join(str(rec[c]) if isinstance(rec[c], int)
                                  else f"{rec[c]:.17g}" for c in cols))
        _write_csv_with_sidecar(args.csv, "\n".join(lines) + "\n", {"meta": _meta(args)})


def _run_mri(args, image, density):
    n = image.shape[0]
    if image.shape != (n, n) or n & (n - 1) or n < 2:
        raise CliError(f"image must be square with power-of-two side, got {image.shape}")
    if density.dim != 2 or density.resolution != n:
        raise CliError(f"density resolution {density.resolution} (d={density.dim}) "
                       f"does not match image side {n}")
    cfg = ComparisonConfig(lam=args.lam, max_iters=args.max_iters)
    report = scheme_comparison(image, density, args.r, args.seed, cfg, threads=_threads(args))
    os.makedirs(args.outdir, exist_ok=True)
    comments = [f"tsps {__version__} {args.command} seed={args.seed} r={args.r}"]
    for name, res in report.schemes.items():
        io.write_pgm(os.path.join(args.outdir, f"mask_{name}.pgm"), res.mask.cells.astype(float),
                     8, comments)
        io.write_pgm(os.path.join(args.outdir, f"recon_{name}.pgm"), res.reconstruction,
                     16, comments)
    out = report.to_dict()
    out["meta"].update(_meta(args))
    io.write_json(os.path.join(args.outdir, "report.json"), out)
    return out


def cmd_mri(args):
    _require_file(args.image)
    density = _load_density(args.density)
    try:
        image = io.read_pgm(args.image)
    except TspsError as exc:
        raise CliError(f"{args.image}: {exc}") from None
    _run_mri(args, image, density)


def cmd_demo(args):
    os.makedirs(args.outdir, exist_ok=True)
    n = args.side
    image = phantom(n)
    density = radial_density(2, n)
    io.write_density(os.path.join(args.outdir, "density.txt"), density)
    io.write_pgm(os.path.join(args.outdir, "phantom.pgm"), image, 16,
                 [f"tsps {__version__} demo phantom"])
    verify_density = radial_density(2, 64)
    report = convergence_experiment(verify_density, args.Ns, 4, args.seed,
                                    description="default radial density, g=64",
                                    threads=_threads(args))
    out = report.to_dict()
    out["meta"] = _meta(args)
    io.write_json(os.path.join(args.outdir, "verify.json"), out)
    mri = _run_mri(args, image, density)
    for rec in out["records"]:
        print(f"N={rec['N']:>6}  tv_corrected={rec['tv_corrected']:.4f}  "
              f"tv_uncorrected={rec['tv_uncorrected']:.4f}")
    for name in ("A_iid", "B_tsp", "C_tsp_corrected"):
        print(f"{name:<16} PSNR {mri[name]['psnr_db']:.2f} dB  "
              f"fraction {mri[name]['sampled_fraction']:.4f}")


# --- parser --------------------------------------------------------------

def _int_list(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tsps", description="TSP-based variable-density sampling trajectories.")
    parser.add_argument("--version", action="version", version=f"tsps {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, threads=False):
        p.add_argument("--seed", type=int, default=0)
        if threads:
            p.add_argument("--threads", type=int, default=None,
                           help="worker threads (default: $TSPS_THREADS or 1)")

    p = sub.add_parser("sample", help="draw points from a density file")
    p.add_argument("density")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--correct", dest="correct", action="store_true", default=True,
                   help="draw from the exponent-corrected density (default)")
    p.add_argument("--no-correct", dest="correct", action="store_false")
    p.add_argument("-o", "--out", required=True)
    common(p)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("path", help="order points into a short Hamiltonian path")
    p.add_argument("points")
    p.add_argument("--heuristic", choices=["nn2opt", "exact"], default="nn2opt")
    p.add_argument("--no-2opt", action="store_true", help="nearest neighbour only")
    p.add_argument("--metric", choices=["euclidean", "boundary"], default="euclidean")
    p.add_argument("--restarts", type=int, default=1,
                   help="try this many start indices and keep the shortest")
    p.add_argument("-o", "--out", required=True)
    common(p)
    p.set_defaults(func=cmd_path)

    p = sub.add_parser("curve", help="export the curve and its cell measure")
    p.add_argument("points")
    p.add_argument("path")
    p.add_argument("--m", type=int, default=4)
    p.add_argument("--measure", default=None, help="write the empirical measure JSON here")
    p.add_argument("-o", "--out", required=True)
    common(p)
    p.set_defaults(func=cmd_curve)

    p = sub.add_parser("verify", help="corrected vs control convergence sweep")
    p.add_argument("density")
    p.add_argument("--Ns", type=_int_list, default=[100, 1000, 5000])
    p.add_argument("--m", type=int, default=None, help="default 4 in 2D, 2 in 3D")
    p.add_argument("--csv", default=None)
    p.add_argument("-o", "--out", required=True)
    common(p, threads=True)
    p.set_defaults(func=cmd_verify)

    def mri_opts(p):
        p.add_argument("--r", type=float, default=5.0)
        p.add_argument("--lam", type=float, default=None,
                       help="fixed lambda (default: 1e-3 * max|A^T y| per scheme)")
        p.add_argument("--max-iters", type=int, default=300)

    p = sub.add_parser("mri", help="compare the three sampling schemes on an image")
    p.add_argument("image")
    p.add_argument("density")
    mri_opts(p)
    p.add_argument("-o", "--outdir", required=True)
    common(p, threads=True)
    p.set_defaults(func=cmd_mri)

    p = sub.add_parser("demo", help="run the whole pipeline on bundled inputs")
    p.add_argument("--side", type=int, default=128)
    p.add_argument("--Ns", type=_int_list, default=[100, 1000, 5000])
    mri_opts(p)
    p.add_argument("-o", "--outdir", default="tsps-demo")
    common(p, threads=True)
    p.set_defaults(func=cmd_demo)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except CliError as exc:
        print(f"tsps {args.command}: {exc}", file=sys.stderr)
        return exc.code
    except (InstanceTooLargeError, InfeasibleError) as exc:
        print(f"tsps {args.command}: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (CalibrationError, DegenerateCurveError, FloatingPointError) as exc:
        print(f"tsps {args.command}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (TspsError, OSError) as exc:
        print(f"tsps {args.command}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
