"""Readers and writers for the on-disk formats.

* density grid: text, header ``density <d> <g>`` then ``g**d`` nonnegative
  reals in row-major order (last axis fastest), any whitespace;
* points / curves: CSV with header ``x0,x1[,x2]``, 17 significant digits;
* paths: CSV with header ``index`` plus a JSON sidecar;
* images and masks: binary PGM (P5), 8 or 16 bit, scaled to [0, 1].

Writers go through :func:`atomic_write` so a failed run leaves no partial
files behind.
"""

from __future__ import annotations

import json
import os
import tempfile
from contextlib import contextmanager

import numpy as np

from .density import DensityGrid, PointSet
from .errors import InvalidDensityError, ParseError
from .tsp import Path


@contextmanager
def atomic_write(path, mode="w"):
    """Write to a temporary file in the target directory, rename on success."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=directory)
    try:
        with os.fdopen(fd, mode) as fh:
            yield fh
        umask = os.umask(0)
        os.umask(umask)
        os.chmod(tmp, 0o666 & ~umask)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dumps_json(obj) -> str:
    """Stable JSON text: fixed key order from the dicts we build, repr floats."""
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


def write_json(path, obj):
    with atomic_write(path) as fh:
        fh.write(dumps_json(obj))


# --- density -------------------------------------------------------------

def parse_density(text: str) -> DensityGrid:
    tokens = []  # (line, column, token)
    for lineno, line in enumerate(text.splitlines(), start=1):
        for col, tok in enumerate(line.split(), start=1):
            tokens.append((lineno, col, tok))
    if len(tokens) < 3 or tokens[0][2] != "density":
        raise ParseError("line 1: expected header 'density <d> <g>'")
    try:
        d = int(tokens[1][2])
        g = int(tokens[2][2])
    except ValueError:
        raise ParseError("line 1: dimension and resolution must be integers") from None
    if d < 1 or g < 1:
        raise ParseError(f"line 1: invalid shape d={d}, g={g}")
    body = tokens[3:]
    if len(body) != g ** d:
        raise ParseError(f"expected {g ** d} values after the header, found {len(body)}")
    values = np.empty(len(body))
    for k, (lineno, col, tok) in enumerate(body):
        try:
            v = float(tok)
        except ValueError:
            raise ParseError(f"line {lineno}, field {col}: not a number: {tok!r}") from None
        if not np.isfinite(v) or v < 0:
            raise ParseError(f"line {lineno}, field {col}: value must be finite and >= 0")
        values[k] = v
    try:
        return DensityGrid(d, g, values.reshape((g,) * d))
    except InvalidDensityError as exc:
        raise ParseError(str(exc)) from None


def read_density(path) -> DensityGrid:
    with open(path) as fh:
        return parse_density(fh.read())


def format_density(grid: DensityGrid) -> str:
    g = grid.resolution
    rows = grid.values.reshape(-1, g)
    lines = [f"density {grid.dim} {g}"]
    lines += [" ".join(f"{v:.17g}" for v in row) for row in rows]
    return "\n".join(lines) + "\n"


def write_density(path, grid: DensityGrid):
    with atomic_write(path) as fh:
        fh.write(format_density(grid))


# --- points, curves, paths -----------------------------------------------

def format_points(points: np.ndarray) -> str:
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    d = pts.shape[1]
    lines = [",".join(f"x{k}" for k in range(d))]
    lines += [",".join(f"{v:.17g}" for v in row) for row in pts]
    return "\n".join(lines) + "\n"


def parse_points(text: str) -> PointSet:
    lines = text.splitlines()
    if not lines:
        raise ParseError("line 1: missing header")
    header = [h.strip() for h in lines[0].split(",")]
    d = len(header)
    if header != [f"x{k}" for k in range(d)] or d < 1:
        raise ParseError(f"line 1: expected header x0,x1[,x2], got {lines[0]!r}")
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        fields = line.split(",")
        if len(fields) != d:
            raise ParseError(f"line {lineno}: expected {d} fields, got {len(fields)}")
        try:
            rows.append([float(f) for f in fields])
        except ValueError:
            bad = next(k for k, f in enumerate(fields, 1) if not _is_float(f))
            raise ParseError(f"line {lineno}, field {bad}: not a number") from None
    pts = np.array(rows, dtype=float).reshape(-1, d)
    if pts.size and (pts.min() < 0 or pts.max() > 1):
        raise ParseError("points must lie in [0, 1]")
    return PointSet(d, pts)


def _is_float(s):
    try:
        float(s)
        return True
    except ValueError:
        return False


def read_points(path) -> PointSet:
    with open(path) as fh:
        return parse_points(fh.read())


def write_points(path, points):
    pts = getattr(points, "points", points)
    with atomic_write(path) as fh:
        fh.write(format_points(pts))


def format_path(path: Path) -> str:
    return "index\n" + "".join(f"{int(i)}\n" for i in path.order)


def parse_path_order(text: str) -> np.ndarray:
    lines = text.splitlines()
    if not lines or lines[0].strip() != "index":
        raise ParseError("line 1: expected header 'index'")
    out = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            out.append(int(line))
        except ValueError:
            raise ParseError(f"line {lineno}, field 1: not an integer") from None
    return np.array(out, dtype=np.int64)


def read_path_order(path) -> np.ndarray:
    with open(path) as fh:
        return parse_path_order(fh.read())


def path_sidecar(path: Path, seed, extra: dict | None = None) -> dict:
    out = {"length": float(path.length), "metric": path.metric_tag,
           "n": len(path), "seed": seed}
    if extra:
        out.update(extra)
    return out


# --- PGM -----------------------------------------------------------------

def _pgm_token(data: bytes, pos: int):
    while True:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        break
    start = pos
    while pos < len(data) and not data[pos:pos + 1].isspace():
        pos += 1
    if start == pos:
        raise ParseError("truncated PGM header")
    return data[start:pos], pos


def decode_pgm(data: bytes) -> np.ndarray:
    """Binary PGM to a float array in [0, 1]."""
    magic, pos = _pgm_token(data, 0)
    if magic != b"P5":
        raise ParseError("only binary PGM (P5) is supported")
    try:
        w, pos = _pgm_token(data, pos)
        h, pos = _pgm_token(data, pos)
        maxval, pos = _pgm_token(data, pos)
        w, h, maxval = int(w), int(h), int(maxval)
    except ValueError:
        raise ParseError("PGM header fields must be integers") from None
    if not 0 < maxval < 65536:
        raise ParseError(f"PGM maxval {maxval} out of range")
    pos += 1  # single whitespace before the raster
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    count = w * h
    raw = np.frombuffer(data, dtype=dtype, count=count, offset=pos) \
        if len(data) - pos >= count * dtype.itemsize else None
    if raw is None:
        raise ParseError("PGM raster is truncated")
    return raw.reshape(h, w).astype(float) / maxval


def read_pgm(path) -> np.ndarray:
    with open(path, "rb") as fh:
        return decode_pgm(fh.read())


def encode_pgm(image: np.ndarray, bits: int = 8, comments=()) -> bytes:
    img = np.clip(np.asarray(image, dtype=float), 0.0, 1.0)
    maxval = 255 if bits == 8 else 65535
    h, w = img.shape
    header = b"P5\n"
    for c in comments:
        header += b"# " + c.encode("ascii", "replace") + b"\n"
    header += f"{w} {h}\n{maxval}\n".encode()
    raster = np.round(img * maxval).astype(">u2" if bits == 16 else "u1")
    return header + raster.tobytes()


def write_pgm(path, image, bits: int = 8, comments=()):
    with atomic_write(path, "wb") as fh:
        fh.write(encode_pgm(image, bits, comments))
