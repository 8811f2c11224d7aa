"""Orthonormal separable 2D Haar transform (Mallat layout, in place)."""

import numpy as np

_S = 1.0 / np.sqrt(2.0)


def _split(a, axis):
    a = np.moveaxis(a, axis, 0)
    even, odd = a[0::2], a[1::2]
    out = np.concatenate([(even + odd) * _S, (even - odd) * _S], axis=0)
    return np.moveaxis(out, 0, axis)


def _merge(a, axis):
    a = np.moveaxis(a, axis, 0)
    h = a.shape[0] // 2
    s, d = a[:h], a[h:]
    out = np.empty_like(a)
    out[0::2] = (s + d) * _S
    out[1::2] = (s - d) * _S
    return np.moveaxis(out, 0, axis)


def max_levels(n: int) -> int:
    return int(np.log2(n))


def haar2(x: np.ndarray, levels: int) -> np.ndarray:
    """Forward transform; the coarse approximation ends up in the top-left corner."""
    c = np.array(x, dtype=float)
    n = c.shape[0]
    if c.shape != (n, n) or n & (n - 1):
        raise ValueError("Haar transform needs a square power-of-two array")
    if not 0 <= levels <= max_levels(n):
        raise ValueError(f"levels must be in [0, {max_levels(n)}]")
    size = n
    for _ in range(levels):
        block = c[:size, :size]
        c[:size, :size] = _split(_split(block, 0), 1)
        size //= 2
    return c


def ihaar2(c: np.ndarray, levels: int) -> np.ndarray:
    x = np.array(c, dtype=float)
    n = x.shape[0]
    size = n >> (levels - 1) if levels > 0 else n
    for _ in range(levels):
        block = x[:size, :size]
        x[:size, :size] = _merge(_merge(block, 1), 0)
        size *= 2
    return x
