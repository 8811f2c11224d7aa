import numpy as np

# (centre_x, centre_y, half_axis_x, half_axis_y, angle_deg, value); later shapes overwrite
_ELLIPSES = [
    (0.00, 0.00, 0.69, 0.90, 0.0, 0.55),
    (0.00, -0.02, 0.62, 0.82, 0.0, 0.25),
    (0.22, 0.00, 0.11, 0.31, -18.0, 0.05),
    (-0.22, 0.00, 0.16, 0.41, 18.0, 0.10),
    (0.00, 0.35, 0.21, 0.25, 0.0, 0.45),
    (0.00, 0.10, 0.046, 0.046, 0.0, 0.80),
    (-0.08, -0.605, 0.046, 0.023, 0.0, 0.90),
    (0.06, -0.605, 0.023, 0.046, 0.0, 0.90),
    (0.40, -0.40, 0.08, 0.12, 30.0, 0.70),
]


def phantom(n: int = 128) -> np.ndarray:
    """Deterministic test image in [0, 1]: overlapping ellipses plus a smooth bump."""
    c = (np.arange(n) + 0.5) / n * 2.0 - 1.0
    yy, xx = np.meshgrid(c, c, indexing="ij")
    img = np.zeros((n, n))
    for cx, cy, ax, ay, ang, val in _ELLIPSES:
        th = np.deg2rad(ang)
        u = (xx - cx) * np.cos(th) + (yy - cy) * np.sin(th)
        v = -(xx - cx) * np.sin(th) + (yy - cy) * np.cos(th)
        img[(u / ax) ** 2 + (v / ay) ** 2 <= 1.0] = val
    # a rectangle adds straight edges along both axes
    img[(np.abs(xx + 0.35) < 0.08) & (np.abs(yy + 0.45) < 0.05)] = 0.75
    img += 0.2 * np.exp(-((xx - 0.15) ** 2 + (yy + 0.15) ** 2) / (2 * 0.18 ** 2))
    return np.clip(img, 0.0, 1.0)
