import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tsps.curve import cell_index, parameterize, segment_pieces
from tsps.density import DensityGrid, exponent_transform, normalize, radial_density
from tsps.errors import (CalibrationError, DimensionError, InfeasibleError, InvalidInputError)
from tsps.csmri import (ComparisonConfig, KSpaceMask, ReconConfig, iid_mask, measure, phantom,
                        psnr, rasterize, reconstruct, scheme_comparison)
from tsps.csmri.compare import calibrate_trajectory, trajectory_mask
from tsps.csmri.haar import haar2, ihaar2, max_levels
from tsps.csmri.masks import dc_index, uniform_mask
from tsps.csmri.operators import SamplingOperator, default_lambda, kspace, solve_l1


def supersample_cells(a, b, n, samples=100_000):
    t = np.linspace(0.0, 1.0, samples)[:, None]
    pts = np.asarray(a) + t * (np.asarray(b) - np.asarray(a))
    return set(cell_index(pts, n).tolist())


def marked(mask):
    return set(np.flatnonzero(mask.cells).tolist())


# --- Haar ----------------------------------------------------------------

@pytest.mark.parametrize("n,levels", [(8, 1), (16, 3), (64, 4), (64, 6)])
def test_haar_orthonormal(n, levels):
    x = np.random.default_rng(n + levels).standard_normal((n, n))
    c = haar2(x, levels)
    np.testing.assert_allclose(ihaar2(c, levels), x, rtol=0, atol=1e-10)
    assert np.sum(c ** 2) == pytest.approx(np.sum(x ** 2), rel=1e-10)


def test_haar_one_level_by_hand():
    x = np.array([[1.0, 2.0], [3.0, 4.0]])
    c = haar2(x, 1)
    # approximation is the scaled mean, details the scaled differences
    assert c[0, 0] == pytest.approx(5.0)
    assert abs(c).sum() == pytest.approx(5.0 + 1.0 + 2.0 + 0.0)


def test_haar_constant_is_one_coefficient():
    c = haar2(np.full((32, 32), 0.7), 5)
    assert np.count_nonzero(np.abs(c) > 1e-12) == 1
    assert max_levels(32) == 5


# --- masks ---------------------------------------------------------------

def test_mask_forces_dc():
    mask = KSpaceMask(np.zeros((8, 8), dtype=bool))
    assert mask.count == 1 and mask.cells[dc_index(8)]
    assert 0 < mask.sampled_fraction <= 1


def test_rasterize_horizontal_row():
    n = 8
    c = parameterize([[0.0, 4.5 / n], [1.0, 4.5 / n]])
    mask = rasterize(c, n)
    want = np.zeros((n, n), dtype=bool)
    want[:, 4] = True
    np.testing.assert_array_equal(mask.cells, want)


def test_rasterize_diagonal_matches_supersampling():
    mask = rasterize(parameterize([[0.0, 0.0], [1.0, 1.0]]), 4)
    oracle = supersample_cells([0, 0], [1, 1], 4)
    assert marked(mask) == oracle | {np.ravel_multi_index(dc_index(4), (4, 4))}
    assert marked(mask) == {0, 5, 10, 15}


@pytest.mark.parametrize("seed", range(8))
def test_rasterize_random_segment_oracle(seed):
    rng = np.random.default_rng(seed)
    a, b = rng.random(2), rng.random(2)
    n = 16
    mask = rasterize(parameterize([a, b]), n)
    oracle = supersample_cells(a, b, n)
    dc = np.ravel_multi_index(dc_index(n), (n, n))
    extra = marked(mask) - oracle - {dc}
    assert oracle <= marked(mask)
    # anything the supersampling missed must be a sliver below its resolution
    _, cells, frac = segment_pieces(a[None], b[None], n)
    for cell in extra:
        assert frac[cells == cell].sum() < 1e-4


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(2, 30))
def test_rasterize_covers_vertices(seed, k):
    pts = np.random.default_rng(seed).random((k, 2))
    mask = rasterize(parameterize(pts), 32)
    assert set(cell_index(pts, 32).tolist()) <= marked(mask)


def test_iid_full_budget():
    mask = iid_mask(DensityGrid.uniform(2, 16), 256, seed=0)
    assert mask.count == 256 and mask.sampled_fraction == 1.0


@pytest.mark.parametrize("n", [20, 64, 128])
def test_iid_fifth(n):
    budget = round(n * n / 5)
    mask = iid_mask(radial_density(2, n), budget, seed=1)
    assert mask.count == budget
    assert 0.196 <= mask.sampled_fraction <= 0.204
    if n == 20:
        assert mask.sampled_fraction == 0.2


def test_iid_support_constraint():
    n = 16
    v = np.zeros((n, n))
    support = [(8, 8), (1, 2), (15, 0), (9, 9), (3, 12)]
    for ij in support:
        v[ij] = 1.0 + sum(ij)
    mask = iid_mask(normalize(DensityGrid(2, n, v)), len(support), seed=3)
    assert marked(mask) == {np.ravel_multi_index(ij, (n, n)) for ij in support}


def test_iid_errors():
    with pytest.raises(InfeasibleError):
        iid_mask(DensityGrid.uniform(2, 8), 65, seed=0)
    v = np.zeros((8, 8))
    v[0, 0] = 1.0
    with pytest.raises(InfeasibleError):
        iid_mask(normalize(DensityGrid(2, 8, v)), 5, seed=0)


def test_iid_follows_density():
    # high-density cells are picked far more often than low-density ones
    target = radial_density(2, 32)
    hits = np.zeros((32, 32))
    for s in range(40):
        hits += iid_mask(target, 100, seed=s).cells
    centre = hits[12:20, 12:20].mean()
    corner = hits[:4, :4].mean()
    assert centre > 5 * corner


def test_iid_deterministic():
    t = radial_density(2, 32)
    np.testing.assert_array_equal(iid_mask(t, 200, 4).cells, iid_mask(t, 200, 4).cells)


# --- measurement ---------------------------------------------------------

def test_measure_constant_dc_only():
    n = 16
    y = measure(np.full((n, n), 0.3), KSpaceMask(np.zeros((n, n), dtype=bool)))
    assert y.shape == (1,)
    assert y[0] == pytest.approx(0.3 * n)


def test_measure_parseval():
    img = np.random.default_rng(0).random((32, 32))
    y = measure(img, KSpaceMask.full(32))
    assert np.sum(np.abs(y) ** 2) == pytest.approx(np.sum(img ** 2), rel=1e-9)


def test_measure_impulse_flat():
    img = np.zeros((16, 16))
    img[3, 7] = 1.0
    y = measure(img, KSpaceMask.full(16))
    np.testing.assert_allclose(np.abs(y), 1 / 16, rtol=1e-12)


def test_measure_size_mismatch():
    with pytest.raises(DimensionError):
        measure(np.zeros((8, 8)), KSpaceMask.full(16))


def test_kspace_centred():
    k = kspace(np.ones((8, 8)))
    assert np.argmax(np.abs(k)) == np.ravel_multi_index(dc_index(8), (8, 8))


@pytest.mark.parametrize("seed", range(5))
def test_adjoint_consistency(seed):
    rng = np.random.default_rng(seed)
    n = 32
    mask = uniform_mask(n, 0.3, seed)
    op = SamplingOperator(mask, 3)
    u = rng.standard_normal((n, n))
    v = rng.standard_normal(mask.count) + 1j * rng.standard_normal(mask.count)
    lhs = np.real(np.vdot(v, op.forward(u)))
    rhs = np.sum(u * op.adjoint(v))
    assert lhs == pytest.approx(rhs, rel=1e-9)


# --- reconstruction ------------------------------------------------------

def test_full_mask_exact_recovery():
    img = phantom(64)
    y = measure(img, KSpaceMask.full(64))
    rec = reconstruct(y, KSpaceMask.full(64), ReconConfig(lam=1e-10, max_iters=50))
    assert np.max(np.abs(rec - img)) < 1e-6


def test_zero_measurements_zero_image():
    mask = uniform_mask(32, 0.3, 0)
    rec = reconstruct(np.zeros(mask.count, dtype=complex), mask, ReconConfig())
    assert np.all(rec == 0)


def sparse_haar_image(n, k, levels, seed):
    rng = np.random.default_rng(seed)
    c = np.zeros((n, n))
    idx = rng.choice(n * n, k, replace=False)
    c.flat[idx] = rng.uniform(0.2, 1.0, k) * rng.choice([-1.0, 1.0], k)
    return ihaar2(c, levels), c


@pytest.mark.parametrize("seed", range(3))
def test_sparse_recovery(seed):
    img, c = sparse_haar_image(64, 50, 4, seed)
    assert np.count_nonzero(c) == 50
    mask = uniform_mask(64, 0.4, seed)
    res = solve_l1(measure(img, mask), mask, ReconConfig(lam=1e-4, wavelet_levels=4))
    assert psnr(img, res.image) >= 60


def test_objective_nonincreasing():
    img = phantom(64)
    mask = iid_mask(radial_density(2, 64), 800, seed=2)
    y = measure(img, mask)
    res = solve_l1(y, mask, ReconConfig(lam=default_lambda(y, mask, 4), max_iters=200,
                                        tolerance=1e-12))
    obj = np.array(res.objective)
    assert np.all(np.diff(obj) <= 0)
    assert res.iterations >= 1


def test_recon_errors():
    mask = KSpaceMask.full(8)
    with pytest.raises(InvalidInputError):
        reconstruct(np.full(64, np.nan, dtype=complex), mask, ReconConfig())
    with pytest.raises(DimensionError):
        reconstruct(np.zeros(10, dtype=complex), mask, ReconConfig())
    for bad in (dict(lam=0.0), dict(max_iters=0), dict(tolerance=0.0)):
        with pytest.raises(InvalidInputError):
            ReconConfig(**bad)


# --- PSNR ----------------------------------------------------------------

def test_psnr_examples():
    ref = np.random.default_rng(0).random((16, 16))
    assert psnr(ref, ref) == 200.0
    assert psnr(ref, ref + 0.1) == pytest.approx(20.0, abs=1e-9)
    assert psnr(np.full((8, 8), 0.5), np.zeros((8, 8))) == pytest.approx(6.0206, abs=1e-4)
    with pytest.raises(DimensionError):
        psnr(np.zeros((4, 4)), np.zeros((8, 8)))


# --- phantom and comparison ------------------------------------------------

def test_phantom_properties():
    for n in (64, 128, 256):
        img = phantom(n)
        assert img.shape == (n, n)
        assert np.all(np.isfinite(img)) and img.min() >= 0 and img.max() <= 1
    np.testing.assert_array_equal(phantom(128), phantom(128))


def test_calibration_hits_budget():
    drawing = exponent_transform(radial_density(2, 64))
    mask, k, steps = calibrate_trajectory(drawing, 800, seed=0)
    assert abs(mask.count - 800) <= 0.02 * 800
    assert 1 <= steps <= 30
    np.testing.assert_array_equal(trajectory_mask(drawing, k, 0, 64).cells, mask.cells)


def test_calibration_failure():
    # a single-cell drawing density cannot grow past a handful of cells
    v = np.zeros((16, 16))
    v[3, 3] = 1.0
    with pytest.raises(CalibrationError):
        calibrate_trajectory(normalize(DensityGrid(2, 16, v)), 100, seed=0)


def test_scheme_comparison_r5_small():
    n = 64
    rep = scheme_comparison(phantom(n), radial_density(2, n), r=5, seed=0)
    d = rep.to_dict()
    assert set(d) == {"A_iid", "B_tsp", "C_tsp_corrected", "meta"}
    assert d["meta"]["budget"] == round(n * n / 5)
    for name in ("A_iid", "B_tsp", "C_tsp_corrected"):
        s = d[name]
        assert 0.196 <= s["sampled_fraction"] <= 0.204
        assert set(s) >= {"psnr_db", "sampled_fraction", "n_points", "lambda"}
        assert set(s["psnr_grid"]) == {"0.1", "1", "10"}
    assert d["A_iid"]["sampled_fraction"] == rep.budget / n ** 2
    json.dumps(d, allow_nan=False)


def test_scheme_comparison_near_full():
    n = 32
    rep = scheme_comparison(phantom(n), radial_density(2, n), r=1.05, seed=0)
    vals = [rep.schemes[s].psnr_db for s in ("A_iid", "B_tsp", "C_tsp_corrected")]
    assert max(vals) - min(vals) < 3
    for s in rep.schemes.values():
        assert abs(s.mask.count - rep.budget) <= 0.02 * rep.budget


def test_scheme_comparison_threads_identical():
    n = 32
    img, target = phantom(n), radial_density(2, n)
    cfg = ComparisonConfig(max_iters=50)
    a = scheme_comparison(img, target, 4, seed=2, cfg=cfg).to_dict()
    b = scheme_comparison(img, target, 4, seed=2, cfg=cfg, threads=3).to_dict()
    assert json.dumps(a) == json.dumps(b)


def test_scheme_comparison_errors():
    img = phantom(32)
    with pytest.raises(InvalidInputError):
        scheme_comparison(img, radial_density(2, 32), r=1.0)
    with pytest.raises(DimensionError):
        scheme_comparison(img, radial_density(2, 64), r=5)
    with pytest.raises(DimensionError):
        scheme_comparison(np.zeros((32, 16)), radial_density(2, 32), r=5)
