"""Rosenblatt map: bandwidths, forward CDF fidelity, inverse roundtrips."""

import numpy as np
import pytest
from scipy.special import ndtr

from spce import RosenblattMap, build_map, ks_statistic
from spce.synthetic import make_rng


def gaussian_samples(m, seed=11):
    return make_rng(seed).standard_normal(m)


def test_bandwidth_formula():
    y = gaussian_samples(100)
    rmap = RosenblattMap(y, bandwidth_factor=1.0)
    expected = 1.06 * y.std(ddof=1) * 100 ** (-0.2)
    assert rmap.bandwidths[0] == pytest.approx(expected, rel=1e-12)


def test_bandwidth_factor_scales_linearly():
    y = make_rng(12).standard_normal((150, 2)) * [1.0, 3.0]
    full = RosenblattMap(y, bandwidth_factor=1.0)
    half = RosenblattMap(y, bandwidth_factor=0.5)
    np.testing.assert_allclose(half.bandwidths, 0.5 * full.bandwidths, rtol=1e-14)


def test_constant_column_floored():
    y = np.column_stack([np.full(50, 3.0), gaussian_samples(50)])
    rmap = RosenblattMap(y)
    assert np.all(rmap.bandwidths > 0)
    out = rmap.forward(np.array([[3.0, 0.1]]))
    assert np.isfinite(out).all()


def test_forward_symmetry_and_tails():
    y = gaussian_samples(2000, seed=13)
    y = np.concatenate([y, -y])  # exactly symmetric about zero
    rmap = RosenblattMap(y)
    mid = rmap.forward(np.array([0.0]))[0, 0]
    assert abs(mid - 0.5) < 0.02
    far = y.max() + 10 * rmap.bandwidths[0]
    assert rmap.forward(np.array([far]))[0, 0] > 0.999


def test_forward_matches_exact_normal_cdf():
    y = gaussian_samples(10_000, seed=14)
    rmap = RosenblattMap(y)
    grid = np.linspace(-2.0, 2.0, 81)
    est = rmap.forward(grid)[:, 0]
    assert np.max(np.abs(est - ndtr(grid))) <= 0.02


def test_forward_clamped_to_open_interval():
    y = gaussian_samples(200, seed=15)
    rmap = RosenblattMap(y)
    out = rmap.forward(np.array([-1e6, 1e6]))
    assert out.min() >= 1e-12
    assert out.max() <= 1 - 1e-12


def test_inverse_forward_roundtrip():
    y = make_rng(16).standard_normal((400, 2)) @ np.array([[1.0, 0.6], [0.0, 0.8]])
    rmap = RosenblattMap(y)
    zeta = make_rng(17).random((100, 2)) * 0.98 + 0.01
    back = rmap.forward(rmap.inverse(zeta))
    assert np.max(np.abs(back - zeta)) < 1e-8


def test_samples_roundtrip_through_forward_then_inverse():
    y = make_rng(18).standard_normal((300, 2))
    rmap = RosenblattMap(y)
    z = rmap.forward(y)
    again = rmap.forward(rmap.inverse(z))
    assert np.max(np.abs(again - z)) < 1e-8


def test_inverse_median_matches_sample_median():
    y = gaussian_samples(4000, seed=19)
    rmap = RosenblattMap(y)
    median = rmap.inverse(np.array([[0.5]]))[0, 0]
    assert abs(median - np.median(y)) < 0.05


def test_conditional_cdf_monotone():
    # strictly increasing on a 100-point grid across the sample bulk
    # (double precision saturates in the extreme tails, so stay inside)
    y = make_rng(20).standard_normal((250, 2)) @ np.array([[1.0, 0.9], [0.0, 0.4]])
    rmap = RosenblattMap(y)
    lo, hi = np.quantile(y[:, 1], [0.005, 0.995])
    grid = np.linspace(lo, hi, 100)
    pts = np.column_stack([np.full(100, 0.3), grid])
    cond = rmap.forward(pts)[:, 1]
    assert np.all(np.diff(cond) > 0)


def test_forward_pullback_is_uniform():
    m = 1000
    y = make_rng(21).standard_normal((m, 2)) @ np.array([[1.0, 0.5], [0.0, 1.2]])
    rmap = RosenblattMap(y)
    z = rmap.forward(y)
    bound = 1.63 / np.sqrt(m) + 0.05
    for k in range(2):
        assert ks_statistic(z[:, k], "uniform") <= bound


def test_inverse_image_mean_matches_training_mean():
    m = 500
    y = 2.0 + 0.7 * gaussian_samples(m, seed=22)
    rmap = RosenblattMap(y)
    draws = make_rng(23).random((10_000, 1)) * 0.9998 + 1e-4
    back = rmap.inverse(draws)[:, 0]
    tol = 4 * y.std(ddof=1) / np.sqrt(10_000)
    # KDE smoothing cannot bias the mean; only MC error enters
    assert abs(back.mean() - y.mean()) < tol + 0.02


def test_build_map_validations():
    with pytest.raises(ValueError, match="at least 2"):
        build_map(np.array([1.0]))
    with pytest.raises(ValueError, match="finite"):
        build_map(np.array([1.0, np.nan]))
    with pytest.raises(ValueError, match="positive"):
        build_map(np.array([1.0, 2.0]), bandwidth_factor=0.0)
    with pytest.raises(ValueError):
        RosenblattMap(np.random.rand(10, 2)).inverse(np.array([[0.5, 1.5]]))
