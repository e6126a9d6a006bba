"""Metrics: rRMSE, Wasserstein-1, KS, moment parity, mode detection."""

import numpy as np
import pytest

from spce import count_modes, higher_mode_side, ks_statistic, moment_parity, rrmse, wasserstein1
from spce.metrics import density_from_quantiles
from spce.synthetic import make_rng


def test_rrmse_examples():
    v = np.array([1.0, -2.0, 0.5])
    assert rrmse(v, v) == 0.0
    assert rrmse(v, np.zeros(3)) == 1.0
    assert rrmse([3.0, 4.0], [3.0, 0.0]) == pytest.approx(4.0 / 5.0)


def test_rrmse_scale_invariant():
    rng = make_rng(1)
    t = rng.standard_normal(50)
    p = t + 0.1 * rng.standard_normal(50)
    assert rrmse(t, p) == pytest.approx(rrmse(10 * t, 10 * p), rel=1e-12)


def test_rrmse_zero_truth_rejected():
    with pytest.raises(ValueError, match="zero"):
        rrmse(np.zeros(3), np.ones(3))


def test_wasserstein_examples():
    rng = make_rng(2)
    a = rng.standard_normal(1000)
    assert wasserstein1(a, a) == 0.0
    assert wasserstein1(a, a + 0.7) == pytest.approx(0.7, abs=1e-12)
    big = make_rng(3).standard_normal(100_000)
    shifted = make_rng(4).standard_normal(100_000) + 1.0
    assert wasserstein1(big, shifted) == pytest.approx(1.0, abs=0.02)


def test_wasserstein_unequal_sizes():
    rng = make_rng(5)
    a = rng.standard_normal(1000)
    b = rng.standard_normal(1500) + 0.5
    assert wasserstein1(a, b) == pytest.approx(0.5, abs=0.1)
    with pytest.raises(ValueError, match="nonempty"):
        wasserstein1(a, [])


def test_wasserstein_triangle_inequality():
    rng = make_rng(6)
    for _ in range(5):
        a = rng.standard_normal(200)
        b = rng.standard_normal(200) * 1.5
        c = rng.standard_normal(200) + rng.uniform(-1, 1)
        assert wasserstein1(a, c) <= wasserstein1(a, b) + wasserstein1(b, c) + 1e-12


def test_ks_statistic_uniform_and_callable():
    u = (np.arange(1000) + 0.5) / 1000
    assert ks_statistic(u, "uniform") <= 0.001
    from scipy.special import ndtr
    g = make_rng(7).standard_normal(2000)
    assert ks_statistic(g, ndtr) < 1.63 / np.sqrt(2000) * 1.5


def test_moment_parity_identity_and_inflation():
    rng = make_rng(8)
    truth = [rng.standard_normal(400) + mu for mu in (1.0, 2.0, 3.0)]
    report = moment_parity(truth, truth)
    assert report.mean_rrmse == 0.0
    assert report.sd_rrmse == 0.0

    inflated = [(e - e.mean()) * 1.1 + e.mean() for e in truth]
    report = moment_parity(truth, inflated)
    assert report.sd_rrmse == pytest.approx(0.1, abs=1e-6)
    assert report.mean_rrmse < 1e-12


def test_moment_parity_single_point_and_mismatch():
    data = [np.array([1.0, 2.0, 3.0])]
    report = moment_parity(data, data)
    assert report.mean_rrmse == 0.0
    with pytest.raises(ValueError, match="differ"):
        moment_parity(data, data * 2)


def test_count_modes_gaussian_and_mixture():
    y = np.linspace(-6, 6, 2001)
    one = np.exp(-0.5 * y**2)
    assert count_modes(one) == 1
    two = np.exp(-0.5 * (y - 2) ** 2) + 0.8 * np.exp(-0.5 * (y + 2) ** 2)
    assert count_modes(two) == 2
    assert higher_mode_side(y, two) == "right"
    assert higher_mode_side(y, one) is None


def test_density_from_quantiles_recovers_gaussian():
    from scipy.special import ndtri
    n = 20_000
    u = (np.arange(n) + 0.5) / n
    y = ndtri(u)  # exact standard normal quantiles
    grid = np.linspace(-2.5, 2.5, 101)
    dens = density_from_quantiles(u, y, grid)
    exact = np.exp(-0.5 * grid**2) / np.sqrt(2 * np.pi)
    assert np.max(np.abs(dens - exact)) < 0.01
