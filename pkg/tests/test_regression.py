"""Regression module: fits, residual properties, evidence-based selection."""

import numpy as np
import pytest

from spce import (
    BasisSet,
    GermKind,
    UnderdeterminedError,
    least_squares_fit,
    log_evidence,
    select_order_by_evidence,
)

UNIFORM = (GermKind.UNIFORM,)


def legendre_design(points, order):
    return BasisSet.total_degree(UNIFORM, order).eval(points[:, None])


def test_identity_fit():
    fit = least_squares_fit(np.eye(3), np.array([1.0, 2.0, 3.0]))
    np.testing.assert_allclose(fit.coefficients[:, 0], [1.0, 2.0, 3.0])
    assert fit.residual_rrmse[0] == pytest.approx(0.0, abs=1e-14)


def test_exact_degree2_recovery():
    rng = np.random.Generator(np.random.Philox(1))
    x = rng.uniform(-1, 1, 40)
    c_true = np.array([0.7, -1.2, 2.5])
    design = legendre_design(x, 2)
    y = design @ c_true
    fit = least_squares_fit(design, y)
    np.testing.assert_allclose(fit.coefficients[:, 0], c_true, atol=1e-10)


def test_noisy_coefficient_recovery():
    # y = 3 P0 + 0.5 P2 + N(0, 0.01^2); P2 coefficient within 0.01
    rng = np.random.Generator(np.random.Philox(2))
    x = rng.uniform(-1, 1, 200)
    design = legendre_design(x, 2)
    y = 3.0 * design[:, 0] + 0.5 * design[:, 2] + 0.01 * rng.standard_normal(200)
    fit = least_squares_fit(design, y)
    assert abs(fit.coefficients[2, 0] - 0.5) < 0.01


def test_rank_deficient_raises_and_ridge_rescues():
    design = np.ones((5, 2))  # duplicated column
    y = np.arange(5.0)
    with pytest.raises(UnderdeterminedError):
        least_squares_fit(design, y)
    fit = least_squares_fit(design, y, ridge=1e-8)
    assert np.isfinite(fit.coefficients).all()


def test_residual_orthogonality():
    rng = np.random.Generator(np.random.Philox(3))
    x = rng.uniform(-1, 1, 80)
    design = legendre_design(x, 3)
    y = rng.standard_normal(80)
    fit = least_squares_fit(design, y)
    resid = y - design @ fit.coefficients[:, 0]
    inner = design.T @ resid
    scale = np.linalg.norm(design, axis=0) * np.linalg.norm(resid) + 1e-30
    assert np.all(np.abs(inner) / scale < 1e-8)


def test_ridge_never_increases_coefficient_norm():
    rng = np.random.Generator(np.random.Philox(4))
    x = rng.uniform(-1, 1, 50)
    design = legendre_design(x, 4)
    y = np.sin(3 * x) + 0.1 * rng.standard_normal(50)
    norms = []
    for ridge in [0.0, 1e-6, 1e-3, 1e-1, 1.0, 10.0]:
        fit = least_squares_fit(design, y, ridge=ridge)
        norms.append(np.linalg.norm(fit.coefficients))
    assert all(b <= a + 1e-12 for a, b in zip(norms, norms[1:]))


def test_evidence_prefers_true_order_on_cubic():
    rng = np.random.Generator(np.random.Philox(5))
    x = rng.uniform(-1, 1, 80)
    design3 = legendre_design(x, 3)
    y = design3 @ np.array([0.5, 1.0, -0.7, 0.9]) + 0.02 * rng.standard_normal(80)
    ev3 = log_evidence(design3, y)
    ev5 = log_evidence(legendre_design(x, 5), y)
    assert ev3 > ev5


def test_evidence_constant_targets_prefers_order_zero():
    rng = np.random.Generator(np.random.Philox(6))
    x = rng.uniform(-1, 1, 40)
    y = np.full(40, 2.5)
    evs = [log_evidence(legendre_design(x, k), y) for k in range(5)]
    assert int(np.argmax(evs)) == 0


def test_evidence_degenerate_sizes_finite():
    assert np.isfinite(log_evidence(np.array([[1.0]]), np.array([0.3])))


def test_select_order_examples():
    rng = np.random.Generator(np.random.Philox(7))
    x = rng.uniform(-1, 1, 60)
    y3 = legendre_design(x, 3) @ np.array([0.2, -1.0, 0.8, 1.5])
    assert select_order_by_evidence(x, y3, UNIFORM, 5) == 3

    noise = rng.standard_normal(60)
    assert select_order_by_evidence(x, noise, UNIFORM, 4) == 0

    assert select_order_by_evidence(x, y3, UNIFORM, 0) == 0


def test_select_order_scale_invariant_argmax():
    rng = np.random.Generator(np.random.Philox(8))
    x = rng.uniform(-1, 1, 70)
    y = legendre_design(x, 2) @ np.array([1.0, 0.5, -0.4]) \
        + 0.05 * rng.standard_normal(70)
    base = select_order_by_evidence(x, y, UNIFORM, 5)
    scaled = select_order_by_evidence(x, 10.0 * y, UNIFORM, 5)
    assert base == scaled == 2


def test_degree_recovery_sweep():
    # ten cases, degrees 0..4 twice, noise at 5% of the signal sd
    rng = np.random.Generator(np.random.Philox(9))
    hits = 0
    cases = list(range(5)) * 2
    for case_id, degree in enumerate(cases):
        x = rng.uniform(-1, 1, 120)
        coeff = rng.uniform(0.5, 1.5, degree + 1) * rng.choice([-1, 1], degree + 1)
        signal = legendre_design(x, degree) @ coeff
        sd = signal.std() if signal.std() > 0 else 1.0
        y = signal + 0.05 * sd * rng.standard_normal(120)
        if select_order_by_evidence(x, y, UNIFORM, 6) == degree:
            hits += 1
    assert hits == 10


def test_non_finite_rejected():
    with pytest.raises(ValueError):
        log_evidence(np.array([[np.nan]]), np.array([1.0]))
    with pytest.raises(ValueError):
        least_squares_fit(np.array([[np.inf]]), np.array([1.0]))
