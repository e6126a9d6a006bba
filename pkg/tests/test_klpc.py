"""KLPC pipeline: mode PCEs, field moments, pointwise sensitivities."""

import numpy as np
import pytest

from spce import BuildConfig, GermKind, KlpcSurrogate, ParameterSpace, build_klpc, sample_germ
from spce.synthetic import FIELD_LOWER, FIELD_UPPER, FIELD_PARAM_NAMES, field_grid, logistic_curve, make_rng

GRID = field_grid(32)


def field_space():
    return ParameterSpace(names=FIELD_PARAM_NAMES, lower=FIELD_LOWER, upper=FIELD_UPPER)


def multiplicative_noise_tensor(lams, n_rep, noise=0.1, seed=70):
    """y(lam, omega; t) = s(lam, t) * (1 + noise * eps), eps scalar per replica."""
    rng = make_rng(seed)
    out = np.empty((lams.shape[0], n_rep, GRID.size))
    for n in range(lams.shape[0]):
        base = logistic_curve(lams[n], GRID)
        eps = rng.standard_normal(n_rep)
        out[n] = base[None, :] * (1.0 + noise * eps[:, None])
    return out


def training_lambdas(n, seed=71):
    rng = make_rng(seed)
    return FIELD_LOWER + (FIELD_UPPER - FIELD_LOWER) * rng.random((n, 3))


def build_multiplicative_surrogate(noise=0.1, n_lam=40, n_rep=60, seed=72,
                                   **config_kwargs):
    lams = training_lambdas(n_lam, seed=seed)
    tensor = multiplicative_noise_tensor(lams, n_rep, noise=noise, seed=seed + 1)
    config = BuildConfig(**{"seed": 7, **config_kwargs})
    return build_klpc(lams, tensor, GRID, field_space(), config), lams


def test_noise_free_model_has_no_noise_share():
    lams = training_lambdas(40)
    tensor = np.repeat(
        np.stack([logistic_curve(l, GRID) for l in lams])[:, None, :], 3, axis=1
    )
    surrogate, _ = build_klpc(lams, tensor, GRID, field_space(),
                              BuildConfig(seed=7)), None
    report = surrogate.sobol_field()
    assert np.all(report.noise_group <= 0.02)
    assert np.all(report.main.sum(axis=0) + report.interaction_residual
                  + report.noise_group <= 1.0 + 1e-10)


def test_multiplicative_noise_conditional_ratio():
    # sd/mean recovers the constructed 10% noise within 30%, evaluated on
    # the active part of the trajectory (mean above 20% of its peak)
    surrogate, _ = build_multiplicative_surrogate()
    space = field_space()
    for lam in [(1.0, 8.0, 0.5), (0.9, 7.0, 0.45), (1.2, 9.5, 0.55)]:
        xi = space.to_germ(np.asarray(lam))
        mean, var = surrogate.pointwise_conditional_moments(xi)
        sd = np.sqrt(np.maximum(var, 0.0))
        bulk = mean > 0.2 * mean.max()
        ratio = sd[bulk] / mean[bulk]
        assert np.all(np.abs(ratio - 0.1) <= 0.03)


def test_rank_three_field_keeps_three_modes():
    # three orthogonal shapes with well separated variances: L = 3, S = 4
    rng = make_rng(73)
    n_lam, n_rep = 30, 40
    lams = np.linspace(0.1, 0.9, n_lam)
    shapes = np.stack([
        np.sin(np.pi * GRID), np.sin(2 * np.pi * GRID), np.sin(3 * np.pi * GRID)
    ])
    scales = np.array([5.0, 2.0, 0.8])
    tensor = np.empty((n_lam, n_rep, GRID.size))
    for n in range(n_lam):
        amps = scales[None, :] * (lams[n] + 0.3 * rng.standard_normal((n_rep, 3)))
        tensor[n] = amps @ shapes
    space = ParameterSpace(names=("lam",), lower=[0.0], upper=[1.0])
    surrogate = build_klpc(lams, tensor, GRID, space, BuildConfig(seed=8))
    assert surrogate.kle.n_modes == 3
    assert surrogate.joint.n_stoch == 3
    # first-order stochastic basis over 3 germ dims has 4 terms
    stoch_terms = {tuple(r) for r in surrogate.joint.basis.indices[:, 1:]}
    assert len(stoch_terms) == 4


def test_generate_matches_moments_and_is_deterministic():
    surrogate, _ = build_multiplicative_surrogate(n_lam=25, n_rep=40)
    d = surrogate.joint.dim
    kinds = surrogate.joint.basis.germ_kinds

    zero = np.zeros(surrogate.joint.n_param)
    mean_field = surrogate.generate(zero, np.zeros(surrogate.joint.n_stoch))
    again = surrogate.generate(zero, np.zeros(surrogate.joint.n_stoch))
    np.testing.assert_array_equal(mean_field, again)

    pts = sample_germ(kinds, 100_000, make_rng(74))
    fields = surrogate.generate_batch(pts)
    mean, var = surrogate.pointwise_moments()
    for x in np.linspace(2, GRID.size - 3, 5, dtype=int):
        draws = fields[:, x]
        se_m = draws.std(ddof=1) / np.sqrt(draws.size)
        assert abs(draws.mean() - mean[x]) <= 4 * se_m
        sq = (draws - draws.mean()) ** 2
        se_v = sq.std(ddof=1) / np.sqrt(draws.size)
        assert abs(draws.var(ddof=1) - var[x]) <= 4 * se_v


def test_zeta_spread_matches_conditional_moments():
    surrogate, _ = build_multiplicative_surrogate(n_lam=25, n_rep=40)
    xi = np.zeros(surrogate.joint.n_param)
    zeta = sample_germ((surrogate.joint.stoch_germ,) * surrogate.joint.n_stoch,
                       50_000, make_rng(75))
    pts = np.hstack([np.tile(xi, (zeta.shape[0], 1)), zeta])
    fields = surrogate.generate_batch(pts)
    mean, var = surrogate.pointwise_conditional_moments(xi)
    x = GRID.size // 2
    draws = fields[:, x]
    se = draws.std(ddof=1) / np.sqrt(draws.size)
    assert abs(draws.mean() - mean[x]) <= 4 * se
    assert draws.var(ddof=1) == pytest.approx(var[x], rel=0.05)


def test_pointwise_moments_formula_collapse():
    # a single mode with a single linear stochastic term
    surrogate, _ = build_multiplicative_surrogate(n_lam=25, n_rep=40)
    joint = surrogate.joint
    coeffs = np.zeros_like(joint.coefficients)
    idx = [tuple(r) for r in joint.basis.indices]
    first_stoch = tuple([0] * joint.n_param + [1] + [0] * (joint.n_stoch - 1))
    c11 = 0.7
    coeffs[idx.index(first_stoch), 0] = c11
    pruned = KlpcSurrogate(
        kle=surrogate.kle,
        joint=type(joint)(
            param_space=joint.param_space, n_stoch=joint.n_stoch,
            stoch_germ=joint.stoch_germ, basis=joint.basis,
            coefficients=coeffs, stoch_order=joint.stoch_order,
        ),
    )
    x = 10
    mu1 = surrogate.kle.retained_eigenvalues[0]
    phi1 = surrogate.kle.eigenvectors[x, 0]
    _, var = pruned.pointwise_moments(x)
    assert var == pytest.approx(mu1 * phi1**2 * c11**2, rel=1e-12)

    flat = KlpcSurrogate(
        kle=surrogate.kle,
        joint=type(joint)(
            param_space=joint.param_space, n_stoch=joint.n_stoch,
            stoch_germ=joint.stoch_germ, basis=joint.basis,
            coefficients=np.zeros_like(coeffs), stoch_order=joint.stoch_order,
        ),
    )
    _, var0 = flat.pointwise_moments(x)
    assert var0 == 0.0


def test_pointwise_sobol_partitions_and_extremes():
    surrogate, _ = build_multiplicative_surrogate(n_lam=30, n_rep=50)
    report = surrogate.sobol_field()
    sums = report.main.sum(axis=0) + report.noise_group + report.interaction_residual
    live = ~report.zero_variance
    np.testing.assert_allclose(sums[live], 1.0, atol=1e-10)

    # pure-noise model: no lambda dependence anywhere
    rng = make_rng(76)
    lams = training_lambdas(20, seed=77)
    shape = 1.0 + 0.5 * GRID
    tensor = np.empty((20, 50, GRID.size))
    for n in range(20):
        tensor[n] = shape[None, :] * (1.0 + 0.2 * rng.standard_normal((50, 1)))
    pure = build_klpc(lams, tensor, GRID, field_space(), BuildConfig(seed=9))
    noise_report = pure.sobol_field()
    live = ~noise_report.zero_variance
    assert np.all(noise_report.noise_group[live] >= 0.95)


def test_pointwise_sobol_against_saltelli():
    surrogate, _ = build_multiplicative_surrogate(n_lam=30, n_rep=50)
    joint = surrogate.joint
    kinds = joint.basis.germ_kinds
    rng = make_rng(78)
    n_base = 100_000
    a = sample_germ(kinds, n_base, rng)
    b = sample_germ(kinds, n_base, rng)

    for x in (5, GRID.size // 2, GRID.size - 4):
        f = lambda pts: surrogate.generate_batch(pts)[:, x]
        fa, fb = f(a), f(b)
        var = np.concatenate([fa, fb]).var(ddof=1)
        report = surrogate.pointwise_sobol(x)
        for i in range(joint.n_param):
            ab = a.copy()
            ab[:, i] = b[:, i]
            s_mc = np.mean(fb * (f(ab) - fa)) / var
            assert abs(s_mc - report.main[i, 0]) < 0.03
        ab = a.copy()
        ab[:, joint.n_param:] = b[:, joint.n_param:]
        noise_mc = np.mean(fb * (f(ab) - fa)) / var
        assert abs(noise_mc - report.noise_group[0]) < 0.03


def test_klpc_variance_within_kle_budget():
    # surrogate pointwise variance stays within the training ensemble's
    # pointwise variance plus a 10% regression allowance
    lams = training_lambdas(30, seed=72)
    tensor = multiplicative_noise_tensor(lams, 50, seed=73)
    surrogate = build_klpc(lams, tensor, GRID, field_space(), BuildConfig(seed=7))
    _, var = surrogate.pointwise_moments()
    ensemble_var = tensor.reshape(-1, GRID.size).var(axis=0, ddof=1)
    assert np.all(var <= ensemble_var * 1.10 + 1e-12)


def test_klpc_serialization_roundtrip():
    surrogate, _ = build_multiplicative_surrogate(n_lam=20, n_rep=30)
    clone = KlpcSurrogate.from_dict(surrogate.to_dict())
    np.testing.assert_array_equal(clone.joint.coefficients,
                                  surrogate.joint.coefficients)
    np.testing.assert_array_equal(clone.kle.eigenvectors,
                                  surrogate.kle.eigenvectors)
    xi = np.zeros(surrogate.joint.n_param)
    zeta = 0.3 * np.ones(surrogate.joint.n_stoch)
    np.testing.assert_array_equal(clone.generate(xi, zeta),
                                  surrogate.generate(xi, zeta))