"""Synthetic stochastic models with analytic oracles.

Two generators: a Gaussian-mixture scalar model whose response morphs
between bimodal and unimodal shapes as its parameter sweeps [0, 1], and a
logistic growth curve with multiplicative correlated log-normal noise that
stands in for trajectory-producing stochastic simulators.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

# Counter-based generator recorded in output metadata for reproducibility.
GENERATOR_NAME = "numpy.philox"


def make_rng(seed: int) -> np.random.Generator:
    """Philox counter-based generator; safe to key per-stream by seed."""
    return np.random.Generator(np.random.Philox(seed))


@dataclass(frozen=True)
class BimodalModel:
    """Two-component Gaussian mixture conditioned on a scalar in [0, 1].

    The density is written with kernel weights (0.5, 0.75) of the scaled
    argument; after the 1.25 Jacobian these are component probabilities
    (0.4, 0.6).
    """

    weights: tuple[float, float] = (0.4, 0.6)
    scale: float = 1.25

    def component_means(self, lam: float) -> tuple[float, float]:
        s = 5.0 * np.sin(np.pi * lam) ** 2
        return s + 5.0 * lam - 2.5, s - 5.0 * lam + 2.5

    def pdf(self, lam: float, y):
        c1, c2 = self.component_means(lam)
        u = self.scale * np.asarray(y, dtype=float)
        return 0.5 * _phi(u - c1) + 0.75 * _phi(u - c2)

    def cdf(self, lam: float, y):
        c1, c2 = self.component_means(lam)
        u = self.scale * np.asarray(y, dtype=float)
        w1, w2 = self.weights
        return w1 * ndtr(u - c1) + w2 * ndtr(u - c2)

    def mean(self, lam: float) -> float:
        c1, c2 = self.component_means(lam)
        w1, w2 = self.weights
        return (w1 * c1 + w2 * c2) / self.scale

    def quantile(self, lam: float, q) -> np.ndarray:
        """Inverse CDF by bisection (the CDF is strictly increasing)."""
        qa = np.atleast_1d(np.asarray(q, dtype=float))
        if np.any((qa <= 0) | (qa >= 1)):
            raise ValueError("quantile levels must lie in (0, 1)")
        c1, c2 = self.component_means(lam)
        lo = np.full(qa.shape, (min(c1, c2) - 10.0) / self.scale)
        hi = np.full(qa.shape, (max(c1, c2) + 10.0) / self.scale)
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            high = self.cdf(lam, mid) > qa
            lo = np.where(high, lo, mid)
            hi = np.where(high, mid, hi)
            if np.all(hi - lo < 1e-12):
                break
        return 0.5 * (lo + hi)

    def sample(self, lam: float, count: int, seed: int) -> np.ndarray:
        rng = make_rng(seed)
        pick2 = rng.random(count) < self.weights[1]
        c1, c2 = self.component_means(lam)
        centers = np.where(pick2, c2, c1)
        return (centers + rng.standard_normal(count)) / self.scale


def _phi(u):
    return np.exp(-0.5 * u * u) / np.sqrt(2.0 * np.pi)


def bimodal_pdf(lam: float, y):
    """Mixture density p(y | lam); see BimodalModel."""
    return BimodalModel().pdf(lam, y)


def bimodal_sample(lam: float, count: int, seed: int) -> np.ndarray:
    """Draw replicas: Bernoulli(0.4/0.6) component, then scaled normal."""
    return BimodalModel().sample(lam, count, seed)


def bimodal_ensemble(lambdas, n_replicas: int, seed: int) -> np.ndarray:
    """Replica tensor (N, M, 1) for a sequence of parameter values."""
    lams = np.asarray(lambdas, dtype=float).ravel()
    model = BimodalModel()
    out = np.empty((lams.size, n_replicas, 1))
    for n, lam in enumerate(lams):
        out[n, :, 0] = model.sample(lam, n_replicas, seed + 7919 * n)
    return out


# Defaults for the logistic random-field generator.
FIELD_GRID_POINTS = 64
FIELD_NOISE_SD = 0.1
FIELD_NOISE_RHO = 0.9
FIELD_PARAM_NAMES = ("amplitude", "steepness", "midpoint")
FIELD_LOWER = np.array([0.7, 6.0, 0.40])
FIELD_UPPER = np.array([1.3, 10.0, 0.60])


def field_grid(n_points: int = FIELD_GRID_POINTS) -> np.ndarray:
    return np.linspace(0.0, 1.0, n_points)


def logistic_curve(lam, grid) -> np.ndarray:
    """Deterministic part: amplitude / (1 + exp(-steepness (t - midpoint)))."""
    amp, steep, mid = np.asarray(lam, dtype=float)
    t = np.asarray(grid, dtype=float)
    return amp / (1.0 + np.exp(-steep * (t - mid)))


def field_sample(lam, count: int, seed: int, grid=None,
                 noise_sd: float = FIELD_NOISE_SD, rho: float = FIELD_NOISE_RHO,
                 additive_sd: float = 0.0) -> np.ndarray:
    """Replica trajectories of the logistic curve with multiplicative noise.

    Each replica is the curve times exp(noise_sd * e_t) where e_t is a
    stationary AR(1) path with unit variance and correlation ``rho``.  An
    optional additive observation-noise term (default off) is controlled by
    ``additive_sd``.

    Returns:
        Array of shape (count, len(grid)).
    """
    t = field_grid() if grid is None else np.asarray(grid, dtype=float)
    base = logistic_curve(lam, t)
    rng = make_rng(seed)
    out = np.tile(base, (count, 1))
    if noise_sd > 0:
        eps = np.empty((count, t.size))
        eps[:, 0] = rng.standard_normal(count)
        innov = rng.standard_normal((count, t.size - 1)) * np.sqrt(1.0 - rho**2)
        for j in range(1, t.size):
            eps[:, j] = rho * eps[:, j - 1] + innov[:, j - 1]
        out = out * np.exp(noise_sd * eps)
    if additive_sd > 0:
        out = out + additive_sd * rng.standard_normal(out.shape)
    return out


def field_lambda_samples(n: int, seed: int, lower=FIELD_LOWER, upper=FIELD_UPPER):
    """Uniform parameter draws inside the box, one row per configuration."""
    rng = make_rng(seed)
    lo = np.asarray(lower, dtype=float)
    hi = np.asarray(upper, dtype=float)
    return lo + (hi - lo) * rng.random((n, lo.size))


def field_ensemble(lambdas, n_replicas: int, seed: int, grid=None,
                   noise_sd: float = FIELD_NOISE_SD, rho: float = FIELD_NOISE_RHO):
    """Replica tensor (N, M, L_x) of logistic trajectories."""
    lams = np.atleast_2d(np.asarray(lambdas, dtype=float))
    t = field_grid() if grid is None else np.asarray(grid, dtype=float)
    out = np.empty((lams.shape[0], n_replicas, t.size))
    for n in range(lams.shape[0]):
        out[n] = field_sample(lams[n], n_replicas, seed + 104729 * n, grid=t,
                              noise_sd=noise_sd, rho=rho)
    return out


