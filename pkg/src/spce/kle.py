"""Karhunen-Loeve expansion of random-field replica ensembles.

The ensemble covariance over the grid is eigendecomposed, the expansion is
truncated at the smallest mode count reaching the requested explained
variance, and samples are projected to unit-variance mode scores.  Uniform
grids use the plain dot product as the discrete inner product; non-uniform
grids fold trapezoid weights into a symmetric similarity transform so the
retained eigenvectors stay orthonormal in the weighted sense.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

# Raw eigenvalues more negative than -1e-10 * mu_1 indicate a broken solve.
_EIG_NEG_TOL = 1e-10


@dataclass
class FieldEnsemble:
    """Combined stochastic-parametric field samples on a shared grid.

    ``values`` holds one field per row (K = N * M rows for a full design);
    ``lambda_index`` maps each row to its (parameter point, replica) pair.
    """

    values: np.ndarray        # (K, L_x)
    grid: np.ndarray          # (L_x,), strictly increasing
    lambda_index: np.ndarray  # (K, 2) ints: (n, m) per combined sample

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        g = np.asarray(self.grid, dtype=float).ravel()
        if v.ndim != 2 or v.shape[1] != g.size:
            raise ValueError(
                f"values must be (K, {g.size}) to match the grid, got {v.shape}"
            )
        if not np.isfinite(v).all():
            raise ValueError("field values must be finite")
        if g.size > 1 and np.any(np.diff(g) <= 0):
            raise ValueError("grid must be strictly increasing")
        idx = np.asarray(self.lambda_index, dtype=int)
        if idx.shape != (v.shape[0], 2):
            raise ValueError("lambda_index must be (K, 2) pairs (n, m)")
        self.values, self.grid, self.lambda_index = v, g, idx

    @classmethod
    def from_replica_tensor(cls, tensor, grid) -> "FieldEnsemble":
        """Flatten an (N, M, L_x) replica tensor, n-major row order."""
        t = np.asarray(tensor, dtype=float)
        if t.ndim != 3:
            raise ValueError("replica tensor must be (N, M, L_x)")
        n, m, lx = t.shape
        pairs = np.array([(i, j) for i in range(n) for j in range(m)], dtype=int)
        return cls(values=t.reshape(n * m, lx), grid=grid, lambda_index=pairs)

    @property
    def n_samples(self) -> int:
        return self.values.shape[0]


def _grid_weights(grid: np.ndarray) -> np.ndarray | None:
    """Trapezoid weights for non-uniform grids, None when spacing is uniform."""
    if grid.size < 2:
        return None
    d = np.diff(grid)
    if np.allclose(d, d[0], rtol=1e-12, atol=1e-15 * abs(d[0])):
        return None
    w = np.empty(grid.size)
    w[0] = d[0] / 2
    w[-1] = d[-1] / 2
    w[1:-1] = (d[:-1] + d[1:]) / 2
    return w


@dataclass
class KleModel:
    """Mean field, eigenpairs, and truncation bookkeeping."""

    grid: np.ndarray
    mean_field: np.ndarray        # (L_x,)
    eigenvalues: np.ndarray       # full spectrum, descending, clipped >= 0
    eigenvectors: np.ndarray      # (L_x, L) retained modes
    n_modes: int                  # L
    explained_fraction: float
    degenerate: bool = False
    weights: np.ndarray | None = None  # quadrature weights (non-uniform grids)

    @property
    def retained_eigenvalues(self) -> np.ndarray:
        return self.eigenvalues[: self.n_modes]

    def to_dict(self) -> dict:
        return {
            "grid": [float(v) for v in self.grid],
            "mean_field": [float(v) for v in self.mean_field],
            "eigenvalues": [float(v) for v in self.eigenvalues],
            "eigenvectors": [[float(v) for v in row] for row in self.eigenvectors],
            "n_modes": int(self.n_modes),
            "explained_fraction": float(self.explained_fraction),
            "degenerate": bool(self.degenerate),
            "weights": None if self.weights is None
            else [float(v) for v in self.weights],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "KleModel":
        w = d.get("weights")
        return cls(
            grid=np.asarray(d["grid"], dtype=float),
            mean_field=np.asarray(d["mean_field"], dtype=float),
            eigenvalues=np.asarray(d["eigenvalues"], dtype=float),
            eigenvectors=np.asarray(d["eigenvectors"], dtype=float),
            n_modes=int(d["n_modes"]),
            explained_fraction=float(d["explained_fraction"]),
            degenerate=bool(d.get("degenerate", False)),
            weights=None if w is None else np.asarray(w, dtype=float),
        )


def fit_kle(ensemble: FieldEnsemble, epsilon: float = 0.01,
            n_modes: int | None = None) -> KleModel:
    """Eigendecompose the sample covariance and truncate by explained variance.

    Args:
        ensemble: K field samples, K >= 2.
        epsilon: keep the smallest L whose explained fraction reaches
            1 - epsilon; must lie in (0, 1).
        n_modes: optional override forcing the retained mode count.

    An ensemble with zero total variance is flagged degenerate and keeps
    every mode by convention.
    """
    if not (0.0 < epsilon < 1.0) and n_modes is None:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")
    k = ensemble.n_samples
    if k < 2:
        raise ValueError(f"need at least 2 samples to estimate covariance, got {k}")

    lx = ensemble.grid.size
    mean = ensemble.values.mean(axis=0)
    centered = ensemble.values - mean
    cov = centered.T @ centered / (k - 1)

    weights = _grid_weights(ensemble.grid)
    if weights is None:
        sym = cov
    else:
        root = np.sqrt(weights)
        sym = root[:, None] * cov * root[None, :]

    mu, vec = scipy.linalg.eigh(sym)
    mu, vec = mu[::-1], vec[:, ::-1]
    top = mu[0] if mu.size else 0.0
    if top > 0 and mu.min() < -_EIG_NEG_TOL * top:
        raise ValueError("covariance eigendecomposition produced large negative values")
    mu = np.clip(mu, 0.0, None)
    if weights is not None:
        vec = vec / np.sqrt(weights)[:, None]

    total = mu.sum()
    # variance at the rounding-noise scale of the field magnitude is zero
    reference = max(float(np.max(np.abs(ensemble.values))) ** 2, np.finfo(float).tiny)
    degenerate = total <= 1e-28 * reference * lx
    if degenerate:
        mu = np.zeros_like(mu)
        n_keep = lx
        explained = 1.0
    elif n_modes is not None:
        n_keep = int(min(max(n_modes, 1), lx))
        explained = float(mu[:n_keep].sum() / total)
    else:
        frac = np.cumsum(mu) / total
        n_keep = int(np.searchsorted(frac, 1.0 - epsilon, side="left") + 1)
        n_keep = min(n_keep, lx)
        explained = float(frac[n_keep - 1])

    return KleModel(
        grid=ensemble.grid,
        mean_field=mean,
        eigenvalues=mu,
        eigenvectors=vec[:, :n_keep],
        n_modes=n_keep,
        explained_fraction=explained,
        degenerate=degenerate,
        weights=weights,
    )


def project(model: KleModel, ensemble: FieldEnsemble) -> np.ndarray:
    """Mode scores eta of shape (K, L): weighted inner products scaled
    by 1/sqrt(mu); zero-variance modes project to zero."""
    if ensemble.grid.size != model.grid.size or \
            not np.allclose(ensemble.grid, model.grid):
        raise ValueError("ensemble grid does not match the KLE grid")
    centered = ensemble.values - model.mean_field
    if model.weights is not None:
        centered = centered * model.weights[None, :]
    raw = centered @ model.eigenvectors
    mu = model.retained_eigenvalues
    scale = np.where(mu > 0, 1.0 / np.sqrt(np.where(mu > 0, mu, 1.0)), 0.0)
    return raw * scale[None, :]


def reconstruct(model: KleModel, eta: np.ndarray) -> np.ndarray:
    """Fields from mode scores: mean + sum_l eta_l sqrt(mu_l) phi_l."""
    scores = np.atleast_2d(np.asarray(eta, dtype=float))
    if scores.shape[1] != model.n_modes:
        raise ValueError(
            f"eta must have {model.n_modes} columns, got {scores.shape[1]}"
        )
    amp = scores * np.sqrt(model.retained_eigenvalues)[None, :]
    return model.mean_field[None, :] + amp @ model.eigenvectors.T
