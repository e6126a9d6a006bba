"""Least-squares coefficient fitting and Bayesian evidence for order selection.

The evidence is the marginal likelihood of a linear model with a zero-mean
isotropic Gaussian prior on the coefficients and isotropic Gaussian noise.
Both variances are picked by maximizing the evidence over a fixed
logarithmic grid, which keeps the selection deterministic and cheap.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .basis import BasisSet, GermKind
from .exceptions import UnderdeterminedError

# 13 log-spaced candidate values per hyperparameter, 1e-8 .. 1e4.
EVIDENCE_VARIANCE_GRID = np.logspace(-8.0, 4.0, 13)


@dataclass
class FitResult:
    """Outcome of a linear fit: coefficients plus per-output diagnostics."""

    coefficients: np.ndarray      # (n_basis, n_out)
    residual_rrmse: np.ndarray    # (n_out,)
    log_evidence: np.ndarray | None = None  # (n_out,) when requested


def least_squares_fit(design, targets, ridge: float = 0.0,
                      with_evidence: bool = False) -> FitResult:
    """Solve min ||design @ c - targets||^2 + ridge * ||c||^2 column-wise.

    Uses a rank-revealing SVD solve; with ridge > 0 the augmented system
    [design; sqrt(ridge) I] is solved instead, which is always full rank.

    Raises:
        UnderdeterminedError: design is rank deficient and ridge == 0.
    """
    a = np.asarray(design, dtype=float)
    y = np.asarray(targets, dtype=float)
    if a.ndim != 2:
        raise ValueError("design must be a 2-D matrix")
    squeeze = y.ndim == 1
    if squeeze:
        y = y[:, None]
    if y.shape[0] != a.shape[0]:
        raise ValueError(
            f"design has {a.shape[0]} rows but targets have {y.shape[0]}"
        )
    if not (np.isfinite(a).all() and np.isfinite(y).all()):
        raise ValueError("design and targets must be finite")
    if ridge < 0:
        raise ValueError(f"ridge must be nonnegative, got {ridge}")

    n_rows, n_cols = a.shape
    if ridge > 0:
        a_aug = np.vstack([a, np.sqrt(ridge) * np.eye(n_cols)])
        y_aug = np.vstack([y, np.zeros((n_cols, y.shape[1]))])
        coef, _, _, _ = scipy.linalg.lstsq(a_aug, y_aug)
    else:
        coef, _, rank, _ = scipy.linalg.lstsq(a, y)
        if rank < n_cols:
            raise UnderdeterminedError(
                f"design is rank deficient (rank {rank} < {n_cols} columns); "
                "add samples, lower the order, or set ridge > 0"
            )

    resid = y - a @ coef
    denom = np.sqrt((y * y).sum(axis=0))
    rnorm = np.sqrt((resid * resid).sum(axis=0))
    with np.errstate(divide="ignore", invalid="ignore"):
        rrmse = np.where(denom > 0, rnorm / denom, np.where(rnorm > 0, np.inf, 0.0))

    evidence = None
    if with_evidence:
        evidence = np.array([log_evidence(a, y[:, k]) for k in range(y.shape[1])])
    return FitResult(coefficients=coef, residual_rrmse=rrmse, log_evidence=evidence)


def log_evidence(design, targets) -> float:
    """Log marginal likelihood of the Bayesian linear model.

    Model: y = X w + e with w ~ N(0, tau2 I), e ~ N(0, sigma2 I).  The
    marginal covariance is sigma2 I + tau2 X X^T; its determinant and
    quadratic form are evaluated through one SVD of X, and (tau2, sigma2)
    are maximized over EVIDENCE_VARIANCE_GRID.
    """
    x = np.asarray(design, dtype=float)
    y = np.asarray(targets, dtype=float).ravel()
    if x.ndim != 2 or x.shape[0] != y.shape[0]:
        raise ValueError("design must be (n, p) with targets of length n")
    if not (np.isfinite(x).all() and np.isfinite(y).all()):
        raise ValueError("design and targets must be finite")

    n = x.shape[0]
    u, svals, _ = scipy.linalg.svd(x, full_matrices=False)
    proj = u.T @ y
    # Energy of y outside the column space of X.
    off = max(float(y @ y - proj @ proj), 0.0)
    s2 = svals**2

    best = -np.inf
    log2pi = np.log(2.0 * np.pi)
    for tau2 in EVIDENCE_VARIANCE_GRID:
        d = tau2 * s2
        for sigma2 in EVIDENCE_VARIANCE_GRID:
            dd = sigma2 + d
            logdet = np.log(dd).sum() + (n - len(s2)) * np.log(sigma2)
            quad = (proj * proj / dd).sum() + off / sigma2
            value = -0.5 * (n * log2pi + logdet + quad)
            if value > best:
                best = value
    return best


# Occam margin (nats): a larger basis must beat a smaller one by at least
# this much log evidence.  Genuine order improvements are worth tens to
# hundreds of nats; spurious gains from hyperparameter overfitting on the
# grid stay well below one.
EVIDENCE_MARGIN = 1.0


def select_order_by_evidence(germ_points, targets, germ_kinds, max_order: int,
                             margin: float = EVIDENCE_MARGIN) -> int:
    """Smallest total-degree order within ``margin`` of the best evidence.

    Ties (and near-ties) break toward the smaller order.  ``germ_points``
    may be (n,) for a one-dimensional germ or (n, dim).
    """
    if max_order < 0:
        raise ValueError(f"max_order must be >= 0, got {max_order}")
    pts = np.asarray(germ_points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    kinds = tuple(GermKind(k) for k in germ_kinds)
    if pts.shape[1] != len(kinds):
        raise ValueError(
            f"germ points have {pts.shape[1]} components for {len(kinds)} germ kinds"
        )
    y = np.asarray(targets, dtype=float).ravel()

    values = []
    for order in range(max_order + 1):
        basis = BasisSet.total_degree(kinds, order)
        values.append(log_evidence(basis.eval(pts), y))
    best = max(values)
    for order, value in enumerate(values):
        if value >= best - margin:
            return order
    return max_order
