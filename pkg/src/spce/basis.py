"""Orthogonal polynomial bases over uniform and normal germs.

Two univariate families are supported: Legendre polynomials, orthogonal for
Uniform[-1, 1] with weight 1/2, and probabilists' Hermite polynomials,
orthogonal for the standard normal weight.  Multivariate bases are tensor
products restricted to a total-degree index set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

# Hard cap on enumerated basis sizes; beyond this a total-degree basis is
# not practical for dense regression.
MAX_BASIS_TERMS = 2_000_000


class GermKind(str, Enum):
    """Distribution family of one germ dimension."""

    UNIFORM = "uniform"  # Legendre basis, Uniform[-1, 1], weight 1/2
    NORMAL = "normal"    # probabilists' Hermite basis, standard normal weight


def eval_univariate(kind: GermKind, order: int, x):
    """Evaluate the univariate orthogonal polynomial of a given order.

    Uses the three-term recurrence of the family, which is stable at the
    high orders (15+) needed for stochastic quantile maps.

    Args:
        kind: germ family.
        order: polynomial order, >= 0.
        x: scalar or ndarray of evaluation points.

    Returns:
        Polynomial values with the same shape as ``x``.
    """
    if order < 0:
        raise ValueError(f"order must be >= 0, got {order}")
    x = np.asarray(x, dtype=float)
    prev = np.ones_like(x)
    if order == 0:
        return prev
    cur = x.copy()
    if kind == GermKind.UNIFORM:
        for n in range(1, order):
            prev, cur = cur, ((2 * n + 1) * x * cur - n * prev) / (n + 1)
    else:
        for n in range(1, order):
            prev, cur = cur, x * cur - n * prev
    return cur


def eval_univariate_table(kind: GermKind, max_order: int, x: np.ndarray) -> np.ndarray:
    """Evaluate all orders 0..max_order at once.

    Returns an array of shape ``(max_order + 1,) + x.shape`` where row ``p``
    holds the order-``p`` polynomial values.
    """
    x = np.asarray(x, dtype=float)
    table = np.empty((max_order + 1,) + x.shape, dtype=float)
    table[0] = 1.0
    if max_order == 0:
        return table
    table[1] = x
    if kind == GermKind.UNIFORM:
        for n in range(1, max_order):
            table[n + 1] = ((2 * n + 1) * x * table[n] - n * table[n - 1]) / (n + 1)
    else:
        for n in range(1, max_order):
            table[n + 1] = x * table[n] - n * table[n - 1]
    return table


def univariate_norm_sq(kind: GermKind, order: int) -> float:
    """Squared norm of the order-``order`` polynomial under the germ weight.

    Legendre with weight 1/2: 1 / (2p + 1).  Probabilists' Hermite with the
    standard normal weight: p!.
    """
    if order < 0:
        raise ValueError(f"order must be >= 0, got {order}")
    if kind == GermKind.UNIFORM:
        return 1.0 / (2 * order + 1)
    return float(math.factorial(order))


def total_degree_indices(dim: int, order: int) -> list[tuple[int, ...]]:
    """All multi-indices of ``dim`` entries with total degree <= ``order``.

    Ordered by total degree, then within each degree by descending
    lexicographic comparison, so (1, 0) precedes (0, 1).  The count is
    binomial(dim + order, order).
    """
    if dim < 1:
        raise ValueError(f"dim must be >= 1, got {dim}")
    if order < 0:
        raise ValueError(f"order must be >= 0, got {order}")
    count = math.comb(dim + order, order)
    if count > MAX_BASIS_TERMS:
        raise ValueError(
            f"total-degree basis with dim={dim}, order={order} has {count} terms, "
            f"exceeding the cap of {MAX_BASIS_TERMS}"
        )

    def compositions(total: int, slots: int):
        if slots == 1:
            yield (total,)
            return
        for head in range(total, -1, -1):
            for tail in compositions(total - head, slots - 1):
                yield (head,) + tail

    indices: list[tuple[int, ...]] = []
    for degree in range(order + 1):
        indices.extend(compositions(degree, dim))
    return indices


@dataclass(frozen=True, eq=False)
class BasisSet:
    """A multivariate orthogonal basis: germ kinds, multi-indices, norms.

    Index 0 is always the all-zeros (constant) multi-index.  ``norms_sq[j]``
    is the product of the univariate squared norms of ``indices[j]``.
    """

    germ_kinds: tuple[GermKind, ...]
    indices: np.ndarray                     # (n_terms, dim) nonnegative ints
    norms_sq: np.ndarray = field(default=None)  # (n_terms,)

    def __post_init__(self):
        kinds = tuple(GermKind(k) for k in self.germ_kinds)
        object.__setattr__(self, "germ_kinds", kinds)
        idx = np.asarray(self.indices, dtype=int)
        if idx.ndim != 2 or idx.shape[1] != len(kinds):
            raise ValueError(
                f"indices must have shape (n_terms, {len(kinds)}), got {idx.shape}"
            )
        if np.any(idx < 0):
            raise ValueError("multi-index entries must be nonnegative")
        if len({tuple(row) for row in idx}) != idx.shape[0]:
            raise ValueError("multi-indices must be unique")
        if np.any(idx[0] != 0):
            raise ValueError("index 0 must be the all-zeros multi-index")
        object.__setattr__(self, "indices", idx)
        if self.norms_sq is None:
            object.__setattr__(self, "norms_sq", self._compute_norms())
        else:
            object.__setattr__(self, "norms_sq", np.asarray(self.norms_sq, dtype=float))

    def _compute_norms(self) -> np.ndarray:
        return index_norms_sq(self.germ_kinds, self.indices)

    @classmethod
    def total_degree(cls, germ_kinds, order: int) -> "BasisSet":
        kinds = tuple(GermKind(k) for k in germ_kinds)
        idx = np.array(total_degree_indices(len(kinds), order), dtype=int)
        return cls(kinds, idx)

    @property
    def dim(self) -> int:
        return len(self.germ_kinds)

    @property
    def n_terms(self) -> int:
        return self.indices.shape[0]

    def eval(self, points) -> np.ndarray:
        """Design matrix of basis values.

        Args:
            points: array of shape (n, dim) or (dim,).

        Returns:
            Array of shape (n, n_terms); entry (i, j) is the j-th
            multivariate polynomial at point i.
        """
        pts = np.asarray(points, dtype=float)
        squeeze = pts.ndim == 1
        if squeeze:
            pts = pts[None, :]
        if pts.shape[1] != self.dim:
            raise ValueError(
                f"points have {pts.shape[1]} components, basis has {self.dim} dimensions"
            )
        design = eval_index_matrix(self.germ_kinds, self.indices, pts)
        return design[0] if squeeze else design


def eval_index_matrix(germ_kinds, indices: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Product-polynomial values for an arbitrary multi-index matrix.

    Args:
        germ_kinds: one GermKind per dimension.
        indices: (n_terms, dim) multi-index matrix.
        points: (n, dim) evaluation points.

    Returns:
        (n, n_terms) matrix of multivariate polynomial values.
    """
    design = np.ones((points.shape[0], indices.shape[0]))
    for ell, kind in enumerate(germ_kinds):
        max_order = int(indices[:, ell].max())
        table = eval_univariate_table(kind, max_order, points[:, ell])
        design *= table[indices[:, ell]].T
    return design


def index_norms_sq(germ_kinds, indices: np.ndarray) -> np.ndarray:
    """Squared norms (product over dimensions) for a multi-index matrix."""
    norms = np.ones(indices.shape[0])
    for ell, kind in enumerate(germ_kinds):
        col = indices[:, ell]
        uni = np.array([univariate_norm_sq(kind, p) for p in range(int(col.max()) + 1)])
        norms *= uni[col]
    return norms


def eval_basis(basis: BasisSet, point) -> np.ndarray:
    """Evaluate every basis polynomial at one point (vector of length dim)."""
    return basis.eval(point)


def sample_germ(germ_kinds, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw n i.i.d. germ vectors: Uniform[-1, 1] or standard normal per dim."""
    kinds = tuple(GermKind(k) for k in germ_kinds)
    out = np.empty((n, len(kinds)))
    for ell, kind in enumerate(kinds):
        if kind == GermKind.UNIFORM:
            out[:, ell] = rng.uniform(-1.0, 1.0, size=n)
        else:
            out[:, ell] = rng.standard_normal(n)
    return out


@dataclass
class PcExpansion:
    """A polynomial chaos series: basis plus coefficient matrix.

    ``coefficients`` has shape (n_terms, n_out); a 1-D vector is accepted
    and treated as a single output column.
    """

    basis: BasisSet
    coefficients: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coefficients, dtype=float)
        if c.ndim == 1:
            c = c[:, None]
        if c.shape[0] != self.basis.n_terms:
            raise ValueError(
                f"coefficient rows ({c.shape[0]}) != basis terms ({self.basis.n_terms})"
            )
        self.coefficients = c

    @property
    def n_out(self) -> int:
        return self.coefficients.shape[1]

    def __call__(self, points) -> np.ndarray:
        """Evaluate the series; shape (n, n_out), or (n_out,) for one point."""
        pts = np.asarray(points, dtype=float)
        design = self.basis.eval(pts)
        return design @ self.coefficients

    def mean(self) -> np.ndarray:
        """Expectation under the germ measure: the constant-term coefficients."""
        return self.coefficients[0].copy()

    def variance(self) -> np.ndarray:
        """Variance under the germ measure: weighted sum of squared coefficients."""
        c = self.coefficients[1:]
        return (c * c * self.basis.norms_sq[1:, None]).sum(axis=0)

    def order(self) -> int:
        """Maximum total degree present in the index set."""
        return int(self.basis.indices.sum(axis=1).max())
