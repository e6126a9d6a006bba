"""Joint stochastic-parametric PCE surrogates.

The construction is sequential: for every training parameter point a
stochastic PCE is regressed on inverse-Rosenblatt training pairs, then the
resulting coefficient maps z_s(lambda) are themselves fitted with
parametric PCEs (order picked by model evidence), and finally the two
stages collapse into one expansion over the concatenated (parametric,
stochastic) germ.  The flat expansion yields analytic moments and Sobol
indices and can be resampled as a generative model.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import ndtri

from .basis import (
    BasisSet,
    GermKind,
    PcExpansion,
    eval_index_matrix,
    index_norms_sq,
    sample_germ,
)
from .exceptions import DomainError
from .regression import least_squares_fit, select_order_by_evidence
from .rosenblatt import RosenblattMap

_BOX_TOL = 1e-9


@dataclass
class ParameterSpace:
    """Physical input domain and its map to the parametric germ.

    With a uniform germ (the default), inputs live in the box
    [lower, upper] and the germ is the componentwise rescale to [-1, 1].
    The log-rate convention lower/upper = nominal -/+ ln(scale_factor) is
    honored: nominal and scale factors are derived from the box when not
    given.  With a normal germ the map is (value - nominal) / sigma and
    there is no bounding box.
    """

    names: tuple[str, ...]
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None
    nominal: np.ndarray | None = None
    scale_factors: np.ndarray | None = None
    germ: GermKind = GermKind.UNIFORM
    sigma: np.ndarray | None = None

    def __post_init__(self):
        self.names = tuple(str(n) for n in self.names)
        self.germ = GermKind(self.germ)
        d = len(self.names)

        def as_vec(v, label):
            if v is None:
                return None
            arr = np.asarray(v, dtype=float).ravel()
            if arr.size != d:
                raise ValueError(f"{label} must have {d} entries, got {arr.size}")
            return arr

        self.lower = as_vec(self.lower, "lower")
        self.upper = as_vec(self.upper, "upper")
        self.nominal = as_vec(self.nominal, "nominal")
        self.scale_factors = as_vec(self.scale_factors, "scale_factors")
        self.sigma = as_vec(self.sigma, "sigma")

        if self.germ == GermKind.UNIFORM:
            if self.lower is None or self.upper is None:
                raise ValueError("uniform-germ parameter space needs lower and upper")
            if np.any(self.lower >= self.upper):
                raise ValueError("lower bounds must be strictly below upper bounds")
            half = 0.5 * (self.upper - self.lower)
            mid = 0.5 * (self.upper + self.lower)
            if self.nominal is None:
                self.nominal = mid
            if self.scale_factors is None:
                self.scale_factors = np.exp(half)
            check = np.log(self.scale_factors)
            if not (np.allclose(self.nominal, mid, atol=1e-8 * (1 + np.abs(mid)).max())
                    and np.allclose(check, half, rtol=1e-8, atol=1e-10)):
                raise ValueError(
                    "nominal/scale_factors inconsistent with bounds: expected "
                    "[nominal - ln r, nominal + ln r]"
                )
        else:
            if self.nominal is None or self.sigma is None:
                raise ValueError("normal-germ parameter space needs nominal and sigma")
            if np.any(self.sigma <= 0):
                raise ValueError("sigma entries must be positive")

    @property
    def dim(self) -> int:
        return len(self.names)

    @property
    def germ_kinds(self) -> tuple[GermKind, ...]:
        return (self.germ,) * self.dim

    def to_germ(self, lam) -> np.ndarray:
        lam = np.asarray(lam, dtype=float)
        if self.germ == GermKind.UNIFORM:
            return (2.0 * lam - (self.upper + self.lower)) / (self.upper - self.lower)
        return (lam - self.nominal) / self.sigma

    def from_germ(self, xi) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        if self.germ == GermKind.UNIFORM:
            return 0.5 * (self.upper + self.lower) + 0.5 * (self.upper - self.lower) * xi
        return self.nominal + self.sigma * xi

    def contains(self, lam) -> np.ndarray:
        """Row-wise membership test (always true for a normal germ)."""
        lam = np.atleast_2d(np.asarray(lam, dtype=float))
        if self.germ == GermKind.NORMAL:
            return np.ones(lam.shape[0], dtype=bool)
        tol = _BOX_TOL * (1.0 + np.abs(self.upper - self.lower))
        return np.all((lam >= self.lower - tol) & (lam <= self.upper + tol), axis=1)

    def require_inside(self, lam):
        ok = self.contains(lam)
        if not ok.all():
            bad = int(np.flatnonzero(~ok)[0])
            raise DomainError(
                f"parameter row {bad} lies outside the validity box: "
                f"{np.atleast_2d(lam)[bad].tolist()}"
            )

    def to_dict(self) -> dict:
        def listify(v):
            return None if v is None else [float(x) for x in v]

        return {
            "names": list(self.names),
            "lower": listify(self.lower),
            "upper": listify(self.upper),
            "nominal": listify(self.nominal),
            "scale_factors": listify(self.scale_factors),
            "germ": self.germ.value,
            "sigma": listify(self.sigma),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ParameterSpace":
        return cls(
            names=tuple(d["names"]),
            lower=d.get("lower"),
            upper=d.get("upper"),
            nominal=d.get("nominal"),
            scale_factors=d.get("scale_factors"),
            germ=GermKind(d.get("germ", "uniform")),
            sigma=d.get("sigma"),
        )


@dataclass
class BuildConfig:
    """Knobs for the surrogate construction pipeline."""

    stoch_order: int = 1
    max_param_order: int = 2
    stoch_germ: GermKind = GermKind.NORMAL
    bandwidth_factor: float = 0.75
    n_train: int | None = None     # germ points per stochastic fit; default 4 S
    ridge: float = 0.0
    eps: float = 0.01              # KLE explained-variance tolerance
    seed: int = 0
    threads: int | None = None

    def __post_init__(self):
        self.stoch_germ = GermKind(self.stoch_germ)

    def to_dict(self) -> dict:
        d = self.__dict__.copy()
        d["stoch_germ"] = self.stoch_germ.value
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "BuildConfig":
        known = {k: d[k] for k in cls.__dataclass_fields__ if k in d}
        return cls(**known)


@dataclass
class StochasticPce:
    """Expansion in the stochastic germ only, fitted at one parameter point."""

    germ_kind: GermKind
    order: int
    basis: BasisSet
    z: np.ndarray  # (S, n_out)

    @property
    def n_terms(self) -> int:
        return self.basis.n_terms

    def __call__(self, zeta) -> np.ndarray:
        return self.basis.eval(np.asarray(zeta, dtype=float)) @ self.z


def stochastic_training_levels(dim: int, n_train: int, seed: int) -> np.ndarray:
    """Uniform levels in (0,1)^dim used to drive the inverse Rosenblatt map.

    One dimension gets the deterministic midpoint quantile grid; higher
    dimensions use fixed-seed stratified (Latin hypercube) draws.
    """
    if dim == 1:
        return ((np.arange(n_train) + 0.5) / n_train)[:, None]
    rng = np.random.Generator(np.random.Philox(seed))
    levels = np.empty((n_train, dim))
    for ell in range(dim):
        levels[:, ell] = (rng.permutation(n_train) + rng.random(n_train)) / n_train
    return levels


def levels_to_germ(levels: np.ndarray, kind: GermKind) -> np.ndarray:
    """Map uniform (0,1) levels to germ coordinates."""
    if kind == GermKind.UNIFORM:
        return 2.0 * levels - 1.0
    return ndtri(levels)


def fit_stochastic_pce(replicas, germ_kind, order: int,
                       bandwidth_factor: float = 0.75,
                       n_train: int | None = None,
                       ridge: float = 0.0,
                       seed: int = 0) -> StochasticPce:
    """Fit one stochastic PCE from replica samples at a fixed parameter.

    Builds the Rosenblatt map from the replicas, drives its inverse with
    deterministic uniform levels, and regresses the resulting outputs on
    the stochastic germ basis.  The germ dimension equals the number of
    replica components.
    """
    y = np.asarray(replicas, dtype=float)
    if y.ndim == 1:
        y = y[:, None]
    kind = GermKind(germ_kind)
    d = y.shape[1]
    basis = BasisSet.total_degree((kind,) * d, order)
    if n_train is None:
        n_train = 4 * basis.n_terms

    rmap = RosenblattMap(y, bandwidth_factor=bandwidth_factor)
    levels = stochastic_training_levels(d, n_train, seed)
    germ = levels_to_germ(levels, kind)
    targets = rmap.inverse(levels)
    fit = least_squares_fit(basis.eval(germ), targets, ridge=ridge)
    return StochasticPce(germ_kind=kind, order=order, basis=basis, z=fit.coefficients)


def fit_parametric_coeff_pce(lambdas, z_targets, param_space: ParameterSpace,
                             max_order: int, ridge: float = 0.0) -> PcExpansion:
    """Fit one coefficient map z_s(lambda) with an evidence-selected order."""
    lams = np.asarray(lambdas, dtype=float)
    if lams.ndim == 1:
        lams = lams[:, None]
    param_space.require_inside(lams)
    xi = param_space.to_germ(lams)
    kinds = param_space.germ_kinds
    z = np.asarray(z_targets, dtype=float).ravel()
    order = select_order_by_evidence(xi, z, kinds, max_order)
    basis = BasisSet.total_degree(kinds, order)
    fit = least_squares_fit(basis.eval(xi), z, ridge=ridge)
    return PcExpansion(basis=basis, coefficients=fit.coefficients)


@dataclass
class SobolReport:
    """Variance partition: per-input main effects, noise group, residual.

    All arrays carry a trailing output axis; for every output the partition
    main.sum() + noise_group + interaction_residual equals one unless the
    total variance is zero, in which case the entries are zero and
    ``zero_variance`` is set.
    """

    main: np.ndarray                  # (n_param, n_out)
    noise_group: np.ndarray           # (n_out,)
    interaction_residual: np.ndarray  # (n_out,)
    total_variance: np.ndarray        # (n_out,)
    zero_variance: np.ndarray         # (n_out,) bool


def sobol_partition(indices: np.ndarray, n_param: int, norms_sq: np.ndarray,
                    coefficients: np.ndarray) -> SobolReport:
    """Analytic Sobol partition of a PCE over (parametric, stochastic) dims.

    Main effect i collects terms whose degree is concentrated in parametric
    dimension i alone; the noise group collects terms supported entirely on
    the stochastic dimensions; everything else is interaction residual.
    """
    coeffs = coefficients if coefficients.ndim == 2 else coefficients[:, None]
    weighted = coeffs * coeffs * norms_sq[:, None]
    total_deg = indices.sum(axis=1)
    var = weighted[total_deg > 0].sum(axis=0)
    n_out = coeffs.shape[1]

    main_abs = np.zeros((n_param, n_out))
    for i in range(n_param):
        mask = (indices[:, i] > 0) & (total_deg == indices[:, i])
        main_abs[i] = weighted[mask].sum(axis=0)
    zeta_deg = indices[:, n_param:].sum(axis=1)
    noise_mask = (zeta_deg > 0) & (zeta_deg == total_deg)
    noise_abs = weighted[noise_mask].sum(axis=0)

    zero = var <= 0
    safe = np.where(zero, 1.0, var)
    main = np.where(zero[None, :], 0.0, main_abs / safe[None, :])
    noise = np.where(zero, 0.0, noise_abs / safe)
    residual = np.where(zero, 0.0, (var - main_abs.sum(axis=0) - noise_abs) / safe)
    return SobolReport(
        main=main, noise_group=noise, interaction_residual=residual,
        total_variance=var, zero_variance=zero,
    )


@dataclass
class JointPce:
    """Flat PCE over the concatenated (parametric, stochastic) germ."""

    param_space: ParameterSpace
    n_stoch: int
    stoch_germ: GermKind
    basis: BasisSet                # germ kinds: parametric dims then stochastic
    coefficients: np.ndarray       # (J, n_out)
    stoch_order: int
    per_s_orders: list[int] = field(default_factory=list)
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        self.stoch_germ = GermKind(self.stoch_germ)
        c = np.asarray(self.coefficients, dtype=float)
        if c.ndim == 1:
            c = c[:, None]
        if c.shape[0] != self.basis.n_terms:
            raise ValueError("coefficient rows must match joint basis size")
        self.coefficients = c
        expected = self.param_space.germ_kinds + (self.stoch_germ,) * self.n_stoch
        if self.basis.germ_kinds != expected:
            raise ValueError("joint basis germ kinds do not match space layout")

    @property
    def n_param(self) -> int:
        return self.param_space.dim

    @property
    def dim(self) -> int:
        return self.n_param + self.n_stoch

    @property
    def n_out(self) -> int:
        return self.coefficients.shape[1]

    def _check_support(self, points: np.ndarray):
        for ell, kind in enumerate(self.basis.germ_kinds):
            if kind == GermKind.UNIFORM and np.any(np.abs(points[:, ell]) > 1 + _BOX_TOL):
                raise DomainError(
                    f"germ component {ell} outside [-1, 1]; the surrogate is only "
                    "valid inside its training box"
                )

    def eval_germ(self, points) -> np.ndarray:
        """Evaluate at germ coordinates (n, n_param + n_stoch) or (dim,)."""
        pts = np.asarray(points, dtype=float)
        squeeze = pts.ndim == 1
        pts = np.atleast_2d(pts)
        if pts.shape[1] != self.dim:
            raise ValueError(f"expected {self.dim} germ components, got {pts.shape[1]}")
        self._check_support(pts)
        out = self.basis.eval(pts) @ self.coefficients
        return out[0] if squeeze else out

    def sample(self, xi, zeta) -> np.ndarray:
        """One generative evaluation at parametric germ xi, stochastic germ zeta."""
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        zeta = np.atleast_1d(np.asarray(zeta, dtype=float))
        return self.eval_germ(np.concatenate([xi, zeta]))

    def moments(self) -> tuple[np.ndarray, np.ndarray]:
        """Analytic mean and variance over the joint germ measure."""
        mean = self.coefficients[0].copy()
        c = self.coefficients[1:]
        var = (c * c * self.basis.norms_sq[1:, None]).sum(axis=0)
        return mean, var

    def _stoch_groups(self):
        """Unique stochastic index rows, their member terms, and norms."""
        stoch_idx = self.basis.indices[:, self.n_param:]
        uniq, inverse = np.unique(stoch_idx, axis=0, return_inverse=True)
        norms = index_norms_sq((self.stoch_germ,) * self.n_stoch, uniq)
        return uniq, inverse.ravel(), norms

    def conditional_moments(self, xi) -> tuple[np.ndarray, np.ndarray]:
        """Mean and variance over the stochastic germ at fixed parametric germ.

        Accepts one germ point (n_param,) or a batch (n, n_param); returns
        arrays of shape (n_out,) or (n, n_out) accordingly.
        """
        pts = np.asarray(xi, dtype=float)
        squeeze = False
        if pts.ndim == 0:
            pts = pts.reshape(1, 1)
            squeeze = True
        elif pts.ndim == 1:
            if pts.size == self.n_param:
                pts = pts[None, :]
                squeeze = True
            elif self.n_param == 1:
                pts = pts[:, None]
            else:
                raise ValueError(f"expected {self.n_param} parametric components")
        if pts.shape[1] != self.n_param:
            raise ValueError(f"expected {self.n_param} parametric components")
        if self.param_space.germ == GermKind.UNIFORM and \
                np.any(np.abs(pts) > 1 + _BOX_TOL):
            raise DomainError("parametric germ outside [-1, 1]")

        param_idx = self.basis.indices[:, :self.n_param]
        psi = eval_index_matrix(self.param_space.germ_kinds, param_idx, pts)
        uniq, inverse, norms = self._stoch_groups()
        n_pts, n_out = pts.shape[0], self.n_out
        z = np.zeros((n_pts, len(uniq), n_out))
        contrib = psi[:, :, None] * self.coefficients[None, :, :]
        for g in range(len(uniq)):
            z[:, g] = contrib[:, inverse == g].sum(axis=1)
        zero_row = int(np.flatnonzero(uniq.sum(axis=1) == 0)[0])
        mean = z[:, zero_row]
        others = [g for g in range(len(uniq)) if g != zero_row]
        var = (z[:, others] ** 2 * norms[others][None, :, None]).sum(axis=1)
        return (mean[0], var[0]) if squeeze else (mean, var)

    def sobol_main(self) -> SobolReport:
        """Main-effect and noise-group Sobol indices from the coefficients."""
        return sobol_partition(
            self.basis.indices, self.n_param, self.basis.norms_sq, self.coefficients
        )

    def conditional_quantile_samples(self, xi, count: int) -> np.ndarray:
        """Deterministic quantile sweep of the conditional distribution.

        Only for a one-dimensional stochastic germ: evaluates the surrogate
        on the midpoint quantile grid of the germ, yielding ``count`` values
        whose empirical distribution is the surrogate conditional at xi.
        """
        if self.n_stoch != 1:
            raise ValueError("quantile sweep requires a 1-D stochastic germ")
        levels = ((np.arange(count) + 0.5) / count)[:, None]
        zeta = levels_to_germ(levels, self.stoch_germ)
        pts = np.hstack([np.tile(np.atleast_1d(xi), (count, 1)), zeta])
        return self.eval_germ(pts)

    def conditional_random_samples(self, xi, count: int,
                                   rng: np.random.Generator) -> np.ndarray:
        """Random generative draws of the conditional distribution at xi."""
        zeta = sample_germ((self.stoch_germ,) * self.n_stoch, count, rng)
        pts = np.hstack([np.tile(np.atleast_1d(xi), (count, 1)), zeta])
        return self.eval_germ(pts)

    def to_dict(self) -> dict:
        return {
            "param_space": self.param_space.to_dict(),
            "n_stoch": self.n_stoch,
            "stoch_germ": self.stoch_germ.value,
            "germ_kinds": [k.value for k in self.basis.germ_kinds],
            "multi_indices": self.basis.indices.tolist(),
            "coefficients": [[float(v) for v in row] for row in self.coefficients],
            "stoch_order": self.stoch_order,
            "per_s_orders": [int(o) for o in self.per_s_orders],
            "provenance": self.provenance,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "JointPce":
        space = ParameterSpace.from_dict(d["param_space"])
        kinds = tuple(GermKind(k) for k in d["germ_kinds"])
        basis = BasisSet(kinds, np.asarray(d["multi_indices"], dtype=int))
        return cls(
            param_space=space,
            n_stoch=int(d["n_stoch"]),
            stoch_germ=GermKind(d["stoch_germ"]),
            basis=basis,
            coefficients=np.asarray(d["coefficients"], dtype=float),
            stoch_order=int(d["stoch_order"]),
            per_s_orders=[int(o) for o in d.get("per_s_orders", [])],
            provenance=d.get("provenance", {}),
        )


def _graded_order(index_tuple):
    return (sum(index_tuple), tuple(-e for e in index_tuple))


def assemble_joint(stoch_fits: Sequence[StochasticPce],
                   param_fits: Sequence[Sequence[PcExpansion]],
                   param_space: ParameterSpace,
                   provenance: dict | None = None) -> JointPce:
    """Collapse per-lambda stochastic fits and coefficient fits into one PCE.

    Args:
        stoch_fits: stochastic PCEs, one per training parameter point; they
            must share germ kind, order, and output count.
        param_fits: param_fits[s][k] is the parametric expansion of
            coefficient map s for output k.
        param_space: the parametric domain.
        provenance: recorded verbatim on the result.

    The joint multi-index set is the union over (s, output) of pairs
    (parametric index, stochastic index s); coefficients never collide
    because the stochastic parts are distinct across s.
    """
    if not stoch_fits:
        raise ValueError("need at least one stochastic fit")
    first = stoch_fits[0]
    for f in stoch_fits:
        if (f.order != first.order or f.germ_kind != first.germ_kind
                or f.n_terms != first.n_terms or f.z.shape != first.z.shape):
            raise ValueError("stochastic fits must share order, germ, and shape")
    n_stoch = first.basis.dim
    n_out = first.z.shape[1]
    n_s = first.n_terms
    if len(param_fits) != n_s:
        raise ValueError(f"expected {n_s} coefficient maps, got {len(param_fits)}")

    entries: dict[tuple[int, ...], np.ndarray] = {}
    seen: set[tuple[int, ...,]] = set()
    for s in range(n_s):
        fits_s = param_fits[s]
        if len(fits_s) != n_out:
            raise ValueError(f"coefficient map {s} must have {n_out} output fits")
        s_part = tuple(int(v) for v in first.basis.indices[s])
        for k, fit in enumerate(fits_s):
            for p_row, coeff in zip(fit.basis.indices, fit.coefficients[:, 0]):
                key = tuple(int(v) for v in p_row) + s_part
                tagged = key + (k,)
                if tagged in seen:
                    raise ValueError("duplicate joint multi-index during assembly")
                seen.add(tagged)
                row = entries.setdefault(key, np.zeros(n_out))
                row[k] = coeff

    ordered = sorted(entries, key=_graded_order)
    indices = np.array(ordered, dtype=int)
    coeffs = np.array([entries[key] for key in ordered])
    kinds = param_space.germ_kinds + (first.germ_kind,) * n_stoch
    per_s_orders = [max(f.order() for f in param_fits[s]) for s in range(n_s)]
    return JointPce(
        param_space=param_space,
        n_stoch=n_stoch,
        stoch_germ=first.germ_kind,
        basis=BasisSet(kinds, indices),
        coefficients=coeffs,
        stoch_order=first.order,
        per_s_orders=per_s_orders,
        provenance=provenance or {},
    )


def _resolve_threads(threads: int | None) -> int:
    if threads is not None:
        return max(1, int(threads))
    return max(1, min(32, os.cpu_count() or 1))


def fit_stochastic_ensemble(replicas: np.ndarray, config: BuildConfig
                            ) -> list[StochasticPce]:
    """Fit per-lambda stochastic PCEs, parallel across parameter points.

    ``replicas`` has shape (N, M, d).  Each fit is independent and the
    result does not depend on the thread count.
    """
    n_lam = replicas.shape[0]

    def fit_one(n):
        return fit_stochastic_pce(
            replicas[n], config.stoch_germ, config.stoch_order,
            bandwidth_factor=config.bandwidth_factor,
            n_train=config.n_train, ridge=config.ridge, seed=config.seed,
        )

    workers = _resolve_threads(config.threads)
    if workers == 1 or n_lam == 1:
        return [fit_one(n) for n in range(n_lam)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fit_one, range(n_lam)))


def build_joint_pce(lambdas, replicas, param_space: ParameterSpace,
                    config: BuildConfig | None = None) -> JointPce:
    """End-to-end joint PCE construction from a replica ensemble.

    Args:
        lambdas: (N, d_param) training parameter points.
        replicas: (N, M, d) replica outputs, d the QoI dimension.
        param_space: parametric domain; every lambda row must lie inside.
        config: build knobs; defaults to BuildConfig().
    """
    config = config or BuildConfig()
    lams = np.asarray(lambdas, dtype=float)
    if lams.ndim == 1:
        lams = lams[:, None]
    values = np.asarray(replicas, dtype=float)
    if values.ndim == 2:
        values = values[:, :, None]
    if values.shape[0] != lams.shape[0]:
        raise ValueError("replicas and lambdas disagree on the number of points")
    param_space.require_inside(lams)

    stoch_fits = fit_stochastic_ensemble(values, config)
    z = np.stack([f.z for f in stoch_fits])  # (N, S, n_out)
    n_s, n_out = z.shape[1], z.shape[2]

    param_fits = [
        [
            fit_parametric_coeff_pce(lams, z[:, s, k], param_space,
                                     config.max_param_order, ridge=config.ridge)
            for k in range(n_out)
        ]
        for s in range(n_s)
    ]
    provenance = {
        "build_config": config.to_dict(),
        "n_param_samples": int(lams.shape[0]),
        "n_replicas": int(values.shape[1]),
        "n_train": int(config.n_train or 4 * stoch_fits[0].n_terms),
        "bandwidth_factor": config.bandwidth_factor,
        "seeds": {"stochastic_levels": config.seed},
    }
    return assemble_joint(stoch_fits, param_fits, param_space, provenance)
