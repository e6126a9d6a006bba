"""Sensitivity analysis under log-normal rate uncertainty.

A surrogate trained on a log-uniform box is uniformly accurate there, but
physical rate constants are better described by log-normal distributions.
The workflow: derive per-rate standard deviations from the box scale
factors and a confidence multiplier, draw standard-normal rate samples,
push them through the existing uniform-germ surrogate to manufacture a new
training set, and rebuild a surrogate whose parametric germ is standard
normal (Hermite basis throughout).  Sobol indices of the rebuilt surrogate
then quantify sensitivities under the log-normal input law.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .basis import GermKind, sample_germ
from .exceptions import NumericalError
from .joint_pce import BuildConfig, ParameterSpace, SobolReport
from .klpc import KlpcSurrogate, build_klpc
from .synthetic import make_rng


def derive_sigma(r: float, z: float, n_prime: int) -> float:
    """Standard deviation sqrt(N') ln(r) / z from a scale factor and z-score.

    Implemented exactly as printed in the source procedure even though the
    sqrt(N') factor grows with the sample count; see the documented anomaly.
    """
    if r <= 1.0:
        raise ValueError(f"scale factor must exceed 1, got {r}")
    if z <= 0.0:
        raise ValueError(f"confidence multiplier must be positive, got {z}")
    if n_prime < 1:
        raise ValueError(f"sample count must be >= 1, got {n_prime}")
    return math.sqrt(n_prime) * math.log(r) / z


@dataclass
class LognormalSpec:
    """Log-normal rate description: nominal log-rates and spread recipe."""

    nominal: np.ndarray        # mu_i, the nominal log-rates
    scale_factors: np.ndarray  # r_i > 1
    z: float                   # confidence multiplier
    n_prime: int               # sample count in the confidence relation

    def __post_init__(self):
        self.nominal = np.asarray(self.nominal, dtype=float).ravel()
        self.scale_factors = np.asarray(self.scale_factors, dtype=float).ravel()
        if self.scale_factors.size != self.nominal.size:
            raise ValueError("nominal and scale_factors must have equal length")
        # validates r, z, n_prime ranges
        self.sigma = np.array([
            derive_sigma(r, self.z, self.n_prime) for r in self.scale_factors
        ])

    @property
    def dim(self) -> int:
        return self.nominal.size

    def to_dict(self) -> dict:
        return {
            "nominal": [float(v) for v in self.nominal],
            "r": [float(v) for v in self.scale_factors],
            "z": float(self.z),
            "n_prime": int(self.n_prime),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LognormalSpec":
        return cls(nominal=d["nominal"], scale_factors=d["r"],
                   z=float(d["z"]), n_prime=int(d["n_prime"]))


@dataclass
class RebuildResult:
    """Rebuilt normal-germ surrogate plus out-of-range accounting."""

    surrogate: KlpcSurrogate
    clamp_count: int          # clamped germ components (clamp policy)
    reject_count: int         # redrawn sample rows (reject policy)
    out_of_range_fraction: float  # fraction of sample rows with any violation
    n_samples: int
    replicas_per_sample: int


def resample_and_rebuild(surrogate: KlpcSurrogate, spec: LognormalSpec,
                         n_samples: int, replicas_per_sample: int,
                         out_of_range_policy: str = "clamp",
                         config: BuildConfig | None = None,
                         seed: int = 20) -> RebuildResult:
    """Rebuild a surrogate with a standard-normal parametric germ.

    Draws log-normal rate samples, evaluates the uniform-germ surrogate to
    generate replica fields, and fits a new KLPC on that synthetic data.
    Rate samples falling outside the original box are clamped and counted
    by default ("clamp"); the "reject" policy redraws them instead.  More
    than half the rows out of range aborts the rebuild.

    Args:
        surrogate: KLPC trained on a uniform (log-uniform box) germ.
        spec: log-normal rate description; dimension must match.
        n_samples: parameter rows N' of the synthetic training set.
        replicas_per_sample: replicas per row.
        out_of_range_policy: "clamp" or "reject".
        config: build knobs for the rebuild; defaults to the original
            surrogate's recorded configuration.
        seed: stream seed for sampling.
    """
    space = surrogate.joint.param_space
    if space.germ != GermKind.UNIFORM:
        raise ValueError("resample_and_rebuild expects a uniform-germ surrogate")
    if spec.dim != space.dim:
        raise ValueError(
            f"spec has {spec.dim} rates but the surrogate has {space.dim} inputs"
        )
    if out_of_range_policy not in ("clamp", "reject"):
        raise ValueError(f"unknown out-of-range policy: {out_of_range_policy!r}")
    if n_samples < 2 or replicas_per_sample < 2:
        raise ValueError("need at least 2 samples and 2 replicas")

    rng = make_rng(seed)
    nu = rng.standard_normal((n_samples, spec.dim))
    theta = spec.nominal + nu * spec.sigma
    xi = space.to_germ(theta)

    clamp_count = 0
    reject_count = 0
    oor_rows = int(np.any(np.abs(xi) > 1.0, axis=1).sum())
    oor_fraction = oor_rows / n_samples
    if oor_fraction > 0.5:
        raise NumericalError(
            f"{oor_rows}/{n_samples} rate samples fall outside the surrogate box; "
            "the log-normal spread is incompatible with the training domain"
        )

    if out_of_range_policy == "clamp":
        clamp_count = int((np.abs(xi) > 1.0).sum())
        xi = np.clip(xi, -1.0, 1.0)
    else:
        for _ in range(1000):
            bad = np.any(np.abs(xi) > 1.0, axis=1)
            if not bad.any():
                break
            reject_count += int(bad.sum())
            redraw = rng.standard_normal((int(bad.sum()), spec.dim))
            nu[bad] = redraw
            theta[bad] = spec.nominal + redraw * spec.sigma
            xi[bad] = space.to_germ(theta[bad])
        else:
            raise NumericalError("rejection sampling failed to stay inside the box")

    # Generate the synthetic training tensor from the uniform-germ surrogate.
    d_stoch = surrogate.joint.n_stoch
    m = replicas_per_sample
    zeta = sample_germ((surrogate.joint.stoch_germ,) * d_stoch,
                       n_samples * m, rng)
    germ_rows = np.hstack([np.repeat(xi, m, axis=0), zeta])
    fields = surrogate.generate_batch(germ_rows)
    tensor = fields.reshape(n_samples, m, -1)

    base = config
    if base is None:
        recorded = surrogate.joint.provenance.get("build_config")
        base = BuildConfig.from_dict(recorded) if recorded else BuildConfig()
    # the rebuilt surrogate is Gauss-Hermite in every dimension
    rebuild_config = replace(base, seed=base.seed + 1, stoch_germ=GermKind.NORMAL)

    normal_space = ParameterSpace(
        names=space.names, germ=GermKind.NORMAL,
        nominal=spec.nominal, sigma=spec.sigma,
    )
    rebuilt = build_klpc(theta, tensor, surrogate.kle.grid, normal_space,
                         rebuild_config)
    return RebuildResult(
        surrogate=rebuilt,
        clamp_count=clamp_count,
        reject_count=reject_count,
        out_of_range_fraction=oor_fraction,
        n_samples=n_samples,
        replicas_per_sample=m,
    )


def sobol_from_rebuilt(result: RebuildResult | KlpcSurrogate,
                       x_index: int) -> SobolReport:
    """Pointwise Sobol report of the rebuilt normal-germ surrogate."""
    surrogate = result.surrogate if isinstance(result, RebuildResult) else result
    return surrogate.pointwise_sobol(x_index)
