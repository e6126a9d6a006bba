"""KLPC surrogates: joint PCEs for KLE mode scores, folded back to fields.

Every retained KLE mode score gets a joint stochastic-parametric PCE; the
mode expansions share one multi-index set (union-padded with zeros), so the
whole surrogate is itself a single PCE whose coefficients depend on the
grid coordinate.  Moments and Sobol indices at a grid point follow from
the same closed forms as for any PCE.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .joint_pce import (
    BuildConfig,
    JointPce,
    ParameterSpace,
    SobolReport,
    assemble_joint,
    fit_parametric_coeff_pce,
    fit_stochastic_ensemble,
    sobol_partition,
)
from .kle import FieldEnsemble, KleModel, fit_kle, project, reconstruct


@dataclass
class KlpcSurrogate:
    """A KLE model plus one joint PCE per retained mode (shared basis)."""

    kle: KleModel
    joint: JointPce  # output column l is the score of KLE mode l
    _field_coeffs: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.joint.n_out != self.kle.n_modes:
            raise ValueError(
                f"joint PCE has {self.joint.n_out} outputs but the KLE retains "
                f"{self.kle.n_modes} modes"
            )

    @property
    def mode_pces(self) -> list[JointPce]:
        """Per-mode single-output views sharing the joint basis."""
        return [
            JointPce(
                param_space=self.joint.param_space,
                n_stoch=self.joint.n_stoch,
                stoch_germ=self.joint.stoch_germ,
                basis=self.joint.basis,
                coefficients=self.joint.coefficients[:, l:l + 1],
                stoch_order=self.joint.stoch_order,
                per_s_orders=self.joint.per_s_orders,
                provenance=self.joint.provenance,
            )
            for l in range(self.kle.n_modes)
        ]

    @property
    def mode_coefficients(self) -> np.ndarray:
        """c_lj matrix of shape (L, J)."""
        return self.joint.coefficients.T

    def field_coefficients(self) -> np.ndarray:
        """Grid-dependent PCE coefficients, shape (J, L_x).

        Row j at grid point x is f0(x) for the constant term plus
        sum_l c_lj sqrt(mu_l) phi_l(x).
        """
        if self._field_coeffs is None:
            amp = np.sqrt(self.kle.retained_eigenvalues)[:, None] * \
                self.kle.eigenvectors.T          # (L, L_x)
            coeffs = self.joint.coefficients @ amp  # (J, L_x)
            coeffs[0] += self.kle.mean_field
            self._field_coeffs = coeffs
        return self._field_coeffs

    def field_pce(self) -> JointPce:
        """The surrogate as one PCE with a coefficient column per grid point."""
        return JointPce(
            param_space=self.joint.param_space,
            n_stoch=self.joint.n_stoch,
            stoch_germ=self.joint.stoch_germ,
            basis=self.joint.basis,
            coefficients=self.field_coefficients(),
            stoch_order=self.joint.stoch_order,
            per_s_orders=self.joint.per_s_orders,
            provenance=self.joint.provenance,
        )

    def generate(self, xi, zeta) -> np.ndarray:
        """One generative field draw at the given germ coordinates."""
        eta = self.joint.sample(xi, zeta)
        return reconstruct(self.kle, eta)[0]

    def generate_batch(self, germ_points: np.ndarray) -> np.ndarray:
        """Fields for a batch of concatenated germ rows, shape (n, L_x)."""
        eta = self.joint.eval_germ(germ_points)
        return reconstruct(self.kle, np.atleast_2d(eta))

    def pointwise_moments(self, x_index: int | None = None):
        """Mean and variance of the field at one grid point (or all).

        Returns scalars for a given index, or two (L_x,) arrays when
        ``x_index`` is None.
        """
        mean, var = self.field_pce().moments()
        if x_index is None:
            return mean, var
        if not 0 <= x_index < self.kle.grid.size:
            raise IndexError(f"grid index {x_index} out of range")
        return float(mean[x_index]), float(var[x_index])

    def pointwise_conditional_moments(self, xi):
        """Conditional mean and variance fields at fixed parametric germ."""
        return self.field_pce().conditional_moments(xi)

    def pointwise_sobol(self, x_index: int) -> SobolReport:
        """Sobol partition of the field variance at one grid point."""
        if not 0 <= x_index < self.kle.grid.size:
            raise IndexError(f"grid index {x_index} out of range")
        coeffs = self.field_coefficients()[:, x_index]
        return sobol_partition(
            self.joint.basis.indices, self.joint.n_param,
            self.joint.basis.norms_sq, coeffs,
        )

    def sobol_field(self) -> SobolReport:
        """Sobol partition at every grid point (output axis = grid)."""
        return self.field_pce().sobol_main()

    def to_dict(self) -> dict:
        return {"kle": self.kle.to_dict(), "joint": self.joint.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> "KlpcSurrogate":
        return cls(
            kle=KleModel.from_dict(d["kle"]),
            joint=JointPce.from_dict(d["joint"]),
        )


def build_klpc(lambdas, replica_tensor, grid, param_space: ParameterSpace,
               config: BuildConfig | None = None) -> KlpcSurrogate:
    """Full KLPC pipeline from a replica tensor of field samples.

    Steps: KLE fit on the combined stochastic-parametric ensemble,
    projection to mode scores, per-lambda stochastic PCEs on the score
    vectors (Rosenblatt chain ordered by descending eigenvalue), parametric
    PCEs for every coefficient map with evidence-selected orders, and
    assembly into a single union-padded joint expansion.

    Args:
        lambdas: (N, d_param) parameter points.
        replica_tensor: (N, M, L_x) field replicas.
        grid: (L_x,) deterministic coordinates.
        param_space: parametric domain.
        config: build knobs (BuildConfig defaults otherwise).
    """
    config = config or BuildConfig()
    lams = np.asarray(lambdas, dtype=float)
    if lams.ndim == 1:
        lams = lams[:, None]
    tensor = np.asarray(replica_tensor, dtype=float)
    if tensor.ndim != 3:
        raise ValueError("replica tensor must be (N, M, L_x)")
    n_lam, n_rep, _ = tensor.shape
    if n_lam != lams.shape[0]:
        raise ValueError("replica tensor and lambdas disagree on N")
    if n_lam < 2 or n_rep < 2:
        raise ValueError("need at least 2 parameter points and 2 replicas")
    param_space.require_inside(lams)

    ensemble = FieldEnsemble.from_replica_tensor(tensor, grid)
    kle = fit_kle(ensemble, epsilon=config.eps)
    eta = project(kle, ensemble).reshape(n_lam, n_rep, kle.n_modes)

    stoch_fits = fit_stochastic_ensemble(eta, config)
    z = np.stack([f.z for f in stoch_fits])  # (N, S, L)
    n_s, n_modes = z.shape[1], z.shape[2]

    param_fits = [
        [
            fit_parametric_coeff_pce(lams, z[:, s, l], param_space,
                                     config.max_param_order, ridge=config.ridge)
            for l in range(n_modes)
        ]
        for s in range(n_s)
    ]
    provenance = {
        "build_config": config.to_dict(),
        "n_param_samples": int(n_lam),
        "n_replicas": int(n_rep),
        "n_train": int(config.n_train or 4 * stoch_fits[0].n_terms),
        "bandwidth_factor": config.bandwidth_factor,
        "kle_eps": config.eps,
        "kle_modes": int(kle.n_modes),
        "explained_fraction": float(kle.explained_fraction),
        "seeds": {"stochastic_levels": config.seed},
    }
    joint = assemble_joint(stoch_fits, param_fits, param_space, provenance)
    return KlpcSurrogate(kle=kle, joint=joint)
