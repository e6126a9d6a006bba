"""Generative polynomial chaos surrogates for stochastic simulators.

The package builds joint expansions over a parametric germ (physical
inputs rescaled to standard random variables) and a stochastic germ
(intrinsic simulator noise, captured through sample-backed Rosenblatt
transforms), compresses random-field outputs with Karhunen-Loeve
expansions, and extracts moments and variance-based sensitivities in
closed form from the expansion coefficients.
"""

from .basis import (
    BasisSet,
    GermKind,
    PcExpansion,
    eval_basis,
    eval_univariate,
    sample_germ,
    total_degree_indices,
    univariate_norm_sq,
)
from .datasets import (
    EnsembleArchive,
    load_surrogate,
    read_ensemble,
    save_surrogate,
    split_train_test,
    write_ensemble,
)
from .exceptions import (
    ArchiveFormatError,
    DomainError,
    NumericalError,
    SpceError,
    UnderdeterminedError,
)
from .joint_pce import (
    BuildConfig,
    JointPce,
    ParameterSpace,
    SobolReport,
    StochasticPce,
    assemble_joint,
    build_joint_pce,
    fit_parametric_coeff_pce,
    fit_stochastic_pce,
)
from .kle import FieldEnsemble, KleModel, fit_kle, project, reconstruct
from .klpc import KlpcSurrogate, build_klpc
from .lognormal_gsa import (
    LognormalSpec,
    RebuildResult,
    derive_sigma,
    resample_and_rebuild,
    sobol_from_rebuilt,
)
from .metrics import (
    count_modes,
    higher_mode_side,
    ks_statistic,
    moment_parity,
    rrmse,
    wasserstein1,
)
from .regression import FitResult, least_squares_fit, log_evidence, select_order_by_evidence
from .rosenblatt import RosenblattMap, build_map

__version__ = "0.1.0"

__all__ = [
    "ArchiveFormatError",
    "BasisSet",
    "BuildConfig",
    "DomainError",
    "EnsembleArchive",
    "FieldEnsemble",
    "FitResult",
    "GermKind",
    "JointPce",
    "KleModel",
    "KlpcSurrogate",
    "LognormalSpec",
    "NumericalError",
    "ParameterSpace",
    "PcExpansion",
    "RebuildResult",
    "RosenblattMap",
    "SobolReport",
    "SpceError",
    "StochasticPce",
    "UnderdeterminedError",
    "assemble_joint",
    "build_joint_pce",
    "build_klpc",
    "build_map",
    "count_modes",
    "derive_sigma",
    "eval_basis",
    "eval_univariate",
    "fit_kle",
    "fit_parametric_coeff_pce",
    "fit_stochastic_pce",
    "higher_mode_side",
    "ks_statistic",
    "least_squares_fit",
    "load_surrogate",
    "log_evidence",
    "moment_parity",
    "project",
    "read_ensemble",
    "reconstruct",
    "resample_and_rebuild",
    "rrmse",
    "sample_germ",
    "save_surrogate",
    "select_order_by_evidence",
    "sobol_from_rebuilt",
    "split_train_test",
    "total_degree_indices",
    "univariate_norm_sq",
    "wasserstein1",
    "write_ensemble",
]
