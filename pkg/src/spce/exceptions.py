"""Exception hierarchy shared across the package.

The CLI maps these to exit codes: DomainError -> 3, ArchiveFormatError -> 4,
NumericalError -> 5.  Plain ValueError / missing files are usage errors (2).
"""


class SpceError(Exception):
    """Base class for package-specific failures."""


class DomainError(SpceError):
    """Input lies outside the validity domain of a surrogate or transform."""


class ArchiveFormatError(SpceError):
    """An ensemble archive or surrogate file is malformed or inconsistent."""


class NumericalError(SpceError):
    """A numerical procedure failed (rank deficiency, divergence, ...)."""


class UnderdeterminedError(NumericalError):
    """Least-squares design is rank deficient and no ridge was requested."""
