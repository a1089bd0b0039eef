__all__ = (
    "ArtifactError",
    "DomainError",
    "InputError",
    "SolverError",
    "StratificationError",
    "StructuralTwinExceptionError",
)


class StructuralTwinExceptionError(Exception):
    """Base class for every error raised by digitwin.structural."""


class DomainError(StructuralTwinExceptionError, ValueError):
    """A parameter lies outside its physical or mathematical domain."""


class SolverError(StructuralTwinExceptionError, RuntimeError):
    """The linear system is singular or the solution misses the residual tolerance."""


class InputError(StructuralTwinExceptionError, ValueError):
    """Data handed to a tree or learner is malformed or inconsistent."""


class StratificationError(InputError):
    """A label has too few rows to appear on both sides of a stratified split."""


class ArtifactError(StructuralTwinExceptionError):
    """A file artifact is missing, unreadable or does not match its manifest."""
