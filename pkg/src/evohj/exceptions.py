"""Exception hierarchy shared by the library and the CLI exit-code mapping."""


class EvoHJError(Exception):
    """Base class for all package errors."""


class InvalidParameters(EvoHJError, ValueError):
    pass


class NoPositiveEquilibrium(EvoHJError):
    pass


class NonConvergence(EvoHJError):
    pass


class NoEssFound(EvoHJError):
    pass


class QuadratureFailure(EvoHJError):
    pass


class DegenerateEss(EvoHJError):
    pass


class DomainError(EvoHJError, ValueError):
    pass


class SingularSystem(EvoHJError):
    pass


class Extinction(EvoHJError):
    pass


class BimodalSplitFailure(EvoHJError):
    pass


class FitFailure(EvoHJError):
    pass


class BoundaryMassWarning(UserWarning):
    """Density at the domain boundary is not negligible; widen the grid."""
