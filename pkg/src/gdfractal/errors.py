"""Exception types raised across the package."""


class GDFractalError(Exception):
    """Base class for all package errors."""


class NonComposablePath(GDFractalError):
    pass


class InvalidDelta(GDFractalError, ValueError):
    pass


class NotIrreducible(GDFractalError):
    pass


class ConvergenceFailure(GDFractalError):
    pass


class BracketFailure(GDFractalError):
    pass


class HomogeneousSystem(GDFractalError):
    """Raised when an operation needs a non-empty condensation set somewhere."""


class EmptyCloud(GDFractalError, ValueError):
    pass


class InsufficientData(GDFractalError, ValueError):
    pass


class NoCondensation(GDFractalError):
    """The sampling chain can never stop."""


class InvalidScheme(GDFractalError, ValueError):
    pass


class InsufficientSamples(GDFractalError, ValueError):
    pass


class NotSimilarity(GDFractalError):
    pass


class UnsupportedDimension(GDFractalError):
    pass


class InsufficientResolution(GDFractalError):
    """No witness point sits deeper than the cloud resolution inside the region."""


class HypothesisViolated(GDFractalError):
    pass


class ParseError(GDFractalError):
    pass


class ValidationError(GDFractalError):
    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report
