"""Exception hierarchy shared by every module of the package."""


class KLEError(Exception):
    """Base class for all errors raised by :mod:`kle`."""


class InvalidArgumentError(KLEError, ValueError):
    """An input violates a documented precondition."""


class NumericError(KLEError, ArithmeticError):
    """A computation produced non-finite values or failed to converge."""


class InadmissibleKernelError(KLEError):
    """The discretized covariance operator has a genuinely negative eigenvalue."""


class InsufficientSpectrumError(KLEError):
    """The available eigenvalues cannot reach the requested variance ratio."""


class DegenerateModeError(KLEError):
    """A mode with zero eigenvalue was requested where a positive one is needed."""
