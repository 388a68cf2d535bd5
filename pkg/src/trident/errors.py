"""Exception types shared across the package."""


class TridentError(Exception):
    """Base class for all errors raised by this package."""


class DistinctnessViolation(TridentError, ValueError):
    """Two derived coefficients or increments of a Trident key coincide."""


class UnsupportedWidth(TridentError, ValueError):
    """The word width cannot be serialized to whole bytes."""


class InsufficientData(TridentError, ValueError):
    """Input is shorter than the minimum a test or estimator needs."""


class NonInvertibleDifference(TridentError, ValueError):
    """x1 - x0 is even, so it has no inverse modulo 2**n."""


class BadHeader(TridentError, ValueError):
    """Ciphertext does not start with a valid header."""


class KeyMismatch(TridentError, ValueError):
    """Ciphertext header disagrees with the supplied key's width or shift."""
