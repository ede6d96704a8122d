"""Exception types raised by eaqmac."""


class EAQMACError(Exception):
    """Base class for all library errors."""


class DimensionCap(EAQMACError):
    """A requested object exceeds the dense-dimension cap."""


class DimensionMismatch(EAQMACError, ValueError):
    pass


class FactorError(EAQMACError, ValueError):
    """Subsystem factorization missing or inconsistent with the request."""


class NotHermitian(EAQMACError, ValueError):
    pass


class InvalidState(EAQMACError, ValueError):
    """Matrix is not a density operator even after tolerance repair."""


class InvalidChannel(EAQMACError, ValueError):
    pass


class BadDistribution(EAQMACError, ValueError):
    pass


class LabelError(EAQMACError, ValueError):
    pass


class AlphabetError(EAQMACError, ValueError):
    pass


class NotDephasing(EAQMACError, ValueError):
    pass


class DegenerateDecoder(EAQMACError):
    pass


class BadOperands(EAQMACError, ValueError):
    pass


class ConsistencyError(EAQMACError, AssertionError):
    """An internal cross-check between two computation routes failed."""
