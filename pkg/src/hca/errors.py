"""Exception hierarchy shared by every module of the package."""


class HcaError(Exception):
    """Base class for all errors raised by :mod:`hca`."""


class DimensionMismatch(HcaError, ValueError):
    pass


class NotSymmetric(HcaError, ValueError):
    pass


class NotAntisymmetric(HcaError, ValueError):
    pass


class NotSelfAdjoint(HcaError, ValueError):
    pass


class NotHermitian(HcaError, ValueError):
    pass


class NotCommuting(HcaError, ValueError):
    """Raised when a conservation theorem is invoked with ``[G, H] != 0``."""


class NonConsecutiveStates(HcaError, ValueError):
    pass


class TooShort(HcaError, ValueError):
    pass


class BoundarySite(HcaError, ValueError):
    pass


class ZeroVariation(HcaError, ValueError):
    pass


class OutOfRange(HcaError, IndexError):
    pass


class DimensionTooLarge(HcaError, ValueError):
    pass


class EmptyWindow(HcaError, ValueError):
    pass


class NonFiniteTime(HcaError, ValueError):
    pass


class OutsideTrustedRegion(HcaError, ValueError):
    pass


class PrecisionLoss(HcaError, OverflowError):
    """An exact integer is too large to be represented exactly as a double."""


class UnstableSpectrum(HcaError, ValueError):
    pass


class NoConvergence(HcaError, RuntimeError):
    pass


class OutOfValidatedRange(HcaError, ValueError):
    pass


class StabilityViolated(HcaError, ValueError):
    pass


class TooFewScales(HcaError, ValueError):
    pass


class ConfigError(HcaError, ValueError):
    """Malformed scenario file or command-line configuration."""
