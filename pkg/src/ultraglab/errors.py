"""Exception types raised across the package."""


class UltraglabError(Exception):
    pass


class DomainError(UltraglabError, ValueError):
    pass


class InsufficientData(UltraglabError):
    pass


class DegenerateDesign(UltraglabError):
    pass


class DerivativeUnavailable(UltraglabError):
    pass


class UnknownBuiltin(UltraglabError, KeyError):
    pass


class DimMismatch(UltraglabError, ValueError):
    pass


class OutOfDomain(UltraglabError, ValueError):
    pass


class GeometryError(UltraglabError, ValueError):
    pass


class ToleranceError(UltraglabError):
    pass


class SupportError(UltraglabError, ValueError):
    pass


class SeriesBoundViolation(UltraglabError, ValueError):
    pass


class BadBinCount(UltraglabError, ValueError):
    pass


class EmptyBin(UltraglabError):
    pass


class PartitionMismatch(UltraglabError, ValueError):
    pass


class CoefficientNotRegular(UltraglabError):
    pass


class ConfigError(UltraglabError):
    def __init__(self, message, pointer=None):
        self.pointer = pointer
        super().__init__(f"{pointer}: {message}" if pointer else message)
