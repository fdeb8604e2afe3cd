"""Exception types raised by the package."""


class SdflError(Exception):
    """Base class for all package errors."""


class InvalidSizeError(SdflError, ValueError):
    """Network dimensions are too small or otherwise invalid."""


class NetworkError(SdflError, ValueError):
    """A road network violates its structural invariants."""


class InvalidBudgetError(SdflError, ValueError):
    """A facility budget is outside ``1..n``."""


class ConfigError(SdflError, ValueError):
    """A configuration file or mapping could not be parsed."""


class NoFacilityError(SdflError, ValueError):
    """A facility type has no open location to serve its customers."""


class EnumerationCapError(SdflError, ValueError):
    """Exhaustive enumeration would exceed the configured cap."""

    def __init__(self, count: int, cap: int) -> None:
        super().__init__(f"{count} placements exceed the enumeration cap of {cap}")
        self.count = count
        self.cap = cap


class UnstableQueueError(SdflError, ValueError):
    """Arrival rate is not below the service rate."""
