"""Exception types shared across the package."""


class ClarityError(Exception):
    """Base class for errors raised by this package."""


class ValidationError(ClarityError):
    """Bad input data or arguments: malformed records, contract violations."""


class BackendError(ClarityError):
    """An evaluation backend failed at runtime (subprocess died, bad reply)."""


class TransportError(ClarityError):
    """An HTTP call to a remote model endpoint failed."""
