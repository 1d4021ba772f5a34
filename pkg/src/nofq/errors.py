"""Exception types shared across the package."""


class NOFError(Exception):
    """Base class for all errors raised by nofq."""


class CapExceeded(NOFError):
    """An exact computation would exceed its enumeration or dimension cap."""


class SpecFormatError(NOFError, ValueError):
    """A matrix file or protocol spec file could not be parsed."""


class ProtocolError(NOFError, ValueError):
    """A protocol is malformed or was applied to an incompatible input."""


class QuantumStateError(NOFError, ValueError):
    """A state, map or measurement violates a unitarity/normalization constraint."""
