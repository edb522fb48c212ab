"""Exception hierarchy shared by every module."""


class JcrpError(Exception):
    pass


class ParameterError(JcrpError, ValueError):
    """Model parameters lie outside every admissible regime."""


class DomainError(JcrpError, ValueError):
    """An object has the wrong size, class or shape for the operation."""


class RangeError(DomainError, IndexError):
    pass


class ResourceError(JcrpError, RuntimeError):
    """An exhaustive computation would exceed its enumeration budget."""
