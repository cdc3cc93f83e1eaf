"""Exception hierarchy shared by all jjsim modules.

The CLI maps :class:`ConfigurationError` to exit status 2 and every other
:class:`JJSimError` to exit status 3.
"""


class JJSimError(Exception):
    """Base class for all library errors."""


class ConfigurationError(JJSimError, ValueError):
    """Malformed input: bad keys, mismatched dimensions, invalid records."""


class DomainError(JJSimError, ValueError):
    """Argument outside the physical domain of a formula."""


class PreconditionError(JJSimError, ValueError):
    """A validity condition of an approximation is violated."""


class ContractViolation(JJSimError, ValueError):
    """Operands are incompatible with the operation (wrong site kind, non-Hermitian...)."""


class UnsupportedError(JJSimError, NotImplementedError):
    pass


class NoEquilibriumError(JJSimError, RuntimeError):
    pass


class InstabilityError(JJSimError, RuntimeError):
    def __init__(self, message, mode_index=None, eigenvalue=None):
        super().__init__(message)
        self.mode_index = mode_index
        self.eigenvalue = eigenvalue


class ResourceError(JJSimError, MemoryError):
    pass


class SolverError(JJSimError, RuntimeError):
    pass
