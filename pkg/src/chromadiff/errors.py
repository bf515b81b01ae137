"""Exception hierarchy shared across the package."""


class ChromadiffError(Exception):
    """Base class for all errors raised by this package."""


class ConfigurationError(ChromadiffError):
    """Invalid user-supplied configuration (bad value, unknown key, missing file)."""


class ContractViolation(ChromadiffError):
    """An API precondition was broken (shape mismatch, index out of range)."""


class NumericalFault(ChromadiffError):
    """A computation produced non-finite values.

    ``context`` identifies where it happened (a step index, a layer name).
    """

    def __init__(self, message, context=None):
        if context is not None:
            message = f"{message} ({context})"
        super().__init__(message)
        self.context = context
