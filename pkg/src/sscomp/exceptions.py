"""Exception types shared across the package."""


class ContractViolationError(ValueError):
    """An input violated a documented precondition or invariant."""


class NumericError(RuntimeError):
    """A numerical routine failed (e.g. an eigensolver did not converge).

    Carries whatever diagnostic context the caller attached, such as a
    condition-number report of the offending matrix.
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}
