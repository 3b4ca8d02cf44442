class PikamError(Exception):
    """Base class for errors raised by pikam."""


class DomainError(PikamError, ValueError):
    """A point, section or box lies outside (or defines no) valid domain."""


class DegenerateFormError(PikamError, ValueError):
    """The symplectic form is singular at the requested point."""


class ConvergenceError(PikamError, RuntimeError):
    """An implicit solve did not converge within its iteration budget."""

    def __init__(self, message: str, step: int | None = None):
        super().__init__(message)
        self.step = step
