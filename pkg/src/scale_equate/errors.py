"""Exception hierarchy shared by every module."""

from __future__ import annotations


class ScaleEquateError(Exception):
    """Base class for all errors raised by the package."""


class SchemaError(ScaleEquateError):
    """Input file or item set does not match the expected layout."""


class ParseError(ScaleEquateError):
    """A cell or weight could not be parsed."""

    def __init__(self, message: str, row: int | None = None):
        super().__init__(message if row is None else f"row {row}: {message}")
        self.row = row


class ConfigError(ScaleEquateError):
    """Invalid or incomplete run configuration."""


class DegenerateInputError(ScaleEquateError):
    """Input carries no usable information (zero weight, zero spread, ...)."""


class NonIdentifiableError(ScaleEquateError):
    def __init__(self, item: str, message: str | None = None):
        super().__init__(message or f"item {item!r} is not identifiable "
                         "(all affirmed or all denied among non-extreme respondents)")
        self.item = item


class ConvergenceError(ScaleEquateError):
    def __init__(self, message: str, grad_norm: float):
        super().__init__(f"{message} (last max |gradient| = {grad_norm:.3e})")
        self.grad_norm = grad_norm


class DiagnosticsError(ScaleEquateError):
    """Fit diagnostics cannot be computed on the supplied data."""


class DomainError(ScaleEquateError, ValueError):
    """Argument outside the domain of the function."""


class AnchorExhaustedError(ScaleEquateError):
    def __init__(self, message: str, trace: list[tuple[str, float]]):
        steps = ", ".join(f"{code} ({d:.3f})" for code, d in trace)
        super().__init__(f"{message}; removal trace: [{steps}]")
        self.trace = trace


class CoverageError(ScaleEquateError):
    """A raw score with positive mass has no person parameter."""


class UnstablePipelineError(ScaleEquateError):
    def __init__(self, message: str, n_failed: int, n_requested: int,
                 failures: list[str] | None = None):
        super().__init__(f"{message}: {n_failed}/{n_requested} replications failed")
        self.n_failed = n_failed
        self.n_requested = n_requested
        self.failures = failures or []
