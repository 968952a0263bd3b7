"""Exception types shared across the package."""

from __future__ import annotations


class MfelabError(Exception):
    """Base class for all package errors."""


class ParameterDomainError(MfelabError):
    """A parameter lies outside the admissible domain (e.g. integer alpha)."""


class WeightSpecError(MfelabError):
    """A weight specification is malformed or fails positivity."""


class SolverError(MfelabError):
    """Newton or continuation failure.  Carries the residual-norm trace."""

    def __init__(self, message: str, trace: list[float] | None = None):
        super().__init__(message)
        self.trace = list(trace) if trace is not None else []


class SpectrumError(MfelabError):
    """Eigenvalue solve failed to converge."""


class ConfigError(MfelabError):
    """A run configuration failed validation.  Carries offending field names."""

    def __init__(self, message: str, fields: list[str] | None = None):
        super().__init__(message)
        self.fields = list(fields) if fields is not None else []


class NotApplicableError(MfelabError):
    """An operation was requested outside its regime of validity."""
