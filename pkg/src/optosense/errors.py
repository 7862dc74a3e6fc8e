"""
Exception and warning types shared by every optosense module.

Library code raises these; the CLI turns them into single-line diagnostics.
"""

from typing import Optional


class OptosenseError(Exception):
    """Base class for all optosense errors."""


class DomainError(OptosenseError, ValueError):
    """An argument lies outside the domain of the requested operation."""


class InvariantViolationError(DomainError):
    """A value object invariant does not hold (e.g. negative PSD value)."""


class UnitMismatchError(OptosenseError, TypeError):
    """Spectra with different unit tags were combined."""


class DegenerateSignalError(DomainError):
    """The PDH modulation index sits on a Bessel zero: no error signal."""


class InfiniteSensitivityError(DomainError):
    """Zero optical power: the shot-noise floor diverges."""


class ConfigurationError(OptosenseError):
    """A scenario is inconsistent or incomplete for the requested command."""

    def __init__(self, message: str, section: Optional[str] = None, key: Optional[str] = None):
        super().__init__(message)
        self.section = section
        self.key = key


class ScenarioParseError(ConfigurationError):
    """Syntax error in a scenario file."""

    def __init__(self, message: str, line: int = 1, column: int = 1):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class FitError(OptosenseError, RuntimeError):
    """A spectral fit did not converge or had nothing to fit."""

    def __init__(self, message: str, residual_norm: float = float("nan")):
        super().__init__(message)
        self.residual_norm = residual_norm


class AmbiguousFitError(FitError):
    """More than one resonance inside a fit window."""


class DiagnosticError(OptosenseError):
    """An estimator produced an unphysical quantity."""


class AccuracyWarning(UserWarning):
    """A numerical result is known to be biased by a finite span or grid."""

    def __init__(self, message: str, truncation_error: float = 0.0):
        super().__init__(message)
        self.truncation_error = truncation_error


class EdgeTruncationWarning(UserWarning):
    """The optical spot hangs over the edge of the mode-shape grid."""

    def __init__(self, message: str, captured_fraction: float = 1.0):
        super().__init__(message)
        self.captured_fraction = captured_fraction


class ResolutionWarning(UserWarning):
    """A resonance is sampled by fewer points than recommended."""


def format_validation_error(exc) -> str:
    """One-line description of a pydantic ValidationError naming the field."""
    problems = exc.errors()
    if not problems:
        return str(exc)
    first = problems[0]
    location = ".".join(str(part) for part in first.get("loc", ()))
    message = first.get("msg", "invalid value")
    extra = f" (+{len(problems) - 1} more)" if len(problems) > 1 else ""
    return f"{location}: {message}{extra}" if location else f"{message}{extra}"
