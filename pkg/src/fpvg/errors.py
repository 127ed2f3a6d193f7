"""Exception types shared across the toolkit."""

from __future__ import annotations


class FpvgError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(FpvgError):
    """Input failed schema or invariant validation.

    Carries enough location context (file, line, field) for a
    machine-readable diagnostic.
    """

    def __init__(
        self,
        message: str,
        *,
        file: str | None = None,
        line: int | None = None,
        field: str | None = None,
    ):
        self.file = file
        self.line = line
        self.field = field
        super().__init__(message)

    def to_diagnostic(self) -> dict:
        out = {"error": "validation", "message": str(self)}
        if self.file is not None:
            out["file"] = self.file
        if self.line is not None:
            out["line"] = self.line
        if self.field is not None:
            out["field"] = self.field
        return out


class EvaluationError(FpvgError):
    """A metric computation was asked to proceed from inconsistent inputs."""


class GenerationError(FpvgError):
    """Synthetic world generation could not satisfy its constraints."""
