"""Exception hierarchy shared by all oovtab modules.

Every error can carry a ``module``/``stage`` pair naming where in the
pipeline it was raised; the CLI surfaces that location on stderr.
"""

from __future__ import annotations


class OovTabError(Exception):
    """Base class for all domain errors raised by this package."""

    def __init__(self, message: str, *, module: str | None = None, stage: str | None = None):
        super().__init__(message)
        self.message = message
        self.module = module
        self.stage = stage

    def location(self) -> str | None:
        if self.module and self.stage:
            return f"{self.module}/{self.stage}"
        return self.module or self.stage

    def __str__(self) -> str:
        loc = self.location()
        return f"{loc}: {self.message}" if loc else self.message


class ConfigError(OovTabError):
    """Invalid configuration or precondition on user-supplied parameters."""


class SchemaError(OovTabError):
    """Dataset schema violation (duplicate names, bad indices, shape mismatch)."""


class ParseError(OovTabError):
    """Malformed input file (CSV, JSON, JSONL)."""


class FitError(OovTabError):
    """A model or binner could not be fitted on the given data."""


class InvalidValueError(OovTabError):
    """A single value is outside its operation's domain (non-finite, etc.)."""


class RenderError(OovTabError):
    """Prompt rendering produced an empty or malformed prompt."""


class OrderError(OovTabError):
    """A variable-order argument is not a permutation of the expected columns."""


class ContractError(OovTabError):
    """A backend response violated the wire or word-coverage contract."""


class BackendError(OovTabError):
    """Transport-level backend failure (after retries)."""

    def __init__(self, message: str, *, module: str | None = None, stage: str | None = None,
                 attempts: int = 1):
        super().__init__(message, module=module, stage=stage)
        self.attempts = attempts


class EvalError(OovTabError):
    """Metric computation failed (length mismatch, undefined metric)."""


class StatError(OovTabError):
    """Degenerate input to a statistical test."""


class ExportError(OovTabError):
    """File export failed."""
