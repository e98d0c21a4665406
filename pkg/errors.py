"""
errors.py
Exception hierarchy shared by every edgesplit module.

All domain errors derive from EdgeSplitError (itself a ValueError) so the CLI
can report them with a single except clause.
"""


class EdgeSplitError(ValueError):
    """Base class for all domain errors."""


class NetworkParseError(EdgeSplitError):
    """Network description is malformed."""

    def __init__(self, message: str, layer: str | None = None):
        self.layer = layer
        if layer is not None:
            message = f"layer '{layer}': {message}"
        super().__init__(message)


class ShapeError(NetworkParseError):
    """Layer chain produces an inconsistent or non-positive shape."""


class CorruptStreamError(EdgeSplitError):
    """Encoded feature stream cannot be decoded."""


class CurveError(EdgeSplitError):
    """Accuracy curve file is invalid or lacks a requested entry."""


class InfeasibleError(EdgeSplitError):
    """No sampled quality factor satisfies the accuracy-loss bound."""


class ConfigError(EdgeSplitError):
    """Hardware or channel description is invalid."""
