"""Exception hierarchy shared across the toolkit."""


class DupkitError(Exception):
    """Base class for all toolkit errors."""


class DimensionMismatchError(DupkitError):
    """Vector/matrix dimensionalities do not agree."""


class StoreFormatError(DupkitError):
    """Embedding store file is malformed (bad magic, truncation, NaN/Inf)."""


class InvariantError(DupkitError):
    """A domain-type invariant was violated."""


class EstimateUndefinedError(DupkitError):
    """Overlap estimate requested before any positive pair is reachable."""
