"""Exception taxonomy shared across the package."""


class CorrpaceError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(CorrpaceError):
    """Invalid configuration: bad hyperparameter value or dimension mismatch."""


class BatchError(CorrpaceError):
    """A sample batch is unusable for pair construction (empty or too small)."""


class CurriculumError(CorrpaceError):
    """Pair feeding produced an impossible selection; signals a feeding bug."""


class TrainingError(CorrpaceError):
    """Optimization failure: non-finite loss or gradient."""


class OracleError(CorrpaceError):
    """The finite-difference oracle could not evaluate the target function."""


class InternalError(CorrpaceError):
    """Internal invariant violation, e.g. a stale cache or missing stream state."""
