"""Exception types shared across the package."""


class FrnetError(Exception):
    """Base class for all errors raised by this package."""


class ShapeMismatchError(FrnetError):
    """Tensor shapes or ranks are incompatible with the requested operation."""


class GraphError(FrnetError):
    """Invalid use of a computation graph (missing feed, loss not scalar, ...)."""


class DataError(FrnetError):
    """Dataset files or records that fail to parse or validate."""


class MetricError(FrnetError):
    """Metric inputs that make the requested metric undefined."""


class CheckpointError(FrnetError):
    """Checkpoint files that fail magic/version/checksum/shape validation."""


class ConfigError(FrnetError):
    """Invalid run configuration values or config files."""


class MissingArtifactError(FrnetError):
    """A report was requested from a run directory with missing files."""


class PipelineError(FrnetError):
    """A cross-validation fold failed; the message names repeat and fold."""
