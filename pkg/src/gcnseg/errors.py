"""Exception types shared across the package."""


class GcnsegError(Exception):
    """Base class for all package-specific errors."""


class DimensionError(GcnsegError, ValueError):
    """Shapes or sizes inconsistent with an operation's contract."""


class ArchitectureError(GcnsegError, ValueError):
    """Layer dimension chain of a model description does not line up."""


class NumericalFailure(GcnsegError, RuntimeError):
    """An iterative routine failed to converge or produced non-finite values."""


class DegenerateSpectrumError(GcnsegError, ValueError):
    """The spectrum is degenerate for the requested operation (e.g. zero Laplacian)."""


class LabelError(GcnsegError, ValueError):
    """A class label lies outside the valid range."""


class DatasetError(GcnsegError, ValueError):
    """Dataset contents or directory layout violate the expected structure."""


class RasterFormatError(DatasetError):
    """Malformed PPM/PGM stream; carries the byte offset of the defect."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


class CheckpointError(GcnsegError, ValueError):
    """Malformed or inconsistent checkpoint file."""


class ConfigError(GcnsegError, ValueError):
    """Invalid run configuration: unknown key, unparsable value, or missing input."""
