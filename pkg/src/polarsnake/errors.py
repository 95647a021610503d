"""Exception types shared across the package."""


class PolarSnakeError(Exception):
    """Base class for all package errors."""


class ConfigurationError(PolarSnakeError):
    """Invalid configuration value (unsupported degree, bad knot count, ...)."""


class InputError(PolarSnakeError):
    """Invalid caller input: out-of-range coordinate, bad precondition."""


class ShapeMismatchError(InputError):
    """Arrays that must share a shape do not."""


class InitializationError(PolarSnakeError):
    """Contour initialization failed (e.g. empty mask after thresholding)."""


class DivergenceError(PolarSnakeError):
    """Contour evolution ran away past the image bounds."""


class UnsupportedFormatError(PolarSnakeError):
    """Image file format not supported by the I/O layer."""
