"""Exception types raised across the package."""


class ConfigError(ValueError):
    """Invalid parameters or an unsolvable configuration."""


class GeometryError(ValueError):
    """A requested shape does not fit inside the unit cube."""


class FormatError(ValueError):
    """A binary or image file is malformed or inconsistent."""


class ShapeError(ValueError):
    """Array dimensions do not match the problem parameters."""


class NumericalError(ArithmeticError):
    """An iterative method produced a non-finite value."""
