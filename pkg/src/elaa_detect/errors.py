"""Exception hierarchy shared by all modules."""


class DetectionError(Exception):
    """Base class for errors raised by this package."""


class DimensionError(DetectionError, ValueError):
    """Operand shapes are incompatible."""


class ShapeError(DetectionError, ValueError):
    """A matrix lacks a required structure (square, Hermitian, ...)."""


class NotPositiveDefinite(DetectionError, ArithmeticError):
    """A matrix that must be Hermitian positive definite is not."""


class SingularTriangular(DetectionError, ArithmeticError):
    """A triangular factor has a zero on its diagonal."""


class DegenerateStep(DetectionError, ArithmeticError):
    """A step size has a vanishing denominator."""


class GeometryError(DetectionError, ValueError):
    """Antenna layout is physically invalid (e.g. coincident points)."""


class FormatError(DetectionError, ValueError):
    """Bit or symbol blocks have an invalid length or content."""


class ConfigError(DetectionError, ValueError):
    """Experiment configuration failed to parse or validate.

    The message always starts with the dotted key path of the offending
    entry so that CLI users can locate it in their file.
    """

    def __init__(self, path, message):
        self.path = path
        super().__init__(f"{path or '<root>'}: {message}")
