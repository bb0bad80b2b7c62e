"""Exception types raised by formopt."""


class FormoptError(Exception):
    """Base class for all formopt errors."""


class InvalidParameterError(FormoptError, ValueError):
    """A parameter is outside its admissible domain."""


class DegenerateGeometryError(FormoptError):
    """The CHIM (or the augmented projection system) is singular."""


class DegenerateDataError(FormoptError):
    """Training data cannot support a fit (too few or coincident points)."""
