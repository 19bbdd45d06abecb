"""Exception types shared across the package."""


class DesconError(Exception):
    """Base class for errors raised by this package."""


class PlantFormatError(DesconError):
    """Raised when a plant document cannot be parsed or has inconsistent shapes."""


class SingularPencilError(DesconError):
    """Raised when z*E - A is numerically singular at the requested point."""


class AlphaPathError(DesconError):
    """Raised when the alpha-weighted assembly is requested for a plant whose
    uncertainty is not confined to the state matrix."""
