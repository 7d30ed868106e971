"""Exception hierarchy shared across the package."""


class PhotonWMError(Exception):
    """Base class for all package errors."""


class ConfigurationError(PhotonWMError, ValueError):
    """Invalid user-supplied parameters or configuration."""


class GridMismatchError(PhotonWMError, ValueError):
    """Two fields (or a field and a medium) live on different grids."""


class NumericalError(PhotonWMError, RuntimeError):
    """A numerical procedure cannot deliver the requested accuracy."""


class CFLError(NumericalError):
    """Time step exceeds the explicit integrator's stability bound."""


class TruncationError(NumericalError):
    """A truncated expansion leaves more tail mass than allowed."""


class UndefinedDensityError(PhotonWMError, ValueError):
    """Densities normalised by a vanishing energy are undefined."""
