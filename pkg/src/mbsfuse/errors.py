"""Exception hierarchy shared across the package."""


class MbsfuseError(Exception):
    """Base class for all package-specific errors."""


class DegenerateGeometry(MbsfuseError):
    """UE and BS share the same horizontal position; azimuth is undefined."""


class InconsistentGeometry(MbsfuseError):
    """Measured 3D range is shorter than the known height difference."""


class MissingElevation(MbsfuseError):
    """A 3D position fix was requested without an elevation angle."""


class SingularInnovation(MbsfuseError):
    """Innovation covariance is not invertible."""


class NonPsdCovariance(MbsfuseError):
    """Covariance failed Cholesky factorization even after jitter."""


class NoVisibleBs(MbsfuseError):
    """No base station survived gating/assembly for this epoch."""


class EmptySeries(MbsfuseError):
    """Metrics requested on an empty error series."""


class InfeasibleProfile(MbsfuseError):
    """Waypoints and speed profile cannot produce a valid trajectory."""


class ConfigError(MbsfuseError):
    """Config file failed to parse or validate.

    ``field`` names the offending key so the CLI can point at it.
    """

    def __init__(self, message: str, field: str | None = None):
        super().__init__(message)
        self.field = field
