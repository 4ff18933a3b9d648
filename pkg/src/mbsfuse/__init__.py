"""mbsfuse: multi-base-station positioning library and benchmark.

Centralized (EKF/UKF over raw range/azimuth stacks, hybrid or
range-only) versus decentralized (linear KF over per-BS position fixes)
fusion, a synthetic urban scenario generator, linearization-error
studies, and a CLI that ties them together.
"""

__version__ = "0.1.0"

from .errors import (  # noqa: F401
    ConfigError,
    DegenerateGeometry,
    EmptySeries,
    InconsistentGeometry,
    InfeasibleProfile,
    MbsfuseError,
    MissingElevation,
    NonPsdCovariance,
    NoVisibleBs,
    SingularInnovation,
)
