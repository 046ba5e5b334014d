class ContourRaceError(Exception):
    """The base class for custom exceptions raised by contourrace."""


class ConfigError(ContourRaceError):
    """A configuration file or value is malformed."""


class DegenerateVelocityError(ContourRaceError):
    """The longitudinal velocity is at or below the configured floor."""


class TrackError(ContourRaceError):
    """The track or portion data cannot describe a drivable circuit."""


class PointTooFarError(TrackError):
    """The point is too far from the centerline to be projected."""


class OutsideRegionError(TrackError):
    """The point lies outside the portion's sampling box."""


class RacelineError(ContourRaceError):
    """The raceline data is malformed or does not form a closed loop."""


class PolicyError(ContourRaceError):
    """The policy document is truncated or has an unsupported schema."""


class SolverError(ContourRaceError):
    """A numerical failure occurred inside the QP solver."""
