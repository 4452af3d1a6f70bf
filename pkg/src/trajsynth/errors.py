"""Exception hierarchy shared across the package."""


class TrajsynthError(Exception):
    """Base class for all trajsynth errors."""


class MapError(TrajsynthError):
    """Malformed or inconsistent map description."""


class MissingStartError(MapError):
    pass


class MissingGoalError(MapError):
    pass


class DuplicateMarkerError(MapError):
    pass


class UnreachableGoalError(MapError):
    pass


class MalformedPatrolError(MapError):
    pass


class InconsistentKindError(MapError):
    pass


class SteppedTerminalStateError(TrajsynthError):
    """step() was called on a finished game."""


class UnreachableStateError(TrajsynthError):
    """A potential was requested for a cell with no path to its target."""


class NonFiniteLossError(TrajsynthError):
    """Training loss went NaN/Inf; the run is aborted."""


class NoSuccessfulCheckpointError(TrajsynthError):
    """No evaluation during training ever reached the goal."""


class ExpertNotCompetentError(TrajsynthError):
    """The expert policy handed to DAgger cannot finish the game greedily."""


class MapMismatchError(TrajsynthError):
    """Trajectory and map digests disagree."""


class EmptyTrajectoryError(TrajsynthError):
    """METEOR is undefined for zero-length token sequences."""


class InsufficientDataError(TrajsynthError):
    """Not enough observations for the requested statistic."""


class TrajectoryFormatError(TrajsynthError):
    """Unreadable or wrong-version trajectory record."""


class SchemaVersionError(TrajectoryFormatError):
    pass


class ReplayMismatchError(TrajectoryFormatError):
    """Recorded states disagree with re-simulated dynamics."""


class DigestMismatchError(TrajectoryFormatError):
    """A file referenced by a manifest no longer matches its digest."""


class PolicyFormatError(TrajsynthError):
    """Unreadable policy file."""
