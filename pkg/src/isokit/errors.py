"""Exception hierarchy shared by all isokit modules."""


class IsokitError(Exception):
    """Base class for all library errors."""


class ParseError(IsokitError):
    pass


class TopologyError(IsokitError):
    pass


class DegenerateError(IsokitError):
    pass


class DegenerateNormalError(DegenerateError):
    pass


class BudgetError(IsokitError):
    pass


class ConfigError(IsokitError):
    pass


class EmptyClusterError(IsokitError):
    pass


class LevelError(IsokitError):
    pass


class OverlapError(IsokitError):
    pass


class ProjectionError(IsokitError):
    pass


class MeshIOError(IsokitError, OSError):
    """Raised when a mesh file cannot be read or written."""
