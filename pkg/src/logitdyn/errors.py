"""Exception types shared across the package."""


class LogitDynError(Exception):
    """Base class for all package errors."""


class CapExceeded(LogitDynError):
    """The requested exact computation exceeds a configured size budget."""


class GameSpecError(LogitDynError, ValueError):
    """A game specification (JSON, table, payoff matrix) is malformed."""


class InconsistencyError(LogitDynError):
    """Independent checks disagree, or an integration step found a contradiction."""


class ConvergenceError(LogitDynError):
    """An iterative solver hit its iteration cap before reaching tolerance."""
