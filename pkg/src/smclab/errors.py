"""Exception hierarchy shared by all modules."""


class SmcLabError(Exception):
    """Base class for every error raised by this package."""


class ModelError(SmcLabError, ValueError):
    """Input model violates a structural invariant."""


class NormalizationError(ModelError):
    pass


class LevelOrderError(SmcLabError, ValueError):
    pass


class LevelMismatchError(SmcLabError, ValueError):
    pass


class DimensionMismatch(SmcLabError, ValueError):
    pass


class KindMismatch(SmcLabError, ValueError):
    """Stability constants of one kind passed where the other is required."""


class NegativeInput(SmcLabError, ValueError):
    pass


class FeasibilityError(SmcLabError):
    """Exact enumeration would exceed the work budget."""


class DomainError(SmcLabError, ValueError):
    pass


class AbsoluteContinuityError(SmcLabError, ValueError):
    pass


class ZeroMassError(SmcLabError, ValueError):
    pass


class NotMixingError(SmcLabError):
    pass


class InapplicableError(SmcLabError):
    """A constant's precondition fails; ``condition`` names the violated inequality."""

    def __init__(self, message, condition=None):
        super().__init__(message)
        self.condition = condition


class ConfigError(SmcLabError, ValueError):
    """Bad CLI configuration or input file; message carries path and field."""
