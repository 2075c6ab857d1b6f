"""Exception types shared across the package."""


class InvalidInputError(ValueError):
    """Raised when a numeric argument is non-finite or outside its domain."""


class ConfigError(ValueError):
    """Raised on configuration problems; the message names the offending key."""


class TopologyError(ValueError):
    """Raised when the network reduction is singular or ill-posed."""


class WindCutoffError(ValueError):
    """Raised by tip_speed_ratio below the cut-off wind speed."""


class DivergenceError(RuntimeError):
    """Raised when an integration step produces a non-finite derivative."""

    def __init__(self, message: str, t: float):
        super().__init__(message)
        self.t = t
