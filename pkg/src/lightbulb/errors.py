"""Exception types shared across the package."""


class LightbulbError(Exception):
    pass


class UsageError(LightbulbError, ValueError):
    """Bad arguments: out-of-range index, invalid rho, empty selection."""


class ParameterError(LightbulbError, ValueError):
    """Solver parameters cannot be satisfied for the requested shape."""


class CapacityError(ParameterError):
    pass


class FormatError(LightbulbError, ValueError):
    """Malformed or corrupted instance file."""


class GenerationError(LightbulbError, RuntimeError):
    """Rejection sampling ran out of retries."""


class PromiseViolation(LightbulbError, RuntimeError):
    """Input evidently violates the promise a deterministic solver relies on."""
