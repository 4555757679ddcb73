"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """A parameter combination violates a documented precondition."""


class RegimeUnsatisfiedError(RuntimeError):
    """A strict-mode check was requested at parameters outside the admissible regime."""


class StateSpaceError(ValueError):
    """An exact computation was requested on a state space that is too large."""
