"""Exception types raised across the package."""


class NumericalDivergence(ArithmeticError):
    """A state update produced NaN or Inf."""


class ModeUnavailable(RuntimeError):
    """The requested learning-signal mode needs data that was not recorded."""


class ContractViolation(ValueError):
    """Shapes or arguments do not satisfy an operation's preconditions."""


class InvalidRate(ValueError):
    """A spike rate gives a per-step probability outside [0, 1]."""


class ConfigError(ValueError):
    """A run configuration is malformed or contains unknown keys."""


class SpikeFlipDetected(UserWarning):
    """A finite-difference perturbation changed at least one spike.

    The difference quotient is still returned but is not a derivative of the
    smooth dynamics the gradient refers to.
    """
