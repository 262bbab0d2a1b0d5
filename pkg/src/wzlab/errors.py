"""Exception types shared across the package."""


class WZLabError(Exception):
    """Base class for all package errors."""


class DomainError(WZLabError, ValueError):
    """Input outside the mathematical domain of an operation."""


class FrameError(WZLabError, ValueError):
    """Mixing algebra vectors from different frames, or an unknown frame tag."""


class GaugeError(WZLabError, ValueError):
    """Evaluation off a gauge's chart, or a mismatched gauge/transform pairing."""


class ChartError(WZLabError, ValueError):
    """Curve leaves the polar strip on which the equator gauge is defined."""


class DegenerateLogError(WZLabError):
    """Logarithm requested at the antipode U = -1, where the axis is undefined.

    The rotation angle is still well defined (pi) and is carried on the
    exception.
    """

    def __init__(self, message="group logarithm at U = -1: axis undefined"):
        super().__init__(message)
        self.angle = 3.141592653589793


class DegenerateParamsError(WZLabError, ValueError):
    """Density evaluation with a degenerate (zero-width) parameter set."""


class IntegrationError(WZLabError, RuntimeError):
    """Numerical integration failed its accuracy contract."""


class ConfigError(WZLabError, ValueError):
    """Invalid experiment configuration."""
