"""Numerical laboratory for noise effects on spin-3/2 quadrupole holonomies."""

__version__ = "0.1.0"

from .errors import (  # noqa: F401
    ChartError,
    ConfigError,
    DegenerateLogError,
    DegenerateParamsError,
    DomainError,
    FrameError,
    GaugeError,
    IntegrationError,
    WZLabError,
)
