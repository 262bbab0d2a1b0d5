"""Figure rendering for the wzlab CSV outputs."""

__version__ = "0.1.0"
