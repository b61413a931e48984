"""Numerical laboratory for prescribing Q-curvature on round spheres S^n, n >= 5."""

__version__ = "0.1.0"

from .geometry import BallParam, Dimension, make_dimension  # noqa: E402
from .fspec import FSpec, preset  # noqa: E402

__all__ = ["__version__", "BallParam", "Dimension", "make_dimension", "FSpec", "preset"]
