"""Static figures from declaw CSV artifacts."""

from .io import PlotsError, read_decay, read_snapshot
from .render import render, validate_spec

__version__ = "0.1.0"

__all__ = ["PlotsError", "read_decay", "read_snapshot", "render", "validate_spec",
           "__version__"]
