"""Circular Radon transform with centers on a curve: forward maps, Abel
operators, wave-equation reconstruction, billiard artifacts and ghost
construction."""
__version__ = "0.1.0"

from .errors import CircRadonError, ConfigError, NumericsError  # noqa: F401
