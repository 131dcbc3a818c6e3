"""Quantum walls on the half line."""

from .core import parse_wall, serialize_wall
from .errors import InputError, NumericalFailure, WallLabError
from .models import NATURAL, UnitSystem, WallParameter

__all__ = [
    "NATURAL",
    "UnitSystem",
    "WallParameter",
    "parse_wall",
    "serialize_wall",
    "WallLabError",
    "InputError",
    "NumericalFailure",
]
