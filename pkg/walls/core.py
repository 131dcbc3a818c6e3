"""Wall parameters, grids and the boundary condition psi(0) + L psi'(0) = 0."""

import logging
import math
import re
from typing import Callable

import numpy as np

from .errors import GridMismatch, MalformedInput
from .models import ComplexField, Grid, WallParameter

logger = logging.getLogger(__name__)

_DECIMAL = re.compile(r"^[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?$")
_INFINITE = "inf"


# 1. Wall parameter text form

def parse_wall(text: str) -> WallParameter:
    """Parse a decimal number or the literal ``inf``."""
    token = text.strip() if isinstance(text, str) else text
    if token == _INFINITE:
        return WallParameter.infinite()
    if not isinstance(token, str) or not _DECIMAL.match(token):
        raise MalformedInput(f"not a wall parameter: {text!r}", operation="parse_wall")
    value = float(token)
    if not math.isfinite(value):
        # "1e999" overflows; never let it become the Neumann wall
        raise MalformedInput(f"wall parameter overflows: {text!r}", operation="parse_wall")
    return WallParameter.finite(value)


def serialize_wall(wall: WallParameter) -> str:
    return _INFINITE if wall.is_neumann else repr(wall.L)


# 2. Sampling

def sample_field(grid: Grid, func: Callable[[np.ndarray], np.ndarray]) -> ComplexField:
    return ComplexField(grid=grid, values=func(grid.points()))


def wall_derivative(field: ComplexField) -> complex:
    """One-sided second-order psi'(0)."""
    v = field.values
    return (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * field.grid.spacing)


def boundary_residual(field: ComplexField, wall: WallParameter) -> float:
    """|psi(0) + L psi'(0)| or |psi'(0)|, relative to max |psi|."""
    if not field.grid.starts_at_wall:
        raise GridMismatch(f"grid starts at {field.grid.x_min}, not at the wall", operation="boundary_residual")
    if field.grid.n < 4:
        raise GridMismatch(f"need at least 4 samples, got {field.grid.n}", operation="boundary_residual")
    scale = float(np.max(field.modulus()))
    if scale == 0.0:
        return 0.0
    slope = wall_derivative(field)
    if wall.is_neumann:
        residual = abs(slope)
    else:
        residual = abs(field.values[0] + wall.L * slope)
    logger.debug("boundary residual %.3e for wall %s", residual / scale, wall)
    return float(residual / scale)
