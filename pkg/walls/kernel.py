"""Feynman kernels K(b, T; a, 0) on the half line.

Closed forms for the four regimes of L, with the z-integrals of the
nonstandard walls written through the Faddeeva function w(z) = exp(-z^2)
erfc(-iz). An independent oracle integrates the spectral representation
over the scattering states.
"""

import cmath
import logging
import math
from functools import lru_cache

import numpy as np
from scipy.integrate import quad
from scipy.special import wofz

from .errors import DomainError, EvaluationFailure, QuadratureFailure
from .models import NATURAL, KernelMethod, KernelQuery, KernelValue, UnitSystem, WallParameter
from .quadrature import panel_nodes, refine, uniform_edges
from .spectrum import phase_shifts

logger = logging.getLogger(__name__)

_EIGHTH_TURN = cmath.exp(0.25j * math.pi)
CHECK_TOLERANCE = 1e-8
SPECTRAL_TOLERANCE = 1e-8
EPSILON_LADDER = (1e-2, 5e-3, 2.5e-3)
_DAMPING_EXPONENT = 36.0     # exp(-36) left at the cutoff wavenumber
_PANEL_PHASE = 4.0 * math.pi
_NODES_PER_PANEL = 16


def _alpha(T: float, units: UnitSystem) -> float:
    return units.mass / (2.0 * units.hbar * T)


def prefactor(T: float, *, units: UnitSystem = NATURAL) -> complex:
    """sqrt(m / (2 pi i hbar T))."""
    return math.sqrt(_alpha(T, units) / math.pi) / _EIGHTH_TURN


# 1. The z-integral of the nonstandard walls

def _z_integral_closed(alpha: float, s: float, lam: float, sign: float) -> complex:
    """pref * 2 lam int_0^inf exp(-lam z) exp(i alpha (s + sign z)^2) dz."""
    root = math.sqrt(alpha)
    z = _EIGHTH_TURN * root * (sign * s + 1j * lam / (2.0 * alpha))
    return lam * cmath.exp(1j * alpha * s * s) * complex(wofz(z))


@lru_cache(maxsize=1024)
def _z_integral_check(alpha: float, s: float, lam: float, sign: float) -> float:
    """Discrepancy between the Faddeeva route and adaptive quadrature."""
    pref = math.sqrt(alpha / math.pi) / _EIGHTH_TURN

    def phase(t: float) -> float:
        return alpha * (s + sign * t / lam) ** 2

    re, _ = quad(lambda t: math.exp(-t) * math.cos(phase(t)), 0.0, 40.0, limit=400, epsabs=1e-11, epsrel=1e-10)
    im, _ = quad(lambda t: math.exp(-t) * math.sin(phase(t)), 0.0, 40.0, limit=400, epsabs=1e-11, epsrel=1e-10)
    by_quadrature = pref * 2.0 * complex(re, im)
    return abs(by_quadrature - _z_integral_closed(alpha, s, lam, sign)) / abs(pref)


def _checked_z_integral(alpha: float, s: float, lam: float, sign: float) -> tuple[complex, float]:
    alpha_low = min(alpha, 0.25 * lam * lam)
    s_low = min(s, 1.0 / lam)
    discrepancy = _z_integral_check(alpha_low, s_low, lam, sign)
    if discrepancy > CHECK_TOLERANCE:
        raise EvaluationFailure(
            f"Faddeeva evaluation disagrees with quadrature by {discrepancy:.2e}", operation="kernel_closed"
        )
    return _z_integral_closed(alpha, s, lam, sign), discrepancy


# 2. Closed forms

def closed_form(wall: WallParameter, a: float, b: float, T: float, *, units: UnitSystem = NATURAL) -> tuple[complex, float]:
    """Kernel value and estimated error; a, b may touch the wall."""
    alpha = _alpha(T, units)
    pref = prefactor(T, units=units)
    s = a + b
    direct = cmath.exp(1j * alpha * (b - a) ** 2)
    image = cmath.exp(1j * alpha * s * s)
    roundoff = 4.0 * np.finfo(float).eps * abs(pref)
    if wall.is_dirichlet:
        return pref * (direct - image), roundoff
    if wall.is_neumann:
        return pref * (direct + image), roundoff

    L = wall.L
    lam = 1.0 / abs(L)
    if L < 0.0:
        tail, discrepancy = _checked_z_integral(alpha, s, lam, 1.0)
        value = pref * (direct + image) - tail
    else:
        tail, discrepancy = _checked_z_integral(alpha, s, lam, -1.0)
        bound = (2.0 / L) * cmath.exp(1j * units.hbar * T / (2.0 * units.mass * L * L)) * math.exp(-s / L)
        value = pref * (direct + image) - tail + bound
    return value, max(discrepancy * abs(pref), roundoff)


def kernel_closed(q: KernelQuery, *, units: UnitSystem = NATURAL) -> KernelValue:
    value, error = closed_form(q.wall, q.a, q.b, q.T, units=units)
    return KernelValue(value=value, method=KernelMethod.CLOSED, est_error=error)


def bound_contribution(wall: WallParameter, a: float, b: float, T: float, *, units: UnitSystem = NATURAL) -> complex:
    """phi_b(b) phi_b(a) exp(i hbar T / 2 m L^2) for L > 0, zero otherwise."""
    if not wall.is_nonstandard_finite or wall.L < 0.0:
        return 0j
    L = wall.L
    return (2.0 / L) * math.exp(-(a + b) / L) * cmath.exp(1j * units.hbar * T / (2.0 * units.mass * L * L))


# 3. Spectral oracle

def _spectral_sum(q: KernelQuery, edges: np.ndarray, epsilons: list[float], units: UnitSystem) -> np.ndarray:
    k, w = panel_nodes(edges, _NODES_PER_PANEL)
    s = q.a + q.b
    weight = w * (np.cos(k * (q.b - q.a)) + np.cos(k * s + phase_shifts(k, q.wall))) / math.pi
    rate = units.hbar * k * k / (2.0 * units.mass)
    oscillation = weight * np.exp(-1j * rate * q.T)
    return np.array([np.dot(oscillation, np.exp(-rate * eps)) for eps in epsilons])


def kernel_spectral(
    q: KernelQuery, k_max: float = 50.0, nodes: int = 400, *, include_bound: bool = True, units: UnitSystem = NATURAL
) -> KernelValue:
    """Integral over scattering states with T -> T - i eps and Richardson extrapolation to eps = 0.

    The eps ladder is scaled by T / max(1, m (a+b)^2 / 2 hbar T) so the
    extrapolation stays in its asymptotic regime for fast phases.
    """
    if nodes < 200:
        raise DomainError(f"need at least 200 nodes, got {nodes}", operation="kernel_spectral")
    if k_max <= 0.0:
        raise DomainError(f"k_max must be positive, got {k_max}", operation="kernel_spectral")
    s = q.a + q.b
    action = units.mass * s * s / (2.0 * units.hbar * q.T)
    epsilons = [e * q.T / max(1.0, action) for e in EPSILON_LADDER]
    k_cut = max(k_max, math.sqrt(2.0 * _DAMPING_EXPONENT * units.mass / (units.hbar * epsilons[-1])))
    width = _PANEL_PHASE / (units.hbar * k_cut * q.T / units.mass + s)
    panels = max(math.ceil(k_cut / width), math.ceil(nodes / _NODES_PER_PANEL))
    edges = uniform_edges(0.0, k_cut, panels)

    coarse = _spectral_sum(q, edges, epsilons, units)
    fine = _spectral_sum(q, refine(edges), epsilons, units)
    scale = abs(prefactor(q.T, units=units))
    doubling = float(np.max(np.abs(fine - coarse)))
    if doubling > SPECTRAL_TOLERANCE * scale:
        raise QuadratureFailure(
            f"spectral integral changed by {doubling / scale:.2e} under node doubling", operation="kernel_spectral"
        )

    k1, k2, k3 = fine
    r1 = 2.0 * k2 - k1
    r2 = 2.0 * k3 - k2
    value = (4.0 * r2 - r1) / 3.0
    error = max(abs(value - r2), doubling)
    if include_bound:
        value += bound_contribution(q.wall, q.a, q.b, q.T, units=units)
    logger.debug("spectral kernel %s: %d panels up to k=%.4g, est %.2e", q, panels, k_cut, error)
    return KernelValue(value=complex(value), method=KernelMethod.SPECTRAL, est_error=error)


# 4. Checks on the closed forms

def kernel_boundary_check(
    wall: WallParameter,
    a: float,
    T: float,
    condition: WallParameter | None = None,
    *,
    units: UnitSystem = NATURAL,
) -> float:
    """Residual of the boundary condition ``condition`` for K(b) of ``wall`` at b = 0.

    One-sided second-order differences in b. Normalized by |pref|, and by the
    free length sqrt(hbar T / m) for the derivative-only Neumann condition.
    """
    condition = wall if condition is None else condition
    scale = math.sqrt(units.hbar * T / units.mass)
    h = 1e-3 * min(scale, units.hbar * T / (units.mass * a))
    k0, k1, k2 = (closed_form(wall, a, b, T, units=units)[0] for b in (0.0, h, 2.0 * h))
    slope = (-3.0 * k0 + 4.0 * k1 - k2) / (2.0 * h)
    pref = abs(prefactor(T, units=units))
    if condition.is_neumann:
        return abs(slope) * scale / pref
    return abs(k0 + condition.L * slope) / pref


def kernel_pde_residual(q: KernelQuery, step: float, *, units: UnitSystem = NATURAL) -> float:
    """|i hbar dK/dT + (hbar^2/2m) d2K/db2| relative to hbar |K| / T, central differences.

    ``step`` is the relative step: dT = step * T and db = step * min(b, sqrt(hbar T / m)).
    """
    dT = step * q.T
    db = step * min(q.b, math.sqrt(units.hbar * q.T / units.mass))

    def K(b: float, T: float) -> complex:
        return closed_form(q.wall, q.a, b, T, units=units)[0]

    centre = K(q.b, q.T)
    time_rate = (K(q.b, q.T + dT) - K(q.b, q.T - dT)) / (2.0 * dT)
    curvature = (K(q.b + db, q.T) - 2.0 * centre + K(q.b - db, q.T)) / (db * db)
    residual = 1j * units.hbar * time_rate + units.h2m * curvature
    return abs(residual) * q.T / (units.hbar * abs(centre))
