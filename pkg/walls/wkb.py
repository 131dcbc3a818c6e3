"""Semiclassical kernels: direct and bounce actions, the step-potential bounce and A_L.

For L = 0 and L = infinity the kernel is a sum of a direct and a bounced
classical path, each with prefactor sqrt(m / 2 pi i hbar T). The extra
action of the bounce through a shrinking well decides the sign of the image
term. For finite nonzero L the amplitude A_L depends on a + b, which no
point-particle classical picture provides.
"""

import cmath
import logging
import math
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from .classical import BRENT_RTOL, ClassicalPotential, Potential, path_integral
from .errors import DegeneratePath, DivergentLimit, DomainError, NoSolution, UnsupportedWall
from .kernel import closed_form, prefactor
from .models import (
    NATURAL,
    ALReport,
    BounceAnalysis,
    DirectAction,
    KernelDecomposition,
    RegularizationScheme,
    StepPotential,
    UnitSystem,
    WallParameter,
)
from .regularization import leading_v2, make_scheme, scheme_potential

logger = logging.getLogger(__name__)

FD_STEP = 1e-4
BRACKET_STEPS = 60
PHASE_NOISE_FLOOR = 1e-12
AL_SUMS = (2.0, 3.0, 4.0, 6.0)


def _solve_decreasing(f: Callable[[float], float], floor: float, seed: float, operation: str) -> float:
    """Root of a decreasing f on (floor, inf), bracketed from floor + seed by doubling or halving."""
    gap = seed
    value = f(floor + gap)
    if value == 0.0:
        return floor + gap
    for _ in range(BRACKET_STEPS):
        other = 2.0 * gap if value > 0.0 else 0.5 * gap
        other_value = f(floor + other)
        if (other_value < 0.0) != (value < 0.0):
            lo, hi = sorted((gap, other))
            # an infinite transit time means the turning point is past a or b
            return floor + brentq(lambda g: min(f(floor + g), 1e300), lo, hi, xtol=1e-15 * hi, rtol=BRENT_RTOL)
        gap, value = other, other_value
    raise NoSolution(f"no root bracketed from seed {seed:.6g}", operation=operation)


def _at(V: Potential, x: float) -> float:
    return float(np.asarray(V(x), dtype=float))


# 1. Direct path

def _path_max(V: Potential, lo: float, hi: float) -> float:
    samples = np.linspace(lo, hi, 257).tolist()
    samples += [b for b in getattr(V, "breakpoints", ()) if lo < b < hi]
    return float(np.max(np.asarray(V(np.asarray(samples)), dtype=float)))


def direct_energy(V: Potential, a: float, b: float, T: float, *, units: UnitSystem = NATURAL) -> float:
    """Energy of the path a -> b taking time T without a turning point."""
    if a == b:
        raise DegeneratePath("a == b: the direct path rests", operation="direct_energy", energy=_at(V, a))
    lo, hi = sorted((a, b))
    top = _path_max(V, lo, hi)
    root_half_mass = math.sqrt(0.5 * units.mass)

    def excess(E: float) -> float:
        return root_half_mass * path_integral(V, E, lo, hi, -0.5, from_turning=False, operation="direct_energy") - T

    seed = units.mass * (hi - lo) ** 2 / (2.0 * T * T)
    return _solve_decreasing(excess, top, seed, "direct_energy")


def _direct_S(V: Potential, a: float, b: float, T: float, units: UnitSystem) -> tuple[float, float]:
    E = direct_energy(V, a, b, T, units=units)
    lo, hi = sorted((a, b))
    reduced = path_integral(V, E, lo, hi, 0.5, from_turning=False, operation="direct_action")
    return E, -T * E + math.sqrt(2.0 * units.mass) * reduced


def direct_action(V: Potential, a: float, b: float, T: float, *, units: UnitSystem = NATURAL) -> DirectAction:
    """S = -TE + sqrt(2m) int sqrt(E - V) and its mixed derivative, closed form and finite difference."""
    E, S = _direct_S(V, a, b, T, units)
    lo, hi = sorted((a, b))
    curvature = path_integral(V, E, lo, hi, -1.5, from_turning=False, operation="direct_action")
    d2S = -math.sqrt(2.0 * units.mass) / (
        math.sqrt((E - _at(V, a)) * (E - _at(V, b))) * curvature
    )
    h = FD_STEP
    corners = [_direct_S(V, a + sa * h, b + sb * h, T, units)[1] for sa, sb in ((1, 1), (1, -1), (-1, 1), (-1, -1))]
    fd = (corners[0] - corners[1] - corners[2] + corners[3]) / (4.0 * h * h)
    return DirectAction(E=E, S=S, d2S_dadb=d2S, d2S_dadb_fd=fd)


# 2. Bounce path

def _bounce_time(V: ClassicalPotential, E: float, a: float, b: float, units: UnitSystem) -> float:
    x_t = V.turning_point(E)
    if x_t >= min(a, b):
        return math.inf
    legs = sum(path_integral(V, E, x_t, end, -0.5, from_turning=True, operation="bounce_quantities") for end in (a, b))
    return math.sqrt(0.5 * units.mass) * legs


def _bounce_S(V: ClassicalPotential, a: float, b: float, T: float, units: UnitSystem) -> tuple[float, float]:
    seed = units.mass * (a + b) ** 2 / (2.0 * T * T)
    E = _solve_decreasing(lambda E: _bounce_time(V, E, a, b, units) - T, 0.0, seed, "bounce_quantities")
    x_t = V.turning_point(E)
    reduced = sum(path_integral(V, E, x_t, end, 0.5, from_turning=True, operation="bounce_quantities") for end in (a, b))
    return E, -T * E + math.sqrt(2.0 * units.mass) * reduced


def bounce_quantities(V: ClassicalPotential, a: float, b: float, T: float, *, units: UnitSystem = NATURAL) -> BounceAnalysis:
    """Direct and bounced classical paths from a to b in time T."""
    if a == b:
        E_direct, S_direct = _at(V, a), -T * _at(V, a)
    else:
        E_direct, S_direct = _direct_S(V, a, b, T, units)

    E, S = _bounce_S(V, a, b, T, units)
    gap_a, gap_b = E - _at(V, a), E - _at(V, b)
    dS_da = math.sqrt(2.0 * units.mass * gap_a)
    h = FD_STEP
    dS_da_fd = (_bounce_S(V, a + h, b, T, units)[1] - _bounce_S(V, a - h, b, T, units)[1]) / (2.0 * h)

    dE = 1e-5 * E
    dT_dE = (_bounce_time(V, E + dE, a, b, units) - _bounce_time(V, E - dE, a, b, units)) / (2.0 * dE)
    d2S = -units.mass / (2.0 * math.sqrt(gap_a * gap_b) * dT_dE)

    delta_S = S - units.mass * (a + b) ** 2 / (2.0 * T)
    logger.debug("bounce a=%g b=%g T=%g: E=%.10g S=%.10g dS=%.3e", a, b, T, E, S, delta_S)
    return BounceAnalysis(
        E_direct=E_direct,
        S_direct=S_direct,
        direct_degenerate=a == b,
        E_bounce=E,
        S_bounce=S,
        dS_da=dS_da,
        dS_da_fd=dS_da_fd,
        d2S_dadb=d2S,
        delta_S=delta_S,
    )


# 3. Bounce through a step regularization

def _step_energy(p: StepPotential, a: float, b: float, T: float, units: UnitSystem) -> float:
    m = units.mass
    depth = -p.v2

    def excess(E: float) -> float:
        # outer legs at speed sqrt(2E/m) plus the well crossed twice
        return math.sqrt(0.5 * m) * (a + b) / math.sqrt(E) + math.sqrt(2.0 * m) * p.d / math.sqrt(E + depth) - T

    E = _solve_decreasing(excess, 0.0, m * (a + b) ** 2 / (2.0 * T * T), "step_bounce")
    if E >= p.v1:
        raise DomainError(f"bounce energy {E:.6g} clears the barrier V1 = {p.v1:.6g}", operation="step_bounce")
    return E


def _step_S(p: StepPotential, E: float, a: float, b: float, T: float, units: UnitSystem) -> float:
    root_2m = math.sqrt(2.0 * units.mass)
    return -T * E + root_2m * (a + b) * math.sqrt(E) + 2.0 * root_2m * p.d * math.sqrt(E - p.v2)


def step_bounce(
    scheme: RegularizationScheme, d: float, a: float, b: float, T: float, *, units: UnitSystem = NATURAL
) -> BounceAnalysis:
    """Bounce off x = -d through the well of width d; impenetrable region I."""
    p = scheme_potential(scheme, d, units=units)
    m = units.mass
    root_2m = math.sqrt(2.0 * m)
    E = _step_energy(p, a, b, T, units)
    S = _step_S(p, E, a, b, T, units)

    depth = E - p.v2
    remaining = T - root_2m * p.d / math.sqrt(depth)
    db_dE = math.sqrt(2.0 / m) * (remaining / (2.0 * math.sqrt(E)) + math.sqrt(E) * root_2m * p.d * 0.5 * depth**-1.5)
    d2S = root_2m / (2.0 * math.sqrt(E)) / db_dE

    h = FD_STEP * a
    S_plus = _step_S(p, _step_energy(p, a + h, b, T, units), a + h, b, T, units)
    S_minus = _step_S(p, _step_energy(p, a - h, b, T, units), a - h, b, T, units)

    E_direct = m * (b - a) ** 2 / (2.0 * T * T)
    return BounceAnalysis(
        E_direct=E_direct,
        S_direct=E_direct * T,
        direct_degenerate=a == b,
        E_bounce=E,
        S_bounce=S,
        dS_da=root_2m * math.sqrt(E),
        dS_da_fd=(S_plus - S_minus) / (2.0 * h),
        d2S_dadb=d2S,
        delta_S=S - m * (a + b) ** 2 / (2.0 * T),
    )


def delta_S_limit(scheme: RegularizationScheme, *, units: UnitSystem = NATURAL) -> float:
    """lim_{d -> 0} of the extra bounce action, from |V2| ~ (hbar^2/2m) C d^p."""
    C, p = leading_v2(scheme)
    exponent = 1.0 + 0.5 * p
    if exponent > 0.0:
        return 0.0
    if exponent == 0.0:
        return 2.0 * units.hbar * math.sqrt(C)
    raise DivergentLimit(f"{scheme.family.value}: extra action grows like d^{exponent:g}", operation="delta_S_limit")


# 4. Semiclassical kernel and A_L

def wkb_kernel(wall: WallParameter, a: float, b: float, T: float, *, units: UnitSystem = NATURAL) -> complex:
    """Direct plus bounce with the limiting extra action; exact for L = 0 and L = infinity."""
    if wall.is_dirichlet:
        extra = delta_S_limit(make_scheme("s512"), units=units)
    elif wall.is_neumann:
        extra = delta_S_limit(make_scheme("s513"), units=units)
    else:
        raise UnsupportedWall(f"no two-path kernel for L={wall}", operation="wkb_kernel")
    alpha = units.mass / (2.0 * units.hbar * T)
    pref = prefactor(T, units=units)
    bounce = units.mass * (a + b) ** 2 / (2.0 * T) + extra
    return pref * (cmath.exp(1j * alpha * (b - a) ** 2) + cmath.exp(1j * bounce / units.hbar))


def extract_AL(wall: WallParameter, a: float, b: float, T: float, *, units: UnitSystem = NATURAL) -> KernelDecomposition:
    """A_L from K = pref [exp(i m (b-a)^2 / 2hT) + A_L exp(i m (a+b)^2 / 2hT)]."""
    alpha = units.mass / (2.0 * units.hbar * T)
    pref = prefactor(T, units=units)
    value, _ = closed_form(wall, a, b, T, units=units)
    direct_phase = alpha * (b - a) ** 2
    bounce_phase = alpha * (a + b) ** 2
    A = (value / pref - cmath.exp(1j * direct_phase)) * cmath.exp(-1j * bounce_phase)
    return KernelDecomposition(A_L=A, S0_bounce=units.hbar * bounce_phase, prefactor=pref, direct_phase=direct_phase)


def al_asymptotic(wall: WallParameter, a: float, b: float, T: float, *, units: UnitSystem = NATURAL) -> complex:
    """Leading large-T behaviour of A_L for finite nonzero L."""
    if not wall.is_nonstandard_finite:
        raise UnsupportedWall(f"A_L is constant for L={wall}", operation="al_asymptotic")
    L = wall.L
    s = a + b
    m, hbar = units.mass, units.hbar
    scattering = -cmath.exp(-2j * m * L * (s - L) / (hbar * T))
    if L < 0.0:
        return scattering
    alpha = m / (2.0 * hbar * T)
    bound_phase = alpha * (s * s - (hbar * T / (m * L)) ** 2)
    # the bound state grows like sqrt(T) against the scattering part
    return scattering + (2.0 / L) * math.exp(-s / L) * cmath.exp(-1j * bound_phase) / prefactor(T, units=units)


def al_ab_dependence(
    wall: WallParameter, T: float, sums: tuple[float, ...] = AL_SUMS, *, units: UnitSystem = NATURAL
) -> ALReport:
    """Spread of arg A_L over a + b, against the split noise (a, b) -> (s/3, 2s/3)."""
    amplitudes = [extract_AL(wall, 0.5 * s, 0.5 * s, T, units=units).A_L for s in sums]
    uneven = [extract_AL(wall, s / 3.0, 2.0 * s / 3.0, T, units=units).A_L for s in sums]
    phases = np.unwrap(np.angle(amplitudes))
    noise = max(abs(cmath.phase(x / y)) for x, y in zip(amplitudes, uneven))
    report = ALReport(
        wall=wall,
        T=T,
        sums=list(sums),
        phases=phases.tolist(),
        spread=float(np.ptp(phases)),
        noise=max(noise, PHASE_NOISE_FLOOR),
    )
    logger.info("A_L over a+b for L=%s, T=%g: spread %.3e, noise %.1e", wall, T, report.spread, report.noise)
    return report
