"""Classical reflecting potentials, classical time delays and the Landau/Abel inversion.

A wall with L > 0 has a classical counterpart whose time delay equals the
quantum one for every launch point. For L < 0 the Abel inversion forces all
turning points onto the negative half line, which no reflecting potential
allows; a weaker realization exists if only the x0 -> infinity limit of the
delay has to match.
"""

import logging
import math
from abc import ABC, abstractmethod
from typing import Callable, Protocol

import numpy as np
from scipy.interpolate import CubicSpline, PchipInterpolator
from scipy.optimize import brentq

from .errors import DomainError, InvalidC, NoTurningPoint, QuadratureFailure
from .models import (
    NATURAL,
    DelayKind,
    DelayProfile,
    ImpossibilityWitness,
    UnitSystem,
    WallParameter,
    WeakRealization,
)
from .quadrature import panel_nodes, refine, uniform_edges

logger = logging.getLogger(__name__)

GAUSS_ORDER = 24
GEOMETRIC_LEVELS = 6
PATH_TOLERANCE = 1e-8
ABEL_TOLERANCE = 1e-10
ABEL_REFINEMENTS = 10
BOUND_TOLERANCE = 1e-8
_GAP_FLOOR = 1e-15
_LEVEL_SLACK = 1e-12
# brentq refuses anything tighter
BRENT_RTOL = 4.0 * np.finfo(float).eps


class Potential(Protocol):
    def __call__(self, x) -> np.ndarray: ...


# 1. Potentials

class ClassicalPotential(ABC):
    """A potential reflecting every positive energy at a single turning point."""

    breakpoints: tuple[float, ...] = ()

    @abstractmethod
    def __call__(self, x) -> np.ndarray:
        ...

    @abstractmethod
    def turning_point(self, E: float) -> float:
        ...


class HardWall(ClassicalPotential):
    """V = 0 for x > 0 with an impenetrable wall at the origin."""

    def __call__(self, x) -> np.ndarray:
        return np.zeros_like(np.asarray(x, dtype=float))

    def turning_point(self, E: float) -> float:
        return 0.0


class CounterpartPotential(ClassicalPotential):
    """(hbar^2/2mL^2)(L^2/x^2 - 1) on (0, L], zero beyond."""

    def __init__(self, L: float, *, units: UnitSystem = NATURAL):
        if not (math.isfinite(L) and L > 0.0):
            raise DomainError(f"classical counterpart needs L > 0, got {L}", operation="counterpart_potential")
        self.L = L
        self.scale = units.h2m / (L * L)
        self.breakpoints = (L,)

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore"):
            inside = self.scale * ((self.L / x) ** 2 - 1.0)
        return np.where(x <= self.L, inside, 0.0)

    def turning_point(self, E: float) -> float:
        return self.L / math.sqrt(1.0 + E / self.scale)


class TabulatedPotential(ClassicalPotential):
    """Monotone cubic through strictly decreasing samples; infinite left of the table, zero right of it."""

    def __init__(self, x: list[float], V: list[float]):
        x = np.asarray(x, dtype=float)
        V = np.asarray(V, dtype=float)
        if x.size < 3 or x.size != V.size:
            raise DomainError("need at least 3 matching samples", operation="turning_point")
        if np.any(np.diff(x) <= 0.0) or np.any(np.diff(V) >= 0.0):
            raise DomainError("samples must be increasing in x and strictly decreasing in V", operation="turning_point")
        if V[-1] < 0.0:
            raise DomainError("the last sample must be non-negative", operation="turning_point")
        self.x = x
        self.V = V
        self.interpolant = PchipInterpolator(x, V)
        self.breakpoints = tuple(float(v) for v in x)

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        inside = self.interpolant(np.clip(x, self.x[0], self.x[-1]))
        return np.where(x < self.x[0], np.inf, np.where(x > self.x[-1], 0.0, inside))

    def turning_point(self, E: float) -> float:
        if E >= self.V[0]:
            raise NoTurningPoint(f"energy {E} exceeds the barrier top {self.V[0]}", operation="turning_point")
        if E <= self.V[-1]:
            return float(self.x[-1])
        span = self.x[-1] - self.x[0]
        return brentq(lambda u: float(self.interpolant(u)) - E, self.x[0], self.x[-1], xtol=1e-14 * span, rtol=1e-15)


class WeakPotential(ClassicalPotential):
    """Inverse of the weak turning-point function x(W) for L < 0."""

    def __init__(self, realization: WeakRealization, *, units: UnitSystem = NATURAL):
        _check_weak(realization)
        self.realization = realization
        self.units = units

    def __call__(self, x) -> np.ndarray:
        return weak_potential(self.realization, x, units=self.units)

    def turning_point(self, E: float) -> float:
        return weak_turning(self.realization, E, units=self.units)


def turning_point(V: ClassicalPotential, E: float) -> float:
    if not (math.isfinite(E) and E > 0.0):
        raise DomainError(f"turning point needs E > 0, got {E}", operation="turning_point")
    return V.turning_point(E)


def counterpart_potential(L: float, x, *, units: UnitSystem = NATURAL):
    """The L > 0 counterpart potential at x > 0."""
    x_arr = np.asarray(x, dtype=float)
    if np.any(x_arr <= 0.0):
        raise DomainError("counterpart potential is defined for x > 0", operation="counterpart_potential")
    values = CounterpartPotential(L, units=units)(x_arr)
    return float(values) if values.ndim == 0 else values


# 2. Path integrals

def _path_edges(V: Potential, lo: float, hi: float, from_turning: bool) -> np.ndarray:
    inner = [b for b in getattr(V, "breakpoints", ()) if lo < b < hi]
    if from_turning:
        s_max = math.sqrt(hi - lo)
        edges = {0.0, s_max}
        edges.update(s_max * 2.0**-j for j in range(1, GEOMETRIC_LEVELS + 1))
        edges.update(math.sqrt(b - lo) for b in inner)
    else:
        edges = set(uniform_edges(lo, hi, 16).tolist())
        edges.update(inner)
    return np.array(sorted(edges))


def _turning_level(V: Potential, E: float, lo: float) -> float:
    """V at the turning point when it agrees with E to roundoff, else E."""
    if lo <= 0.0:
        return E
    top = float(np.asarray(V(lo), dtype=float))
    return top if abs(E - top) <= _LEVEL_SLACK * abs(E) else E


def _path_sum(V, level, lo, edges, weight, from_turning) -> tuple[float, float]:
    nodes, w = panel_nodes(edges, GAUSS_ORDER)
    if from_turning:
        x = lo + nodes * nodes
        jacobian = 2.0 * nodes
    else:
        x = nodes
        jacobian = 1.0
    potential = np.asarray(V(x), dtype=float)
    # level - V(x) vanishes at the turning point with the rounding of V on both sides
    gap = np.maximum(level - potential, _GAP_FLOOR * abs(level))
    values = weight(gap, potential) * jacobian * w
    return float(np.sum(values)), float(np.sum(np.abs(values)))


def integrate_path(
    V: Potential,
    E: float,
    lo: float,
    hi: float,
    weight: Callable[[np.ndarray, np.ndarray], np.ndarray],
    *,
    from_turning: bool,
    operation: str = "classical_time_delay",
) -> float:
    """int_lo^hi weight(E - V, V) dx with x = lo + s^2 when lo is a turning point."""
    if hi <= lo:
        return 0.0
    edges = _path_edges(V, lo, hi, from_turning)
    level = _turning_level(V, E, lo) if from_turning else E
    coarse, _ = _path_sum(V, level, lo, edges, weight, from_turning)
    fine, magnitude = _path_sum(V, level, lo, refine(edges), weight, from_turning)
    if abs(fine - coarse) > PATH_TOLERANCE * max(magnitude, 1e-300):
        raise QuadratureFailure(
            f"path integral on [{lo:.6g}, {hi:.6g}] changed by {abs(fine - coarse):.2e} under panel doubling",
            operation=operation,
        )
    return fine


def path_integral(V: Potential, E: float, lo: float, hi: float, power: float, *, from_turning: bool, operation: str) -> float:
    """int_lo^hi (E - V)^power dx."""
    return integrate_path(V, E, lo, hi, lambda gap, _v: gap**power, from_turning=from_turning, operation=operation)


def _delay_weight(E: float) -> Callable[[np.ndarray, np.ndarray], np.ndarray]:
    root_e = math.sqrt(E)

    def weight(gap, potential):
        # 1/sqrt(E - V) - 1/sqrt(E) without cancellation
        root = np.sqrt(gap)
        return potential / (root * root_e * (root + root_e))

    return weight


def classical_time_delay(V: ClassicalPotential, E: float, x0: float, *, units: UnitSystem = NATURAL) -> float:
    """Round-trip time from x0 minus free flight 2 x0 / v."""
    x_t = turning_point(V, E)
    if x0 <= x_t:
        raise DomainError(f"launch point {x0} not beyond the turning point {x_t}", operation="classical_time_delay")
    excess = integrate_path(V, E, x_t, x0, _delay_weight(E), from_turning=True)
    return math.sqrt(2.0 * units.mass) * (excess - x_t / math.sqrt(E))


def excursion_time(V: ClassicalPotential, E: float, x_ref: float, *, units: UnitSystem = NATURAL) -> float:
    """Time spent to the left of x_ref, the tau-tilde of the inversion."""
    x_t = turning_point(V, E)
    if x_ref <= x_t:
        return 0.0
    return math.sqrt(2.0 * units.mass) * path_integral(
        V, E, x_t, x_ref, -0.5, from_turning=True, operation="excursion_time"
    )


# 3. Delay profiles and the Abel inversion

def quantum_tau_profile(wall: WallParameter) -> DelayProfile:
    return DelayProfile(kind=DelayKind.QUANTUM_TAU, wall=wall)


def tau_tilde_profile(wall: WallParameter) -> DelayProfile:
    return DelayProfile(kind=DelayKind.TAU_TILDE, wall=wall)


def sampled_profile(energies: list[float], delays: list[float]) -> DelayProfile:
    return DelayProfile(kind=DelayKind.SAMPLED, energies=list(energies), delays=list(delays))


def profile_delay(profile: DelayProfile, E, *, units: UnitSystem = NATURAL) -> np.ndarray:
    E = np.asarray(E, dtype=float)
    if profile.kind is DelayKind.SAMPLED:
        order = np.argsort(profile.energies)
        root = np.sqrt(np.asarray(profile.energies)[order])
        spline = CubicSpline(root, np.asarray(profile.delays)[order])
        return spline(np.sqrt(E))
    L = profile.wall.L
    h = units.h2m / (L * L)
    if profile.kind is DelayKind.QUANTUM_TAU:
        return -L * math.sqrt(2.0 * units.mass) / (np.sqrt(E) * (1.0 + E / h))
    return math.sqrt(2.0 * units.mass * L * L) * np.sqrt(E) / (h + E)


def abel_invert(profile: DelayProfile, reference_x: float, W: float, *, units: UnitSystem = NATURAL) -> float:
    """x(W) = x_ref - (1 / (pi sqrt(2m))) int_0^W tau(E) dE / sqrt(W - E), with E = W sin^2(theta)."""
    if not (math.isfinite(W) and W > 0.0):
        raise DomainError(f"W must be positive, got {W}", operation="abel_invert")
    root_w = math.sqrt(W)

    def integrand(theta: np.ndarray) -> np.ndarray:
        sin = np.sin(theta)
        return 2.0 * root_w * sin * profile_delay(profile, W * sin * sin, units=units)

    edges = uniform_edges(0.0, 0.5 * math.pi, 8)
    nodes, w = panel_nodes(edges, GAUSS_ORDER)
    previous = float(np.dot(w, integrand(nodes)))
    for _ in range(ABEL_REFINEMENTS):
        edges = refine(edges)
        nodes, w = panel_nodes(edges, GAUSS_ORDER)
        current = float(np.dot(w, integrand(nodes)))
        if abs(current - previous) <= ABEL_TOLERANCE * max(abs(current), 1e-300):
            return reference_x - current / (math.pi * math.sqrt(2.0 * units.mass))
        previous = current
    raise QuadratureFailure(f"Abel integral at W={W} did not settle", operation="abel_invert")


def _check_repulsive(L: float, operation: str) -> None:
    if not (math.isfinite(L) and L < 0.0):
        raise DomainError(f"needs L < 0, got {L}", operation=operation)


def impossibility_witness(L: float, W: float, *, units: UnitSystem = NATURAL) -> ImpossibilityWitness:
    """The required turning point for an L < 0 delay, in closed form and by Abel quadrature."""
    _check_repulsive(L, "impossibility_bound")
    if not (math.isfinite(W) and W > 0.0):
        raise DomainError(f"W must be positive, got {W}", operation="impossibility_bound")
    gamma = 2.0 * units.mass * L * L / units.hbar**2
    closed = -abs(L) / math.sqrt(1.0 + gamma * W)
    abel = abel_invert(quantum_tau_profile(WallParameter.finite(L)), 0.0, W, units=units)
    return ImpossibilityWitness(L=L, W=W, closed_form=closed, abel=abel)


def impossibility_bound(L: float, W: float, *, units: UnitSystem = NATURAL) -> float:
    """Upper bound on x(W); strictly negative, so no turning point can sit on the half line."""
    witness = impossibility_witness(L, W, units=units)
    if witness.discrepancy > BOUND_TOLERANCE:
        raise QuadratureFailure(
            f"Abel route disagrees with the closed form by {witness.discrepancy:.2e}", operation="impossibility_bound"
        )
    return witness.closed_form


# 4. Weak realization for L < 0

def _check_weak(r: WeakRealization) -> None:
    _check_repulsive(r.L, "weak_potential")
    if not (math.isfinite(r.c) and r.c >= 1.0):
        raise InvalidC(f"weak realization needs c >= 1, got {r.c}", operation="weak_potential")


def weak_turning(r: WeakRealization, W: float, *, units: UnitSystem = NATURAL) -> float:
    """x(W) = (hbar/sqrt(2m)) (c/sqrt(W) - 1/sqrt(h + W)) with h = hbar^2/(2 m L^2)."""
    _check_weak(r)
    if not W > 0.0:
        raise DomainError(f"W must be positive, got {W}", operation="weak_turning")
    h = units.h2m / (r.L * r.L)
    root_w = math.sqrt(W)
    root_hw = math.sqrt(h + W)
    gap = (r.c - 1.0) / root_w + h / (root_w * root_hw * (root_hw + root_w))
    return units.hbar / math.sqrt(2.0 * units.mass) * gap


def weak_eta(y) -> np.ndarray:
    """Auxiliary function of the c = 1 potential at y = x/|L|; eta(0) = 2^(-1/3)."""
    q = np.asarray(y, dtype=float) ** 4 / 27.0
    root = np.sqrt(1.0 + q)
    upper = root + 1.0
    lower = q / upper
    # difference of cube roots written as 2 / (A^2 + AB + B^2)
    return np.sqrt(2.0 / (upper ** (2.0 / 3.0) + np.cbrt(q) + lower ** (2.0 / 3.0))) / math.sqrt(2.0)


def invert_weak_turning(r: WeakRealization, x: float, *, units: UnitSystem = NATURAL) -> float:
    """W with weak_turning(W) = x, bracketed in log W."""
    return math.exp(brentq(lambda u: weak_turning(r, math.exp(u), units=units) - x, -80.0, 80.0, xtol=1e-14, rtol=BRENT_RTOL))


def weak_potential(r: WeakRealization, x, *, units: UnitSystem = NATURAL):
    _check_weak(r)
    x_arr = np.asarray(x, dtype=float)
    if np.any(x_arr <= 0.0):
        raise DomainError("weak potential is defined for x > 0", operation="weak_potential")
    if r.c == 1.0:
        h = units.h2m / (r.L * r.L)
        y = x_arr / abs(r.L)
        eta = weak_eta(y)
        y23 = y ** (2.0 / 3.0)
        values = 4.0 * h / y23 / (y23 + 1.0 / eta + 2.0 * np.sqrt(eta - eta**4)) ** 2
    else:
        values = np.vectorize(lambda v: invert_weak_turning(r, v, units=units), otypes=[float])(x_arr)
    return float(values) if values.ndim == 0 else values


def weak_finite_inversion(x0: float, V_x0: float, L: float, W: float, *, units: UnitSystem = NATURAL) -> float:
    """Turning point x(W) for a delay matched exactly from a finite launch point x0."""
    _check_repulsive(L, "weak_finite_inversion")
    if not (x0 > 0.0 and 0.0 < V_x0 < W):
        raise DomainError(f"needs x0 > 0 and 0 < V(x0) < W, got x0={x0}, V(x0)={V_x0}, W={W}", operation="weak_finite_inversion")
    gamma = 2.0 * units.mass * L * L / units.hbar**2
    first = x0 / math.pi * math.acos(1.0 - 2.0 * V_x0 / W)
    inner = math.sqrt((1.0 + gamma * W) / (1.0 + gamma * V_x0) * V_x0 / W)
    second = 2.0 * abs(L) / math.pi / math.sqrt(1.0 + gamma * W) * math.acos(min(inner, 1.0))
    return first - second


def weak_delay_formula(r: WeakRealization, x0: float, E: float, *, units: UnitSystem = NATURAL) -> float:
    """Classical delay of the weak potential from a finite launch point x0."""
    v0 = weak_potential(r, x0, units=units)
    if not E > v0:
        raise DomainError(f"energy {E} not above V(x0) = {v0}", operation="weak_delay_formula")
    h = units.h2m / (r.L * r.L)
    root_e = math.sqrt(E)
    # c (sqrt(1 - V0/E) - 1) / sqrt(V0 E), rearranged for small V0
    barrier = -r.c * math.sqrt(v0) / (E * root_e * (1.0 + math.sqrt(1.0 - v0 / E)))
    wall = (1.0 / root_e - math.sqrt(E - v0) / (h + E)) / math.sqrt(h + v0)
    return units.hbar * (barrier + wall)
