"""Stationary states, the bound state, wave packets and the quantum time delay."""

import logging
import math

import numpy as np
from scipy.integrate import simpson

from .core import sample_field
from .errors import DomainError, FitFailure, GridMismatch, NoBoundState, NotNormalized, QuadratureFailure
from .models import (
    NATURAL,
    BoundState,
    Branch,
    ComplexField,
    EnergyExpectation,
    Grid,
    PeakTrack,
    ScatteringState,
    UnitSystem,
    WallParameter,
    WavePacket,
)
from .quadrature import panel_nodes, refine, uniform_edges

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi
_BELOW_TWO_PI = math.nextafter(TWO_PI, 0.0)

MIN_K0_OVER_SIGMA = 5.0
PACKET_SPAN = 8.0            # spectral half-width in units of sigma
PACKET_PANEL_PHASE = 8.0     # max phase change per Gauss panel, radians
PACKET_MIN_PANELS = 25       # 25 x 16 = 400 nodes
PACKET_TOLERANCE = 1e-6
FIT_TOLERANCE = 0.05
MIN_SIDE_SAMPLES = 5
_ROW_CHUNK = 1024


def _check_k(k: float, operation: str) -> None:
    if not (math.isfinite(k) and k > 0):
        raise DomainError(f"wavenumber must be positive, got {k}", operation=operation)


# 1. Scattering states

def phase_shift(k: float, wall: WallParameter) -> float:
    """delta_k = 2 arccot(kL) with arccot in (0, pi); pi for L = 0, 0 for L = inf."""
    _check_k(k, "phase_shift")
    if wall.is_neumann:
        return 0.0
    if wall.is_dirichlet:
        return math.pi
    delta = math.pi - 2.0 * math.atan(k * wall.L)
    return min(delta, _BELOW_TWO_PI)


def phase_shifts(k: np.ndarray, wall: WallParameter) -> np.ndarray:
    """Vectorized phase_shift for positive wavenumbers."""
    k = np.asarray(k, dtype=float)
    if wall.is_neumann:
        return np.zeros_like(k)
    if wall.is_dirichlet:
        return np.full_like(k, math.pi)
    return np.minimum(math.pi - 2.0 * np.arctan(k * wall.L), _BELOW_TWO_PI)


def scattering_state(k: float, wall: WallParameter) -> ScatteringState:
    return ScatteringState(k=k, wall=wall, delta=phase_shift(k, wall))


def eigenfunction(k: float, wall: WallParameter, grid: Grid) -> ComplexField:
    """exp(-ikx) + exp(i delta_k) exp(ikx), unnormalized."""
    shift = np.exp(1j * phase_shift(k, wall))
    return sample_field(grid, lambda x: np.exp(-1j * k * x) + shift * np.exp(1j * k * x))


def time_delay(k0: float, wall: WallParameter, *, units: UnitSystem = NATURAL) -> float:
    """Quantum time delay -2mL / (hbar k0 (1 + (k0 L)^2)); positive iff L < 0."""
    _check_k(k0, "time_delay")
    if not wall.is_nonstandard_finite:
        return 0.0
    kl = k0 * wall.L
    return -2.0 * units.mass * wall.L / (units.hbar * k0 * (1.0 + kl * kl))


# 2. Bound state and the energy functional

def bound_state(wall: WallParameter, grid: Grid, *, units: UnitSystem = NATURAL) -> BoundState:
    if wall.is_neumann or wall.L <= 0.0:
        raise NoBoundState(f"wall {wall} has no negative energy state, need L > 0", operation="bound_state")
    if not grid.starts_at_wall:
        raise GridMismatch(f"grid starts at {grid.x_min}, not at the wall", operation="bound_state")
    if grid.x_max < 10.0 * wall.L:
        raise GridMismatch(f"grid ends at {grid.x_max}, need at least 10 L = {10.0 * wall.L}", operation="bound_state")
    L = wall.L
    field = sample_field(grid, lambda x: math.sqrt(2.0 / L) * np.exp(-x / L))
    return BoundState(wall=wall, energy=-units.h2m / (L * L), field=field)


def energy_expectation(
    field: ComplexField, wall: WallParameter, *, units: UnitSystem = NATURAL
) -> EnergyExpectation:
    """<psi, H psi> evaluated two ways for the same quadratic form.

    direct       = h2m [ int |psi'|^2 - |psi(0)|^2 / L ]
    via_identity = h2m [ (1/L^2) int |psi + L psi'|^2 - N / L^2 ]

    The two agree for every field by integration by parts, and the second is
    manifestly bounded below by -h2m / L^2.
    """
    operation = "energy_expectation"
    if not wall.is_nonstandard_finite:
        raise DomainError(f"energy functional needs a finite nonzero L, got {wall}", operation=operation)
    grid = field.grid
    if not grid.starts_at_wall:
        raise GridMismatch(f"grid starts at {grid.x_min}, not at the wall", operation=operation)
    modulus = field.modulus()
    if modulus[-1] >= 1e-8 * np.max(modulus):
        raise GridMismatch("field has not decayed at the end of the grid", operation=operation)

    x = grid.points()
    psi = field.values
    norm_sq = float(simpson(np.abs(psi) ** 2, x=x))
    if abs(norm_sq - 1.0) > 1e-6:
        raise NotNormalized(f"squared norm is {norm_sq:.9f}", operation=operation)

    L = wall.L
    slope = np.gradient(psi, grid.spacing, edge_order=2)
    kinetic = float(simpson(np.abs(slope) ** 2, x=x))
    direct = units.h2m * (kinetic - abs(psi[0]) ** 2 / L)
    combined = float(simpson(np.abs(psi + L * slope) ** 2, x=x))
    via_identity = units.h2m * (combined - norm_sq) / (L * L)
    logger.debug("energy expectation direct=%.12g via=%.12g", direct, via_identity)
    return EnergyExpectation(direct=direct, via_identity=via_identity)


# 3. Wave packets

def _check_packet(packet: WavePacket, operation: str) -> None:
    if packet.k0 / packet.sigma < MIN_K0_OVER_SIGMA:
        raise DomainError(
            f"k0/sigma = {packet.k0 / packet.sigma:.3g} below {MIN_K0_OVER_SIGMA}", operation=operation
        )


def packet_release_time(packet: WavePacket, *, units: UnitSystem = NATURAL) -> float:
    """t_r = x0 / v0, when the incident peak reaches the wall."""
    return units.mass * packet.x0 / (units.hbar * packet.k0)


def _spectral_edges(packet: WavePacket, t: float, x_extent: float, units: UnitSystem) -> np.ndarray:
    k_lo = max(packet.k0 - PACKET_SPAN * packet.sigma, 1e-12 * packet.k0)
    k_hi = packet.k0 + PACKET_SPAN * packet.sigma
    delta_rate = 2.0 * abs(packet.wall.L) if packet.wall.is_nonstandard_finite else 0.0
    rate = packet.x0 + x_extent + units.hbar * k_hi * abs(t) / units.mass + delta_rate
    panels = max(PACKET_MIN_PANELS, math.ceil(rate * (k_hi - k_lo) / PACKET_PANEL_PHASE))
    return uniform_edges(k_lo, k_hi, panels)


def packet_amplitude(packet: WavePacket, t: float, *, units: UnitSystem = NATURAL) -> float:
    """Peak |psi| of the free Gaussian at time t; neither term can exceed it."""
    spread = units.hbar * packet.sigma**2 * t / units.mass
    return packet.sigma / (1.0 + spread * spread) ** 0.25


def _term_on_nodes(packet, t, x, branch, k, w, units) -> np.ndarray:
    profile = np.exp(-((k - packet.k0) ** 2) / (2.0 * packet.sigma**2))
    weight = w * profile * np.exp(1j * (k * packet.x0 - units.hbar * k * k * t / (2.0 * units.mass)))
    if branch is Branch.INCIDENT:
        sign = -1.0
    else:
        sign = 1.0
        weight = weight * np.exp(1j * phase_shifts(k, packet.wall))
    out = np.empty(x.size, dtype=complex)
    for start in range(0, x.size, _ROW_CHUNK):
        rows = x[start:start + _ROW_CHUNK]
        out[start:start + _ROW_CHUNK] = np.exp(sign * 1j * np.outer(rows, k)) @ weight
    return out / math.sqrt(TWO_PI)


def packet_term(
    packet: WavePacket, t: float, x: np.ndarray, branch: Branch, *, units: UnitSystem = NATURAL
) -> np.ndarray:
    """One of the two terms of psi(x, t): the incoming or the reflected packet."""
    x = np.asarray(x, dtype=float)
    edges = _spectral_edges(packet, t, float(np.max(np.abs(x))), units)
    coarse = _term_on_nodes(packet, t, x, branch, *panel_nodes(edges), units)
    fine = _term_on_nodes(packet, t, x, branch, *panel_nodes(refine(edges)), units)
    # a term whose peak is off the grid is measured against the packet, not against itself
    scale = packet_amplitude(packet, t, units=units)
    change = float(np.max(np.abs(fine - coarse)))
    if change > PACKET_TOLERANCE * scale:
        raise QuadratureFailure(
            f"k-integral changed by {change / scale:.2e} relative under node doubling at t={t}",
            operation="evolve_packet",
        )
    return fine


def evolve_packet(
    packet: WavePacket, t: float, grid: Grid, *, units: UnitSystem = NATURAL
) -> ComplexField:
    """psi(x, t) built from scattering states only; the bound state is never populated."""
    _check_packet(packet, "evolve_packet")
    if not grid.starts_at_wall:
        raise GridMismatch(f"grid starts at {grid.x_min}, not at the wall", operation="evolve_packet")
    x = grid.points()
    values = packet_term(packet, t, x, Branch.INCIDENT, units=units) + packet_term(
        packet, t, x, Branch.REFLECTED, units=units
    )
    return ComplexField(grid=grid, values=values)


# 4. Peak tracking and the measured delay

def _refined_peak(x: np.ndarray, modulus: np.ndarray, t: float, branch: Branch) -> float:
    i = int(np.argmax(modulus))
    if i == 0 or i == modulus.size - 1:
        raise FitFailure(f"{branch.value} peak at t={t} sits on the grid edge", operation="track_peaks")
    y0, y1, y2 = modulus[i - 1], modulus[i], modulus[i + 1]
    curvature = y0 - 2.0 * y1 + y2
    offset = 0.5 * (y0 - y2) / curvature if curvature != 0.0 else 0.0
    return float(x[i] + offset * (x[1] - x[0]))


def _fit_track(branch: Branch, times: list[float], peaks: list[float]) -> PeakTrack:
    slope, intercept = np.polyfit(times, peaks, 1)
    fitted = slope * np.asarray(times) + intercept
    rms = float(np.sqrt(np.mean((np.asarray(peaks) - fitted) ** 2)))
    residual = rms / max(abs(p) for p in peaks)
    if residual > FIT_TOLERANCE:
        raise FitFailure(f"{branch.value} fit residual {residual:.2%} exceeds 5%", operation="track_peaks")
    return PeakTrack(
        branch=branch, times=list(times), peaks=list(peaks),
        slope=float(slope), intercept=float(intercept), residual=residual,
    )


def track_peaks(
    packet: WavePacket, t_list: list[float], grid: Grid, *, units: UnitSystem = NATURAL
) -> tuple[PeakTrack, PeakTrack]:
    """Fit x_max(t) of the incident packet before t_r and of the reflected one after it."""
    _check_packet(packet, "track_peaks")
    t_r = packet_release_time(packet, units=units)
    before = sorted(t for t in t_list if t < t_r)
    after = sorted(t for t in t_list if t > t_r)
    if len(before) < MIN_SIDE_SAMPLES or len(after) < MIN_SIDE_SAMPLES:
        raise FitFailure(
            f"need {MIN_SIDE_SAMPLES} times on each side of t_r={t_r:.6g}, got {len(before)} and {len(after)}",
            operation="track_peaks",
        )
    x = grid.points()
    tracks = []
    for branch, times in ((Branch.INCIDENT, before), (Branch.REFLECTED, after)):
        peaks = [
            _refined_peak(x, np.abs(packet_term(packet, t, x, branch, units=units)), t, branch)
            for t in times
        ]
        tracks.append(_fit_track(branch, times, peaks))
    logger.info(
        "tracked packet k0=%g L=%s: slopes %.6g / %.6g", packet.k0, packet.wall,
        tracks[0].slope, tracks[1].slope,
    )
    return tracks[0], tracks[1]


def default_times(packet: WavePacket, *, units: UnitSystem = NATURAL) -> list[float]:
    """Six times on the way in and six on the way out, away from the wall."""
    t_r = packet_release_time(packet, units=units)
    incoming = np.linspace(0.0, 0.5 * t_r, 6)
    outgoing = np.linspace(1.5 * t_r, 2.0 * t_r, 6)
    return [float(t) for t in np.concatenate([incoming, outgoing])]


def measure_time_delay(
    packet: WavePacket,
    grid: Grid,
    t_list: list[float] | None = None,
    *,
    units: UnitSystem = NATURAL,
) -> float:
    """t2 - t1 from the wall-arrival instants of the two fitted lines."""
    times = default_times(packet, units=units) if t_list is None else t_list
    incident, reflected = track_peaks(packet, times, grid, units=units)
    return reflected.wall_arrival - incident.wall_arrival
