import math

import numpy as np
import pytest

from walls.core import boundary_residual, sample_field
from walls.errors import DomainError, FitFailure, GridMismatch, NoBoundState, NotNormalized
from walls.models import ComplexField, Grid, UnitSystem, WallParameter, WavePacket
from walls.spectrum import (
    bound_state,
    eigenfunction,
    energy_expectation,
    evolve_packet,
    measure_time_delay,
    packet_amplitude,
    phase_shift,
    time_delay,
    track_peaks,
)

PACKET_GRID = Grid(x_min=0.0, x_max=60.0, n=3001)


def packet(L: float, sigma: float = 0.1, k0: float = 2.0, x0: float = 30.0) -> WavePacket:
    return WavePacket(k0=k0, sigma=sigma, x0=x0, wall=WallParameter.finite(L))


# ---------------------------------------------------------------------------
# Phase shift and time delay
# ---------------------------------------------------------------------------


def test_phase_shift_examples():
    """Dirichlet reflects with pi, Neumann with 0, L = 1 at k = 1 with pi/2."""
    assert phase_shift(1.0, WallParameter.finite(0.0)) == math.pi
    assert phase_shift(1.0, WallParameter.infinite()) == 0.0
    assert phase_shift(1.0, WallParameter.finite(1.0)) == pytest.approx(math.pi / 2, abs=1e-15)


@pytest.mark.parametrize("k", [0.0, -1.0, math.nan])
def test_phase_shift_rejects_nonpositive_k(k):
    with pytest.raises(DomainError):
        phase_shift(k, WallParameter.finite(1.0))


def test_phase_shift_range_and_limits():
    """delta tends to 0 for kL -> +inf and to 2 pi from below for kL -> -inf."""
    assert phase_shift(1e8, WallParameter.finite(1.0)) < 1e-7
    high = phase_shift(1e8, WallParameter.finite(-1.0))
    assert 2 * math.pi - 1e-7 < high < 2 * math.pi
    assert phase_shift(1e300, WallParameter.finite(-1e10)) < 2 * math.pi


def test_phase_shift_monotone_in_L():
    """Decreasing in L on each sign branch."""
    for Ls in ([-10.0, -3.0, -1.0, -0.2, -0.01], [0.01, 0.2, 1.0, 3.0, 10.0]):
        deltas = [phase_shift(1.3, WallParameter.finite(L)) for L in Ls]
        assert all(a > b for a, b in zip(deltas, deltas[1:]))


def test_scattering_state_satisfies_wall():
    grid = Grid(x_min=0.0, x_max=10.0, n=10001)
    for L in (-2.0, -0.5, 0.0, 0.7):
        wall = WallParameter.finite(L)
        assert boundary_residual(eigenfunction(1.4, wall, grid), wall) <= 1e-6
    assert boundary_residual(eigenfunction(1.4, WallParameter.infinite(), grid), WallParameter.infinite()) <= 1e-6


def test_time_delay_examples():
    assert time_delay(3.0, WallParameter.finite(0.0)) == 0.0
    assert time_delay(1.0, WallParameter.finite(-1.0)) == pytest.approx(1.0)
    assert time_delay(2.0, WallParameter.finite(-0.5)) == pytest.approx(0.25)
    assert time_delay(2.0, WallParameter.infinite()) == 0.0
    assert time_delay(2.0, WallParameter.finite(0.5)) == pytest.approx(-0.25)


@pytest.mark.parametrize("units", [UnitSystem(), UnitSystem(hbar=0.5, mass=2.0)])
@pytest.mark.parametrize("L", [-2.0, -0.5, 0.5, 2.0])
@pytest.mark.parametrize("k", [0.5, 1.0, 2.0, 4.0])
def test_time_delay_is_group_delay(units, L, k):
    """tau = (m / hbar k) d delta / dk by central differences."""
    wall = WallParameter.finite(L)
    h = 1e-5 * k
    slope = (phase_shift(k + h, wall) - phase_shift(k - h, wall)) / (2 * h)
    expected = units.mass / (units.hbar * k) * slope
    assert abs(time_delay(k, wall, units=units) - expected) <= 1e-6 * abs(expected)


# ---------------------------------------------------------------------------
# Bound state and energy functional
# ---------------------------------------------------------------------------


def test_bound_state_L1():
    state = bound_state(WallParameter.finite(1.0), Grid(x_min=0.0, x_max=20.0, n=2001))
    assert state.energy == -0.5
    assert state.field.values[0] == pytest.approx(math.sqrt(2.0))


def test_bound_state_L2_normalized():
    state = bound_state(WallParameter.finite(2.0), Grid(x_min=0.0, x_max=40.0, n=40001))
    assert state.energy == -0.125
    assert state.field.norm() == pytest.approx(1.0, abs=1e-8)


def test_bound_state_energy_scales_with_units():
    units = UnitSystem(hbar=2.0, mass=0.5)
    state = bound_state(WallParameter.finite(1.0), Grid(x_min=0.0, x_max=20.0, n=201), units=units)
    assert state.energy == pytest.approx(-4.0)


@pytest.mark.parametrize("wall", [WallParameter.finite(-1.0), WallParameter.finite(0.0), WallParameter.infinite()])
def test_no_bound_state(wall):
    with pytest.raises(NoBoundState):
        bound_state(wall, Grid(x_min=0.0, x_max=20.0, n=201))


def test_bound_state_needs_long_grid():
    with pytest.raises(GridMismatch):
        bound_state(WallParameter.finite(1.0), Grid(x_min=0.0, x_max=5.0, n=201))


def test_energy_of_bound_state():
    """The lower bound -1/(2 L^2) is attained by the bound state."""
    state = bound_state(WallParameter.finite(1.0), Grid(x_min=0.0, x_max=25.0, n=250001))
    energy = energy_expectation(state.field, WallParameter.finite(1.0))
    assert energy.direct == pytest.approx(-0.5, abs=1e-8)
    assert energy.via_identity == pytest.approx(-0.5, abs=1e-8)


def _bump(center: float = 5.0, width: float = 1.0, phase: float = 0.0) -> ComplexField:
    grid = Grid(x_min=0.0, x_max=15.0, n=15001)
    raw = sample_field(grid, lambda x: np.exp(-((x - center) ** 2) / (2 * width**2) + 1j * phase * x))
    return ComplexField(grid=grid, values=raw.values / raw.norm())


def test_energy_forms_agree_for_bump():
    field = _bump()
    energy = energy_expectation(field, WallParameter.finite(1.0))
    assert energy.direct == pytest.approx(energy.via_identity, abs=1e-7)


@pytest.mark.parametrize("field", [_bump(), _bump(center=2.0, width=0.5, phase=1.5), _bump(center=1.0, width=0.8)])
def test_energy_bounded_below(field):
    """Every admissible field has energy at least -1/(2 L^2)."""
    energy = energy_expectation(field, WallParameter.finite(2.0))
    assert energy.via_identity >= -0.125
    assert energy.direct == pytest.approx(energy.via_identity, abs=1e-7)


def test_energy_rejects_unnormalized():
    field = _bump()
    with pytest.raises(NotNormalized):
        energy_expectation(ComplexField(grid=field.grid, values=2.0 * field.values), WallParameter.finite(1.0))


def test_energy_rejects_undecayed_field():
    grid = Grid(x_min=0.0, x_max=3.0, n=3001)
    raw = sample_field(grid, lambda x: np.exp(-x))
    field = ComplexField(grid=grid, values=raw.values / raw.norm())
    with pytest.raises(GridMismatch):
        energy_expectation(field, WallParameter.finite(1.0))


def test_energy_needs_nonstandard_wall():
    with pytest.raises(DomainError):
        energy_expectation(_bump(), WallParameter.finite(0.0))


# ---------------------------------------------------------------------------
# Wave packets
# ---------------------------------------------------------------------------


def test_packet_starts_at_x0():
    field = evolve_packet(packet(0.0), 0.0, PACKET_GRID)
    x = PACKET_GRID.points()
    assert abs(x[np.argmax(field.modulus())] - 30.0) <= 0.5


def test_packet_norm_conserved():
    wave = WavePacket(k0=2.0, sigma=0.25, x0=30.0, wall=WallParameter.finite(-1.0))
    grid = Grid(x_min=0.0, x_max=80.0, n=8001)
    start = evolve_packet(wave, 0.0, grid).norm()
    later = evolve_packet(wave, 5.0, grid).norm()
    assert later / start == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("x_max", [60.0, 80.0])
def test_packet_with_reflected_term_off_grid(x_max):
    """At t = 0 the reflected term sits near -x0, far outside the grid."""
    wave = WavePacket(k0=2.0, sigma=0.25, x0=30.0, wall=WallParameter.finite(-1.0))
    field = evolve_packet(wave, 0.0, Grid(x_min=0.0, x_max=x_max, n=int(100 * x_max) + 1))
    assert float(np.max(np.abs(field.values))) == pytest.approx(packet_amplitude(wave, 0.0), rel=1e-4)


def test_packet_amplitude_decays_with_spreading():
    wave = packet(1.0)
    assert packet_amplitude(wave, 0.0) == wave.sigma
    assert packet_amplitude(wave, 10.0) < packet_amplitude(wave, 1.0) < wave.sigma


def test_packet_orthogonal_to_bound_state():
    """Only scattering states are populated."""
    grid = Grid(x_min=0.0, x_max=60.0, n=6001)
    wave = packet(1.0)
    field = evolve_packet(wave, 15.0, grid)
    bound = bound_state(WallParameter.finite(1.0), grid)
    assert abs(bound.field.overlap(field)) <= 1e-6 * field.norm()


def test_packet_rejects_broad_spectrum():
    with pytest.raises(DomainError):
        evolve_packet(packet(0.0, sigma=1.0), 0.0, PACKET_GRID)


def test_packet_deterministic_across_order():
    wave = packet(-0.5)
    times = [0.0, 4.0, 9.0]
    forward = [evolve_packet(wave, t, PACKET_GRID).values for t in times]
    backward = [evolve_packet(wave, t, PACKET_GRID).values for t in reversed(times)]
    for a, b in zip(forward, reversed(backward)):
        assert np.array_equal(a, b)


def test_track_peaks_dirichlet():
    times = [0, 1.5, 3, 4.5, 6, 7.5, 22.5, 24, 25.5, 27, 28.5, 30]
    incident, reflected = track_peaks(packet(0.0), times, PACKET_GRID)
    assert incident.slope == pytest.approx(-2.0, rel=0.02)
    assert reflected.slope == pytest.approx(2.0, rel=0.02)
    assert reflected.intercept == pytest.approx(-30.0, rel=0.02)


def test_track_peaks_shifted_intercept():
    """Reflected line is displaced by 2L / (1 + (k0 L)^2)."""
    times = [0, 1.5, 3, 4.5, 6, 7.5, 22.5, 24, 25.5, 27, 28.5, 30]
    _, reflected = track_peaks(packet(-0.5), times, PACKET_GRID)
    assert reflected.intercept == pytest.approx(-30.5, rel=0.02)


def test_tracked_peaks_agree_with_full_field_away_from_the_wall():
    """Once the other term has left the grid, the per-term peak is the peak of |psi|."""
    times = [0, 1.5, 3, 4.5, 6, 7.5, 22.5, 24, 25.5, 27, 28.5, 30]
    wave = packet(-0.5)
    incident, reflected = track_peaks(wave, times, PACKET_GRID)
    x = PACKET_GRID.points()
    for track, index in ((incident, 0), (incident, 1), (reflected, -2), (reflected, -1)):
        modulus = np.abs(evolve_packet(wave, track.times[index], PACKET_GRID).values)
        assert abs(x[int(np.argmax(modulus))] - track.peaks[index]) <= PACKET_GRID.spacing


def test_track_peaks_needs_both_sides():
    with pytest.raises(FitFailure):
        track_peaks(packet(0.0), [1.0, 2.0], PACKET_GRID)


@pytest.mark.parametrize("L, expected", [(-0.5, 0.25), (0.5, -0.25)])
def test_measured_delay_matches_formula(L, expected):
    measured = measure_time_delay(packet(L), PACKET_GRID)
    assert measured == pytest.approx(expected, rel=0.05)


def test_measured_delay_dirichlet_zero():
    assert abs(measure_time_delay(packet(0.0), PACKET_GRID)) <= 0.05


@pytest.mark.slow
def test_measured_delay_improves_with_narrow_spectrum():
    """Halving sigma shrinks the dispersion error."""
    wall = WallParameter.finite(-0.5)
    exact = time_delay(2.0, wall)
    broad = abs(measure_time_delay(packet(-0.5, sigma=0.1), PACKET_GRID) - exact)
    narrow = abs(measure_time_delay(packet(-0.5, sigma=0.05), PACKET_GRID) - exact)
    assert narrow < broad
