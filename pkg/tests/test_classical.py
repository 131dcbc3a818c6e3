import math

import numpy as np
import pytest

from walls.classical import (
    CounterpartPotential,
    HardWall,
    TabulatedPotential,
    WeakPotential,
    abel_invert,
    classical_time_delay,
    counterpart_potential,
    excursion_time,
    impossibility_bound,
    impossibility_witness,
    invert_weak_turning,
    profile_delay,
    quantum_tau_profile,
    sampled_profile,
    tau_tilde_profile,
    turning_point,
    weak_delay_formula,
    weak_eta,
    weak_finite_inversion,
    weak_potential,
    weak_turning,
)
from walls.errors import DomainError, InvalidC, NoTurningPoint
from walls.models import UnitSystem, WallParameter, WeakRealization
from walls.spectrum import time_delay

ATTRACTIVE = WallParameter.finite(1.0)
REPULSIVE = WallParameter.finite(-1.0)


def tabulated() -> TabulatedPotential:
    x = np.linspace(0.2, 3.0, 41)
    return TabulatedPotential(x.tolist(), (1.0 / x**2 - 1.0 / 9.0).tolist())


# ---------------------------------------------------------------------------
# Counterpart potential for L > 0
# ---------------------------------------------------------------------------


def test_counterpart_delay_example():
    """L = 1, E = 0.5 from x0 = 10 gives tau = -1."""
    assert classical_time_delay(CounterpartPotential(1.0), 0.5, 10.0) == pytest.approx(-1.0, abs=1e-6)


@pytest.mark.parametrize("E", [0.1, 0.5, 2.0, 10.0])
def test_counterpart_reproduces_quantum_delay(E):
    k = math.sqrt(2.0 * E)
    assert classical_time_delay(CounterpartPotential(1.0), E, 10.0) == pytest.approx(time_delay(k, ATTRACTIVE), rel=1e-6)


@pytest.mark.parametrize("x0", [1.5, 2.0, 10.0, 100.0, 1e3])
@pytest.mark.parametrize("E", [0.1, 0.5, 2.0])
def test_counterpart_delay_for_every_launch_point(E, x0):
    """The panel-doubling check must settle from near and far launch points alike."""
    k = math.sqrt(2.0 * E)
    delay = classical_time_delay(CounterpartPotential(1.0), E, x0)
    assert delay == pytest.approx(time_delay(k, ATTRACTIVE), rel=1e-6)


def test_counterpart_delay_independent_of_launch_point():
    V = CounterpartPotential(1.0)
    assert abs(classical_time_delay(V, 0.5, 2.0) - classical_time_delay(V, 0.5, 10.0)) <= 1e-9


def test_counterpart_with_units():
    units = UnitSystem(hbar=0.5, mass=2.0)
    V = CounterpartPotential(0.7, units=units)
    E = 1.3
    k = math.sqrt(2.0 * units.mass * E) / units.hbar
    delay = classical_time_delay(V, E, 5.0, units=units)
    assert delay == pytest.approx(time_delay(k, WallParameter.finite(0.7), units=units), rel=1e-6)


def test_counterpart_turning_point():
    assert turning_point(CounterpartPotential(1.0), 1.5) == pytest.approx(0.5)


def test_counterpart_potential_domain():
    assert counterpart_potential(1.0, 0.5) == pytest.approx(1.5)
    assert counterpart_potential(1.0, 2.0) == 0.0
    with pytest.raises(DomainError):
        counterpart_potential(1.0, 0.0)
    with pytest.raises(DomainError):
        counterpart_potential(-1.0, 0.5)


def test_excursion_time_matches_tau_tilde():
    """Time left of x = L equals 2L/v + tau."""
    V = CounterpartPotential(1.0)
    profile = tau_tilde_profile(ATTRACTIVE)
    for E in (0.2, 0.5, 3.0):
        assert excursion_time(V, E, 1.0) == pytest.approx(float(profile_delay(profile, E)), rel=1e-8)


def test_hard_wall_has_no_delay():
    assert classical_time_delay(HardWall(), 0.7, 3.0) == 0.0


def test_turning_point_needs_positive_energy():
    with pytest.raises(DomainError):
        turning_point(CounterpartPotential(1.0), 0.0)


# ---------------------------------------------------------------------------
# Abel inversion
# ---------------------------------------------------------------------------


def test_abel_inverts_tau_tilde():
    assert abel_invert(tau_tilde_profile(ATTRACTIVE), 1.0, 1.5) == pytest.approx(0.5, rel=1e-8)


@pytest.mark.parametrize("x", [0.1, 0.3, 0.5, 0.9])
def test_abel_recovers_counterpart_potential(x):
    W = counterpart_potential(1.0, x)
    recovered = abel_invert(tau_tilde_profile(ATTRACTIVE), 1.0, W)
    assert counterpart_potential(1.0, recovered) == pytest.approx(W, rel=1e-4)


def test_abel_recovers_tabulated_potential():
    """Forward delays of a table, splined in sqrt(E), invert back onto the table."""
    V = tabulated()
    roots = np.linspace(0.0, math.sqrt(20.0), 121)
    energies = roots**2
    delays = [0.0] + [excursion_time(V, E, 3.0) for E in energies[1:]]
    profile = sampled_profile(energies.tolist(), delays)
    for W in (0.5, 2.0, 8.0, 15.0):
        x = abel_invert(profile, 3.0, W)
        assert float(V(x)) == pytest.approx(W, rel=1e-3)


def test_tabulated_turning_point():
    V = tabulated()
    for E in (0.05, 1.0, 20.0):
        assert float(V(turning_point(V, E))) == pytest.approx(E, rel=1e-12)
    with pytest.raises(NoTurningPoint):
        turning_point(V, 30.0)


def test_tabulated_rejects_increasing_samples():
    with pytest.raises(DomainError):
        TabulatedPotential([0.0, 1.0, 2.0], [1.0, 2.0, 0.0])


# ---------------------------------------------------------------------------
# No classical counterpart for L < 0
# ---------------------------------------------------------------------------


def test_impossibility_bound_examples():
    assert impossibility_bound(-1.0, 1.5) == pytest.approx(-0.5, rel=1e-12)
    assert impossibility_bound(-1.0, 1e-12) == pytest.approx(-1.0, abs=1e-9)


@pytest.mark.parametrize("W", [0.01, 0.1, 1.0, 10.0])
def test_impossibility_witness_agrees(W):
    """Closed form and Abel quadrature land on the same negative turning point."""
    witness = impossibility_witness(-1.0, W)
    assert witness.closed_form < 0.0
    assert witness.discrepancy <= 1e-8


def test_quantum_tau_profile_positive_for_repulsive_wall():
    assert float(profile_delay(quantum_tau_profile(REPULSIVE), 0.5)) == pytest.approx(1.0)


def test_impossibility_needs_negative_L():
    with pytest.raises(DomainError):
        impossibility_bound(1.0, 1.5)
    with pytest.raises(DomainError):
        impossibility_bound(-1.0, 0.0)


# ---------------------------------------------------------------------------
# Weak realization
# ---------------------------------------------------------------------------


def test_weak_turning_examples():
    assert weak_turning(WeakRealization(L=-1.0, c=1.0), 1.5) == pytest.approx(0.0773, abs=1e-4)
    assert weak_turning(WeakRealization(L=-1.0, c=2.0), 0.5) == pytest.approx(1.2929, abs=1e-4)


def test_weak_eta_at_origin():
    assert float(weak_eta(0.0)) == pytest.approx(2.0 ** (-1.0 / 3.0), rel=1e-14)


@pytest.mark.parametrize("c", [1.0, 3.0])
@pytest.mark.parametrize("W", [0.1, 1.5, 10.0])
def test_weak_potential_inverts_turning_point(c, W):
    r = WeakRealization(L=-1.0, c=c)
    assert weak_potential(r, weak_turning(r, W)) == pytest.approx(W, rel=1e-9)


def test_weak_closed_form_matches_numeric_inverse():
    r = WeakRealization(L=-0.6, c=1.0)
    for x in (0.01, 0.2, 1.0, 40.0):
        assert weak_potential(r, x) == pytest.approx(invert_weak_turning(r, x), rel=1e-9)


def test_weak_potential_positive_and_decreasing():
    values = weak_potential(WeakRealization(L=-1.0, c=1.0), np.geomspace(1e-3, 1e3, 50))
    assert np.all(values > 0.0)
    assert np.all(np.diff(values) < 0.0)


def test_weak_rejects_small_c():
    with pytest.raises(InvalidC):
        weak_turning(WeakRealization(L=-1.0, c=0.5), 1.0)


def test_finite_inversion_tends_to_weak_turning():
    """Matching from ever farther launch points approaches the x0 -> infinity realization."""
    r = WeakRealization(L=-1.0, c=1.0)
    target = weak_turning(r, 1.5)
    # the finite matching only reaches the c = 1 tail when x0 sqrt(V(x0)) -> pi / (2 sqrt 2)
    tail = math.pi / (2.0 * math.sqrt(2.0))
    errors = [abs(weak_finite_inversion(x0, (tail / x0) ** 2, -1.0, 1.5) - target) for x0 in (1e2, 1e3, 1e4)]
    assert errors[0] > errors[1] > errors[2]
    assert errors[2] <= 1e-4


def test_weak_potential_tail_differs_from_finite_matching():
    """x sqrt(V) tends to c / sqrt 2 for the inverted turning point."""
    r = WeakRealization(L=-1.0, c=1.0)
    assert 1e4 * math.sqrt(weak_potential(r, 1e4)) == pytest.approx(1.0 / math.sqrt(2.0), rel=1e-3)


def test_finite_inversion_domain():
    with pytest.raises(DomainError):
        weak_finite_inversion(10.0, 2.0, -1.0, 1.5)


@pytest.mark.parametrize("c", [1.0, 3.0])
@pytest.mark.parametrize("x0", [10.0, 1e3])
def test_weak_delay_formula_matches_quadrature(c, x0):
    r = WeakRealization(L=-1.0, c=c)
    numeric = classical_time_delay(WeakPotential(r), 0.5, x0)
    assert numeric == pytest.approx(weak_delay_formula(r, x0, 0.5), abs=2e-6)


@pytest.mark.parametrize("c", [1.0, 3.0])
def test_weak_delay_reaches_quantum_delay(c):
    """tau -> 1 for L = -1 at E = 0.5 once the launch point is far out."""
    assert weak_delay_formula(WeakRealization(L=-1.0, c=c), 1e4, 0.5) == pytest.approx(1.0, rel=0.01)


def test_weak_delay_needs_energy_above_launch_potential():
    with pytest.raises(DomainError):
        weak_delay_formula(WeakRealization(L=-1.0, c=1.0), 0.01, 0.5)
