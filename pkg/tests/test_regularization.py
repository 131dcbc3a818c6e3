import math

import numpy as np
import pytest

from walls.errors import DegenerateD, DomainError, InvalidScheme, MalformedInput
from walls.models import SchemeFamily, StepPotential, WallParameter
from walls.regularization import (
    amplitude_log_derivative,
    convergence_sweep,
    default_d_list,
    exterior_amplitudes,
    leading_v2,
    make_scheme,
    match,
    ode_log_derivative,
    reflection_phase,
    scheme_potential,
    untuned_potential,
)
from walls.spectrum import phase_shift

ENERGIES = [0.5, 1.0, 2.0]


def wall(L: float) -> WallParameter:
    return WallParameter.finite(L)


# ---------------------------------------------------------------------------
# Scheme potentials
# ---------------------------------------------------------------------------


def test_s311_potential_values():
    """Direct substitution at c = 1, nu = -1/2."""
    p = scheme_potential(make_scheme("s311", wall(1.0), nu=-0.5), 1e-4)
    assert p.v1 == pytest.approx(4900.0, rel=1e-12)
    assert p.v2 == pytest.approx(-5e5, rel=1e-12)


def test_s311_negative_L_potential():
    p = scheme_potential(make_scheme("s311", wall(-1.0), nu=-0.5), 1.0)
    assert p.v1 == pytest.approx(1.5)


def test_s512_potential_depth():
    p = scheme_potential(make_scheme("s512"), 1e-3)
    assert p.v2 == pytest.approx(-0.5 * (math.pi / 2) ** 2 * 1e6, rel=1e-12)


def test_scheme_defaults():
    assert make_scheme("s311", wall(1.0)).nu == -0.25
    assert make_scheme("s312", wall(1.0)).beta0 == math.pi
    assert make_scheme("s316", wall(1.0)).beta0 == math.pi / 4
    s318 = make_scheme("s318", wall(1.0))
    assert (s318.nu, s318.beta0, s318.c1) == (-3.0, math.pi / 2, 1.0)
    assert make_scheme("s512").L_target.is_dirichlet
    assert make_scheme("s513").L_target.is_neumann


@pytest.mark.parametrize("family, kwargs", [
    ("s311", {"nu": 0.5}),
    ("s311", {"nu": -1.5}),
    ("s312", {"beta0": 1.0}),
    ("s312", {"nu": -0.6}),
    ("s316", {"beta0": 2.0}),
    ("s318", {"nu": -1.0}),
    ("s318", {"beta0": 1.0}),
    ("s311", {"c": -1.0}),
    ("s999", {}),
])
def test_invalid_schemes(family, kwargs):
    with pytest.raises(InvalidScheme):
        make_scheme(family, wall(1.0), **kwargs)


def test_scheme_target_must_fit_family():
    with pytest.raises(InvalidScheme):
        make_scheme("s311", wall(0.0))
    with pytest.raises(InvalidScheme):
        make_scheme("s512", wall(1.0))
    with pytest.raises(InvalidScheme):
        make_scheme("s316", WallParameter.infinite())


def test_degenerate_d():
    """At d = 1 the subleading term of s311 flips V1 negative."""
    with pytest.raises(DegenerateD):
        scheme_potential(make_scheme("s311", wall(1.0)), 1.0)


def test_leading_v2_exponents():
    assert leading_v2(make_scheme("s311", wall(1.0), nu=-0.5)) == (1.0, -1.5)
    assert leading_v2(make_scheme("s513")) == (1.0, -1.5)
    assert leading_v2(make_scheme("s512")) == ((math.pi / 2) ** 2, -2.0)
    assert leading_v2(make_scheme("s316", wall(2.0))) == ((math.pi / 4) ** 2, -2.0)


# ---------------------------------------------------------------------------
# Matching
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("v1, v2, d, E", [
    (50.0, -30.0, 0.3, 1.0),
    (50.0, -30.0, 0.3, 5.0),
    (50.0, -30.0, 0.3, -5.0),
    (1e4, -2e3, 0.01, 3.0),
    (7.0, -0.5, 2.0, 0.2),
])
def test_amplitude_route_matches_tangent(v1, v2, d, E):
    solution = match(StepPotential(v1=v1, v2=v2, d=d), E)
    via_amplitudes = amplitude_log_derivative(solution)
    assert abs(via_amplitudes.imag) <= 1e-10 * (abs(solution.R) + solution.ktilde)
    assert via_amplitudes.real == pytest.approx(solution.R, rel=1e-10, abs=1e-10 * solution.ktilde)
    assert 0.0 < solution.alpha < math.pi / 2
    assert solution.r_inv == pytest.approx(1.0 / solution.R, rel=1e-10)


def test_region_one_amplitude():
    solution = match(StepPotential(v1=50.0, v2=-30.0, d=0.3), 1.0)
    assert solution.log_N == pytest.approx(solution.kappa * 0.3)
    assert solution.A * np.exp(-1j * solution.beta) + solution.B * np.exp(1j * solution.beta) == pytest.approx(1.0)


def test_match_energy_window():
    p = StepPotential(v1=10.0, v2=-5.0, d=0.1)
    for E in (10.0, 11.0, -5.0, -6.0):
        with pytest.raises(DomainError):
            match(p, E)


def test_s311_reaches_target():
    """R(d) near -1/L at small d."""
    p = scheme_potential(make_scheme("s311", wall(1.0)), 1e-12)
    assert match(p, 1.0).R == pytest.approx(-1.0, rel=0.02)


def test_untuned_potential_gives_dirichlet():
    p = untuned_potential(1e-8)
    assert abs(match(p, 1.0).R) > 1e3
    for E in ENERGIES:
        assert abs(match(p, E).r_inv) <= 1e-3
        assert reflection_phase(p, E) == pytest.approx(math.pi, rel=0.01)


def test_reflection_phase_reaches_wall_phase():
    p = scheme_potential(make_scheme("s311", wall(1.0)), 1e-12)
    assert reflection_phase(p, 0.5) == pytest.approx(phase_shift(1.0, wall(1.0)), rel=0.01)


def test_exterior_amplitudes_consistent_with_R():
    solution = match(StepPotential(v1=50.0, v2=-30.0, d=0.3), 2.0)
    amplitudes = exterior_amplitudes(solution)
    k = amplitudes.k
    R = 1j * k * (amplitudes.C - amplitudes.D) / (amplitudes.C + amplitudes.D)
    assert R.real == pytest.approx(solution.R, rel=1e-10)
    assert abs(R.imag) <= 1e-10 * abs(solution.R)
    assert abs(abs(amplitudes.C) - abs(amplitudes.D)) <= 1e-12 * abs(amplitudes.D)


def test_reflection_phase_needs_positive_energy():
    with pytest.raises(DomainError):
        reflection_phase(StepPotential(v1=50.0, v2=-30.0, d=0.3), -1.0)


@pytest.mark.slow
def test_matching_agrees_with_ode_oracle():
    """Analytic R against direct integration on random admissible potentials."""
    rng = np.random.default_rng(20240611)
    for _ in range(50):
        v1 = 10.0 ** rng.uniform(0.0, 6.0)
        v2 = -(10.0 ** rng.uniform(0.0, 6.0))
        E = rng.uniform(0.05, 0.9) * v1
        ktilde = math.sqrt(2.0 * (E - v2))
        d = rng.uniform(0.1, 3.0) * math.pi / ktilde
        p = StepPotential(v1=v1, v2=v2, d=d)
        analytic = match(p, E)
        oracle = ode_log_derivative(p, E)
        assert abs(oracle - analytic.R) <= 1e-8 * abs(analytic.R)


# ---------------------------------------------------------------------------
# Convergence sweeps
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("family", [SchemeFamily.S311, SchemeFamily.S312, SchemeFamily.S316, SchemeFamily.S318])
@pytest.mark.parametrize("L", [1.0, -1.0, 2.0])
def test_schemes_converge_to_target(family, L):
    """R(d) -> -1/L independently of the energy."""
    scheme = make_scheme(family, wall(L))
    report = convergence_sweep(scheme, ENERGIES, default_d_list(scheme))
    final_err = report.final_errors()
    final_R = report.final_R()
    assert report.monitored == "|R + 1/L|"
    assert not report.non_convergent
    assert max(final_err.values()) <= 1e-2
    assert max(final_R.values()) - min(final_R.values()) <= 2 * max(final_err.values())
    assert all(order > 0 for order in report.orders.values())


def test_two_schemes_one_target():
    """s311 and s312 agree on L = 2."""
    for family in ("s311", "s312"):
        scheme = make_scheme(family, wall(2.0))
        report = convergence_sweep(scheme, [1.0], default_d_list(scheme))
        assert report.final_R()[1.0] == pytest.approx(-0.5, abs=1e-2)


def test_dirichlet_scheme_monitors_reciprocal():
    scheme = make_scheme("s512")
    report = convergence_sweep(scheme, ENERGIES, default_d_list(scheme))
    assert report.monitored == "|1/R|"
    assert not report.non_convergent
    assert max(report.final_errors().values()) <= 1e-3


def test_neumann_scheme_stalls():
    """The d^-3/2 well leaves R at -c^2/3 instead of 0; the sweep says so."""
    scheme = make_scheme("s513")
    report = convergence_sweep(scheme, ENERGIES, default_d_list(scheme))
    assert report.monitored == "|R|"
    assert report.non_convergent
    assert report.stalled_energies == ENERGIES
    for R in report.final_R().values():
        assert R == pytest.approx(-1.0 / 3.0, abs=1e-2)


def test_sweep_rejects_increasing_d():
    with pytest.raises(MalformedInput):
        convergence_sweep(make_scheme("s316", wall(1.0)), [1.0], [1e-3, 1e-2])
