"""Three-region step potentials and the schemes that realize each wall as d -> 0.

A step potential V1 (x < -d), V2 (-d < x < 0), 0 (x > 0) is matched at
x = -d and x = 0. The boundary log-derivative R = phi'/phi(0) converges
to -1/L when V1(d), V2(d) satisfy the fine-tuning condition beta0 = alpha0
(mod pi); untuned families end at the Dirichlet wall.
"""

import logging
import math

import numpy as np
from scipy.integrate import solve_ivp

from .errors import DegenerateD, DomainError, InvalidScheme, MalformedInput, PoleAtMatching
from .models import (
    NATURAL,
    ExteriorAmplitudes,
    MatchingSolution,
    RegularizationScheme,
    SchemeFamily,
    StepPotential,
    SweepReport,
    SweepRow,
    UnitSystem,
    WallParameter,
)

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi
_BELOW_TWO_PI = math.nextafter(TWO_PI, 0.0)
POLE_WINDOW = 1e-12
STALLED_ORDER = 0.05
ODE_TOLERANCE = 1e-12

# Family defaults inside each validity window.
DEFAULTS = {
    SchemeFamily.S311: {"c": 1.0, "nu": -0.25},
    SchemeFamily.S312: {"c": 1.0, "nu": -0.4, "beta0": math.pi},
    SchemeFamily.S316: {"beta0": math.pi / 4},
    SchemeFamily.S318: {"nu": -3.0, "beta0": math.pi / 2, "c1": 1.0},
    SchemeFamily.S512: {"c": 1.0},
    SchemeFamily.S513: {"c": 1.0},
}

# Sweep ranges as decades (first, last) of d; the smallest d stays above roundoff.
DEFAULT_DECADES = {
    SchemeFamily.S311: (4, 16),
    SchemeFamily.S312: (2, 10),
    SchemeFamily.S316: (2, 7),
    SchemeFamily.S318: (2, 7),
    SchemeFamily.S512: (2, 8),
    SchemeFamily.S513: (2, 8),
}


# 1. Matching

def _pole_distance(theta: float) -> float:
    """Distance of theta from pi/2 modulo pi."""
    return abs(math.remainder(theta - 0.5 * math.pi, math.pi))


def match(p: StepPotential, E: float, *, units: UnitSystem = NATURAL) -> MatchingSolution:
    """kappa, ktilde, alpha, beta and R = ktilde tan(alpha - beta); amplitudes scaled so phi(-d) = 1."""
    if not p.v2 < E < p.v1:
        raise DomainError(f"energy {E} outside ({p.v2}, {p.v1})", operation="match")
    kappa = math.sqrt((p.v1 - E) / units.h2m)
    ktilde = math.sqrt((E - p.v2) / units.h2m)
    alpha = math.atan2(kappa, ktilde)
    beta = ktilde * p.d
    theta = alpha - beta

    distance = _pole_distance(theta)
    if distance == 0.0:
        raise PoleAtMatching(f"alpha - beta = {theta!r} sits on a pole of R", operation="match")
    r_inv = math.cos(theta) / (ktilde * math.sin(theta))
    if distance < POLE_WINDOW:
        R = math.copysign(math.inf, r_inv)
    else:
        R = ktilde * math.tan(theta)

    ratio = kappa / ktilde
    A = 0.5 * (1.0 - 1j * ratio) * complex(math.cos(beta), math.sin(beta))
    B = 0.5 * (1.0 + 1j * ratio) * complex(math.cos(beta), -math.sin(beta))
    return MatchingSolution(
        E=E, kappa=kappa, ktilde=ktilde, alpha=alpha, beta=beta, R=R, r_inv=r_inv, A=A, B=B
    )


def amplitude_log_derivative(solution: MatchingSolution) -> complex:
    """R from the region-II amplitudes, i ktilde (A - B) / (A + B)."""
    return 1j * solution.ktilde * (solution.A - solution.B) / (solution.A + solution.B)


def exterior_amplitudes(solution: MatchingSolution, *, units: UnitSystem = NATURAL) -> ExteriorAmplitudes:
    if solution.E <= 0.0:
        raise DomainError("no scattering phase below zero energy", operation="reflection_phase")
    k = math.sqrt(solution.E / units.h2m)
    # phi(0) and phi'(0) stay finite at matching poles, unlike R
    phi0 = solution.A + solution.B
    slope0 = 1j * solution.ktilde * (solution.A - solution.B)
    C = 0.5 * (phi0 + slope0 / (1j * k))
    D = 0.5 * (phi0 - slope0 / (1j * k))
    ratio = C / D
    phase = math.atan2(ratio.imag, ratio.real) % TWO_PI
    return ExteriorAmplitudes(k=k, C=C, D=D, phase=min(phase, _BELOW_TWO_PI))


def reflection_phase(p: StepPotential, E: float, *, units: UnitSystem = NATURAL) -> float:
    """arg(C/D) in [0, 2pi), the finite-d counterpart of the phase shift."""
    if E <= 0.0:
        raise DomainError(f"reflection phase needs E > 0, got {E}", operation="reflection_phase")
    return exterior_amplitudes(match(p, E, units=units), units=units).phase


def ode_log_derivative(p: StepPotential, E: float, *, units: UnitSystem = NATURAL) -> float:
    """phi'/phi at 0 by integrating the stationary equation from deep in region I."""
    if not p.v2 < E < p.v1:
        raise DomainError(f"energy {E} outside ({p.v2}, {p.v1})", operation="ode_log_derivative")
    kappa = math.sqrt((p.v1 - E) / units.h2m)
    start = -p.d - 10.0 / kappa
    state = np.array([1.0, kappa])
    for lo, hi, V in ((start, -p.d, p.v1), (-p.d, 0.0, p.v2)):
        rate = (V - E) / units.h2m

        def rhs(_x, y, rate=rate):
            return [y[1], rate * y[0]]

        result = solve_ivp(rhs, (lo, hi), state, method="RK45", rtol=ODE_TOLERANCE, atol=ODE_TOLERANCE * abs(state).max())
        state = result.y[:, -1]
    return float(state[1] / state[0])


# 2. Schemes

def _require(condition: bool, message: str) -> None:
    if not condition:
        raise InvalidScheme(message, operation="scheme_potential")


def _is_multiple(value: float, unit: float, offset: float = 0.0) -> bool:
    ratio = (value - offset) / unit
    return abs(ratio - round(ratio)) < 1e-9


def validate_scheme(scheme: RegularizationScheme) -> RegularizationScheme:
    family, wall = scheme.family, scheme.L_target
    if family is SchemeFamily.S512:
        _require(wall.is_dirichlet, f"s512 targets the Dirichlet wall, got L={wall}")
        return scheme
    if family is SchemeFamily.S513:
        _require(wall.is_neumann, f"s513 targets the Neumann wall, got L={wall}")
        return scheme
    _require(wall.is_nonstandard_finite, f"{family.value} needs a finite nonzero L, got {wall}")
    _require(scheme.beta0 is not None or family is SchemeFamily.S311, f"{family.value} needs beta0")
    _require(scheme.nu is not None or family is SchemeFamily.S316, f"{family.value} needs nu")
    if family is SchemeFamily.S311:
        _require(-1.0 < scheme.nu < 0.0, f"s311 needs -1 < nu < 0, got {scheme.nu}")
    elif family is SchemeFamily.S312:
        _require(-0.5 < scheme.nu < 0.0, f"s312 needs -1/2 < nu < 0, got {scheme.nu}")
        _require(
            scheme.beta0 > 0.0 and _is_multiple(scheme.beta0, math.pi),
            f"s312 needs beta0 a positive multiple of pi, got {scheme.beta0}",
        )
    elif family is SchemeFamily.S316:
        _require(0.0 < scheme.beta0 < 0.5 * math.pi, f"s316 needs 0 < beta0 < pi/2, got {scheme.beta0}")
    elif family is SchemeFamily.S318:
        _require(scheme.nu < -2.0, f"s318 needs nu < -2, got {scheme.nu}")
        _require(
            scheme.beta0 > 0.0 and _is_multiple(scheme.beta0, math.pi, 0.5 * math.pi),
            f"s318 needs beta0 = pi/2 mod pi, got {scheme.beta0}",
        )
    return scheme


def make_scheme(
    family: SchemeFamily | str,
    L_target: WallParameter | None = None,
    *,
    c: float | None = None,
    nu: float | None = None,
    beta0: float | None = None,
    c1: float | None = None,
) -> RegularizationScheme:
    """Scheme with family defaults filled in, validated."""
    try:
        family = SchemeFamily(family)
    except ValueError as e:
        raise InvalidScheme(f"unknown scheme {family!r}", operation="make_scheme") from e
    if L_target is None:
        if family is SchemeFamily.S512:
            L_target = WallParameter.finite(0.0)
        elif family is SchemeFamily.S513:
            L_target = WallParameter.infinite()
        else:
            raise InvalidScheme(f"{family.value} needs a target L", operation="make_scheme")
    given = {"c": c, "nu": nu, "beta0": beta0, "c1": c1}
    values = {**DEFAULTS[family], **{k: v for k, v in given.items() if v is not None}}
    for key in ("c", "c1"):
        if key in values and not values[key] > 0.0:
            raise InvalidScheme(f"{key} must be positive, got {values[key]}", operation="make_scheme")
    return validate_scheme(RegularizationScheme(family=family, L_target=L_target, **values))


def scheme_potential(scheme: RegularizationScheme, d: float, *, units: UnitSystem = NATURAL) -> StepPotential:
    """V1(d), V2(d) of the family."""
    validate_scheme(scheme)
    if not (math.isfinite(d) and d > 0.0):
        raise DomainError(f"d must be positive, got {d}", operation="scheme_potential")
    h2m = units.h2m
    family = scheme.family
    L = scheme.L_target.L
    c, nu, beta0 = scheme.c, scheme.nu, scheme.beta0

    if family is SchemeFamily.S311:
        v1 = h2m * (c * c * d ** (2 * nu) - (2 * c / L) * d**nu)
        v2 = -h2m * c * d ** (nu - 1)
    elif family is SchemeFamily.S312:
        v1 = h2m * (c * c * d ** (2 * nu) - (2 * c / L) * d**nu)
        v2 = -h2m * (beta0**2 / d**2 + 2 * c * d ** (nu - 1))
    elif family is SchemeFamily.S316:
        t = math.tan(beta0)
        v1 = h2m * ((beta0 * t) ** 2 / d**2 - (2 / L) * (beta0 * t / math.cos(beta0) ** 2) / d)
        v2 = -h2m * beta0**2 / d**2
    elif family is SchemeFamily.S318:
        v1 = h2m * scheme.c1**2 * d ** (2 * nu)
        v2 = -h2m * (beta0**2 / d**2 + (2 / L) / d)
    elif family is SchemeFamily.S512:
        v1 = h2m * c / d
        v2 = -h2m * (0.5 * math.pi) ** 2 / d**2
    else:
        v1 = h2m * c * c / d
        v2 = -h2m * c * d**-1.5

    if not (math.isfinite(v1) and math.isfinite(v2)) or v1 <= 0.0 or v2 >= 0.0:
        raise DegenerateD(f"{family.value} at d={d}: V1={v1}, V2={v2}", operation="scheme_potential")
    return StepPotential(v1=v1, v2=v2, d=d)


def leading_v2(scheme: RegularizationScheme) -> tuple[float, float]:
    """(C, p) with |V2(d)| ~ (hbar^2/2m) C d^p as d -> 0."""
    family = validate_scheme(scheme).family
    if family is SchemeFamily.S311:
        return scheme.c, scheme.nu - 1.0
    if family is SchemeFamily.S513:
        return scheme.c, -1.5
    if family is SchemeFamily.S512:
        return (0.5 * math.pi) ** 2, -2.0
    return scheme.beta0**2, -2.0


def untuned_potential(d: float) -> StepPotential:
    """V1 = 1/d, V2 = -1/d: no fine tuning, ends at the Dirichlet wall."""
    return StepPotential(v1=1.0 / d, v2=-1.0 / d, d=d)


def decades(first: int, last: int) -> list[float]:
    """d = 10^-first, ..., 10^-last."""
    step = 1 if last >= first else -1
    return [10.0 ** -n for n in range(first, last + step, step)]


def default_d_list(scheme: RegularizationScheme) -> list[float]:
    return decades(*DEFAULT_DECADES[scheme.family])


# 3. Convergence

def monitored_error(R: float, r_inv: float, wall: WallParameter) -> tuple[str, float]:
    if wall.is_dirichlet:
        return "|1/R|", abs(r_inv)
    if wall.is_neumann:
        return "|R|", abs(R)
    return "|R + 1/L|", abs(R + 1.0 / wall.L)


def convergence_sweep(
    scheme: RegularizationScheme,
    E_list: list[float],
    d_list: list[float],
    *,
    units: UnitSystem = NATURAL,
) -> SweepReport:
    """R(d) and its distance to the target for every (d, E), d-major."""
    if not E_list or len(d_list) < 2:
        raise MalformedInput("sweep needs energies and at least two d values", operation="convergence_sweep")
    if any(d <= 0.0 for d in d_list) or any(a <= b for a, b in zip(d_list, d_list[1:])):
        raise MalformedInput("d_list must be positive and strictly decreasing", operation="convergence_sweep")

    rows = []
    label = ""
    for d in d_list:
        p = scheme_potential(scheme, d, units=units)
        for E in E_list:
            solution = match(p, E, units=units)
            label, err = monitored_error(solution.R, solution.r_inv, scheme.L_target)
            rows.append(SweepRow(d=d, E=E, R=solution.R, r_inv=solution.r_inv, err=err))

    orders: dict[float, float] = {}
    stalled = []
    non_convergent = False
    for E in E_list:
        errs = np.array([row.err for row in rows if row.E == E])
        usable = np.isfinite(errs) & (errs > 0.0)
        if usable.sum() >= 2:
            order = float(np.polyfit(np.log(np.asarray(d_list)[usable]), np.log(errs[usable]), 1)[0])
        else:
            order = math.nan
        orders[E] = order
        if errs[-1] > errs[-2]:
            non_convergent = True
        tail = errs[-2:]
        if np.all(tail > 0.0) and np.all(np.isfinite(tail)):
            tail_order = math.log(tail[0] / tail[1]) / math.log(d_list[-2] / d_list[-1])
            if tail_order < STALLED_ORDER:
                stalled.append(E)
                non_convergent = True
    logger.info(
        "sweep %s L=%s: %d rows, orders %s%s", scheme.family.value, scheme.L_target, len(rows),
        {E: round(o, 3) for E, o in orders.items()}, " (non-convergent)" if non_convergent else "",
    )
    return SweepReport(
        scheme=scheme, monitored=label, rows=rows, orders=orders,
        non_convergent=non_convergent, stalled_energies=stalled,
    )
