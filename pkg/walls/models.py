import math
from enum import Enum

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from scipy.integrate import simpson


# 1. Units and walls

class UnitSystem(BaseModel):
    """Scales for hbar and the particle mass. Natural units by default."""
    model_config = ConfigDict(frozen=True)

    hbar: float = Field(1.0, gt=0, description="Action scale.")
    mass: float = Field(1.0, gt=0, description="Particle mass.")

    @property
    def h2m(self) -> float:
        """hbar^2 / 2m, the kinetic prefactor."""
        return self.hbar**2 / (2.0 * self.mass)


NATURAL = UnitSystem()


class WallKind(str, Enum):
    FINITE = "finite"       # psi(0) + L psi'(0) = 0, L any real
    INFINITE = "infinite"   # psi'(0) = 0 (Neumann)


class WallParameter(BaseModel):
    """Extended-real L labelling the boundary condition psi(0) + L psi'(0) = 0."""
    model_config = ConfigDict(frozen=True)

    kind: WallKind
    L: float | None = Field(None, description="Wall length; None for the Neumann wall.")

    @field_validator("L")
    @classmethod
    def _normalize(cls, value: float | None) -> float | None:
        if value is None:
            return None
        if not math.isfinite(value):
            raise ValueError(f"finite wall needs a finite L, got {value}")
        return value + 0.0  # -0.0 -> 0.0

    @model_validator(mode="after")
    def _check_kind(self) -> "WallParameter":
        if (self.kind is WallKind.FINITE) != (self.L is not None):
            raise ValueError(f"kind={self.kind.value} inconsistent with L={self.L}")
        return self

    @classmethod
    def finite(cls, L: float) -> "WallParameter":
        return cls(kind=WallKind.FINITE, L=float(L))

    @classmethod
    def infinite(cls) -> "WallParameter":
        return cls(kind=WallKind.INFINITE)

    @property
    def is_dirichlet(self) -> bool:
        return self.kind is WallKind.FINITE and self.L == 0.0

    @property
    def is_neumann(self) -> bool:
        return self.kind is WallKind.INFINITE

    @property
    def is_nonstandard_finite(self) -> bool:
        return self.kind is WallKind.FINITE and self.L != 0.0

    def __str__(self) -> str:
        return "inf" if self.is_neumann else repr(self.L)


# 2. Sampled fields

class Grid(BaseModel):
    model_config = ConfigDict(frozen=True)

    x_min: float
    x_max: float
    n: int = Field(..., ge=2, description="Number of samples, endpoints included.")

    @model_validator(mode="after")
    def _check_order(self) -> "Grid":
        if not self.x_min < self.x_max:
            raise ValueError(f"x_min={self.x_min} must be below x_max={self.x_max}")
        return self

    @property
    def spacing(self) -> float:
        return (self.x_max - self.x_min) / (self.n - 1)

    @property
    def starts_at_wall(self) -> bool:
        return self.x_min == 0.0

    def points(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.n)


class ComplexField(BaseModel):
    """Complex samples psi(x_i) on a uniform grid."""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    grid: Grid
    values: np.ndarray

    @field_validator("values", mode="before")
    @classmethod
    def _as_array(cls, value) -> np.ndarray:
        array = np.array(value, dtype=complex)
        array.setflags(write=False)
        return array

    @model_validator(mode="after")
    def _check_length(self) -> "ComplexField":
        if self.values.ndim != 1 or self.values.shape[0] != self.grid.n:
            raise ValueError(f"expected {self.grid.n} samples, got shape {self.values.shape}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field samples must be finite")
        return self

    def modulus(self) -> np.ndarray:
        return np.abs(self.values)

    def norm_squared(self) -> float:
        return float(simpson(np.abs(self.values) ** 2, x=self.grid.points()))

    def norm(self) -> float:
        return math.sqrt(self.norm_squared())

    def overlap(self, other: "ComplexField") -> complex:
        """<self, other> by Simpson quadrature; grids must coincide."""
        if self.grid != other.grid:
            raise ValueError("overlap needs identical grids")
        return complex(simpson(np.conj(self.values) * other.values, x=self.grid.points()))


# 3. Spectrum

class ScatteringState(BaseModel):
    model_config = ConfigDict(frozen=True)

    k: float = Field(..., gt=0, description="Wavenumber.")
    wall: WallParameter
    delta: float = Field(..., ge=0, lt=2 * math.pi, description="Phase shift in [0, 2pi).")


class BoundState(BaseModel):
    model_config = ConfigDict(frozen=True)

    wall: WallParameter
    energy: float = Field(..., lt=0, description="-hbar^2/(2 m L^2).")
    field: ComplexField


class EnergyExpectation(BaseModel):
    model_config = ConfigDict(frozen=True)

    direct: float = Field(..., description="Quadrature of the quadratic form with the boundary term.")
    via_identity: float = Field(..., description="(1/L^2) int |psi + L psi'|^2 form, bounded below.")


class WavePacket(BaseModel):
    """Gaussian spectral profile exp(-(k-k0)^2/(2 sigma^2)) restricted to k > 0."""
    model_config = ConfigDict(frozen=True)

    k0: float = Field(..., gt=0, description="Central wavenumber.")
    sigma: float = Field(..., gt=0, description="Spectral width.")
    x0: float = Field(..., gt=0, description="Launch position.")
    wall: WallParameter


class Branch(str, Enum):
    INCIDENT = "incident"
    REFLECTED = "reflected"


class PeakTrack(BaseModel):
    model_config = ConfigDict(frozen=True)

    branch: Branch
    times: list[float]
    peaks: list[float]
    slope: float = Field(..., description="Fitted velocity.")
    intercept: float = Field(..., description="Fitted position at t = 0.")
    residual: float = Field(..., ge=0, description="RMS fit residual relative to the largest peak position.")

    @property
    def wall_arrival(self) -> float:
        """Instant at which the fitted line crosses x = 0."""
        return -self.intercept / self.slope


# 4. Kernel

class KernelQuery(BaseModel):
    model_config = ConfigDict(frozen=True)

    a: float = Field(..., gt=0, description="Initial position.")
    b: float = Field(..., gt=0, description="Final position.")
    T: float = Field(..., gt=0, description="Elapsed time.")
    wall: WallParameter

    def swapped(self) -> "KernelQuery":
        return self.model_copy(update={"a": self.b, "b": self.a})


class KernelMethod(str, Enum):
    CLOSED = "closed"
    SPECTRAL = "spectral"


class KernelValue(BaseModel):
    model_config = ConfigDict(frozen=True)

    value: complex
    method: KernelMethod
    est_error: float = Field(..., ge=0, description="A-posteriori error estimate.")


# 5. Regularization

class StepPotential(BaseModel):
    """V1 for x < -d, V2 for -d < x < 0, zero for x > 0."""
    model_config = ConfigDict(frozen=True)

    v1: float = Field(..., gt=0, description="Barrier height of region I.")
    v2: float = Field(..., lt=0, description="Well depth of region II.")
    d: float = Field(..., gt=0, description="Width of region II.")

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.where(x < -self.d, self.v1, np.where(x < 0.0, self.v2, 0.0))


class MatchingSolution(BaseModel):
    """Eigenfunction matching across the step; amplitudes scaled so phi(-d) = 1."""
    model_config = ConfigDict(frozen=True)

    E: float
    kappa: float = Field(..., gt=0)
    ktilde: float = Field(..., gt=0)
    alpha: float = Field(..., gt=0, lt=math.pi / 2)
    beta: float = Field(..., gt=0)
    R: float = Field(..., description="phi'/phi at x = 0; signed infinity at a matching pole.")
    r_inv: float = Field(..., description="1/R, finite at poles.")
    A: complex
    B: complex

    @property
    def log_N(self) -> float:
        """log of the region-I amplitude N in N exp(kappa x)."""
        return self.kappa * self.beta / self.ktilde


class ExteriorAmplitudes(BaseModel):
    """phi_III = C exp(ikx) + D exp(-ikx) with phi_III(0) = A + B."""
    model_config = ConfigDict(frozen=True)

    k: float = Field(..., gt=0)
    C: complex
    D: complex
    phase: float = Field(..., ge=0, lt=2 * math.pi, description="arg(C/D) in [0, 2pi).")


class SchemeFamily(str, Enum):
    S311 = "s311"   # beta0 = 0, alpha0 = 0
    S312 = "s312"   # beta0 = pi (mod pi), alpha0 = 0
    S316 = "s316"   # 0 < alpha0 = beta0 < pi/2
    S318 = "s318"   # alpha0 = beta0 = pi/2
    S512 = "s512"   # Dirichlet with bounce action pi hbar
    S513 = "s513"   # Neumann with vanishing bounce action


class RegularizationScheme(BaseModel):
    """A d-indexed family of step potentials targeting one wall."""
    model_config = ConfigDict(frozen=True)

    family: SchemeFamily
    L_target: WallParameter
    c: float = Field(1.0, gt=0)
    nu: float | None = None
    beta0: float | None = None
    c1: float = Field(1.0, gt=0)


class SweepRow(BaseModel):
    model_config = ConfigDict(frozen=True)

    d: float
    E: float
    R: float
    r_inv: float
    err: float


class SweepReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    scheme: RegularizationScheme
    monitored: str = Field(..., description="|R + 1/L|, |1/R| or |R| depending on the target.")
    rows: list[SweepRow]
    orders: dict[float, float] = Field(..., description="Empirical log-log order of err(d) per energy.")
    non_convergent: bool = Field(..., description="err grew between the two smallest d for some energy.")
    stalled_energies: list[float] = Field(default_factory=list)

    def final_errors(self) -> dict[float, float]:
        d_min = min(row.d for row in self.rows)
        return {row.E: row.err for row in self.rows if row.d == d_min}

    def final_R(self) -> dict[float, float]:
        d_min = min(row.d for row in self.rows)
        return {row.E: row.R for row in self.rows if row.d == d_min}


# 6. Classical

class DelayKind(str, Enum):
    QUANTUM_TAU = "quantum_tau"   # time delay of the wall at v = sqrt(2E/m)
    TAU_TILDE = "tau_tilde"       # time spent left of x = L
    SAMPLED = "sampled"           # spline through (E_i, tau_i)


class DelayProfile(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: DelayKind
    wall: WallParameter | None = None
    energies: list[float] | None = None
    delays: list[float] | None = None

    @model_validator(mode="after")
    def _check_payload(self) -> "DelayProfile":
        if self.kind is DelayKind.SAMPLED:
            if self.energies is None or self.delays is None or len(self.energies) != len(self.delays):
                raise ValueError("sampled profile needs equally long energies and delays")
            if len(self.energies) < 4 or min(self.energies) < 0:
                raise ValueError("sampled profile needs at least 4 non-negative energies")
        elif self.wall is None or not self.wall.is_nonstandard_finite:
            raise ValueError(f"{self.kind.value} profile needs a finite nonzero wall")
        return self


class WeakRealization(BaseModel):
    """Potential reproducing the L < 0 delay only for launch points at infinity."""
    model_config = ConfigDict(frozen=True)

    L: float = Field(..., description="Negative wall length.")
    c: float = Field(1.0, description="Free constant, c >= 1 keeps V positive and decreasing.")


class ImpossibilityWitness(BaseModel):
    model_config = ConfigDict(frozen=True)

    L: float
    W: float
    closed_form: float
    abel: float

    @property
    def discrepancy(self) -> float:
        return abs(self.closed_form - self.abel)


# 7. WKB

class DirectAction(BaseModel):
    model_config = ConfigDict(frozen=True)

    E: float
    S: float
    d2S_dadb: float = Field(..., description="Mixed derivative from the closed form.")
    d2S_dadb_fd: float = Field(..., description="Mixed central finite difference of S.")


class BounceAnalysis(BaseModel):
    model_config = ConfigDict(frozen=True)

    E_direct: float
    S_direct: float
    direct_degenerate: bool = False
    E_bounce: float
    S_bounce: float
    dS_da: float
    dS_da_fd: float | None = None
    d2S_dadb: float
    delta_S: float = Field(..., description="S_bounce - m (a+b)^2 / (2T).")


class KernelDecomposition(BaseModel):
    """K = pref [exp(i m (b-a)^2 / 2hT) + A_L exp(i S0/h)]."""
    model_config = ConfigDict(frozen=True)

    A_L: complex
    S0_bounce: float
    prefactor: complex
    direct_phase: float

    def reconstruct(self, hbar: float = 1.0) -> complex:
        return self.prefactor * (
            np.exp(1j * self.direct_phase) + self.A_L * np.exp(1j * self.S0_bounce / hbar)
        )


class ALReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    wall: WallParameter
    T: float
    sums: list[float]
    phases: list[float]
    spread: float
    noise: float

    @property
    def witnessed(self) -> bool:
        """arg A_L varies with a + b well above the numerical noise."""
        return self.spread > 10.0 * self.noise
