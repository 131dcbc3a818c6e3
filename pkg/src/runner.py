"""Run configurations, parameter sweeps and result tables shared by the CLI and the A2A agent."""

import csv
import io
import itertools
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from enum import Enum
from typing import Any, Callable

from pydantic import BaseModel, ConfigDict, Field, model_validator

from walls.classical import (
    CounterpartPotential,
    HardWall,
    WeakPotential,
    abel_invert,
    classical_time_delay,
    counterpart_potential,
    impossibility_bound,
    quantum_tau_profile,
    tau_tilde_profile,
    weak_delay_formula,
    weak_potential,
)
from walls.core import parse_wall, serialize_wall
from walls.errors import MalformedInput, UnsupportedWall
from walls.kernel import closed_form, kernel_closed, kernel_spectral
from walls.models import Grid, KernelQuery, UnitSystem, WallParameter, WavePacket, WeakRealization
from walls.regularization import convergence_sweep, decades, default_d_list, make_scheme
from walls.spectrum import measure_time_delay, packet_release_time, phase_shift, time_delay
from walls.wkb import al_ab_dependence, bounce_quantities, delta_S_limit, step_bounce, wkb_kernel

logger = logging.getLogger(__name__)

HEADER_PREFIX = "# wall-lab "
MAX_LISTS = 2


class Command(str, Enum):
    DELAY = "delay"
    PACKET = "packet"
    KERNEL = "kernel"
    REGULARIZE = "regularize"
    CLASSICAL = "classical"
    WKB = "wkb"


class OutputFormat(str, Enum):
    CSV = "csv"
    JSON = "json"


class ParamKind(str, Enum):
    WALL = "wall"         # decimal or inf, kept in its serialized form
    FLOAT = "float"
    INT = "int"
    TEXT = "text"
    FLOATS = "floats"     # a value list that is not a sweep axis
    DECADES = "decades"   # A:B, d = 10^-A ... 10^-B


class ParamSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: ParamKind
    default: Any = None
    choices: tuple[str, ...] | None = None
    sweepable: bool = True


def _p(
    kind: ParamKind, default: Any = None, choices: tuple[str, ...] | None = None, *, sweepable: bool = True
) -> ParamSpec:
    return ParamSpec(kind=kind, default=default, choices=choices, sweepable=sweepable)


K = ParamKind
SCHEMES = ("s311", "s312", "s316", "s318", "s512", "s513")

# declaration order fixes the sweep order: earlier lists vary slowest
COMMAND_PARAMS: dict[Command, dict[str, ParamSpec]] = {
    Command.DELAY: {"L": _p(K.WALL, "0"), "k0": _p(K.FLOAT, 1.0)},
    Command.PACKET: {
        "L": _p(K.WALL, "0"), "k0": _p(K.FLOAT, 2.0), "sigma": _p(K.FLOAT, 0.1), "x0": _p(K.FLOAT, 30.0),
        "t-list": _p(K.FLOATS), "grid-n": _p(K.INT, 3001), "x-max": _p(K.FLOAT, 60.0),
    },
    Command.KERNEL: {
        "L": _p(K.WALL, "0"), "a": _p(K.FLOAT, 1.0), "b": _p(K.FLOAT, 2.0), "T": _p(K.FLOAT, 1.0),
        "method": _p(K.TEXT, "closed", ("closed", "spectral")),
    },
    Command.REGULARIZE: {
        "scheme": _p(K.TEXT, "s311", SCHEMES), "L": _p(K.WALL),
        "c": _p(K.FLOAT), "nu": _p(K.FLOAT), "beta0": _p(K.FLOAT), "c1": _p(K.FLOAT),
        "E": _p(K.FLOAT, 1.0), "d-decades": _p(K.DECADES),
    },
    Command.CLASSICAL: {
        "sub": _p(K.TEXT, "counterpart", ("counterpart", "delay", "invert", "bound", "weak-potential", "weak-delay"),
                  sweepable=False),
        "L": _p(K.FLOAT, 1.0), "c": _p(K.FLOAT, 1.0), "E": _p(K.FLOAT, 0.5),
        "x0": _p(K.FLOAT, 10.0), "W": _p(K.FLOAT, 1.5), "x": _p(K.FLOAT, 0.5),
    },
    Command.WKB: {
        "sub": _p(K.TEXT, "deltas", ("action", "deltas", "al", "wkbkernel"), sweepable=False),
        "scheme": _p(K.TEXT, "s512", SCHEMES), "d-decades": _p(K.DECADES, "2:6"),
        "L": _p(K.WALL, "0"), "a": _p(K.FLOAT, 1.0), "b": _p(K.FLOAT, 2.0), "T": _p(K.FLOAT, 1.0),
    },
}


def _convert(key: str, spec: ParamSpec, value: Any) -> Any:
    try:
        if spec.kind is ParamKind.WALL:
            return serialize_wall(parse_wall(str(value)))
        if spec.kind is ParamKind.FLOAT:
            number = float(value)
            if math.isnan(number):
                raise ValueError("nan")
            return number
        if spec.kind is ParamKind.INT:
            return int(value)
        if spec.kind is ParamKind.DECADES:
            first, last = (int(part) for part in str(value).split(":"))
            return f"{first}:{last}"
        text = str(value)
    except (TypeError, ValueError) as e:
        raise MalformedInput(f"--{key}: {value!r} is not a valid {spec.kind.value}", operation="run") from e
    if spec.choices and text not in spec.choices:
        raise MalformedInput(f"--{key}: {text!r} not one of {', '.join(spec.choices)}", operation="run")
    return text


def resolve_params(command: Command, raw: dict[str, Any]) -> dict[str, Any]:
    """Fill defaults, convert types and reject unknown keys; list values become sweep axes."""
    specs = COMMAND_PARAMS[command]
    unknown = set(raw) - set(specs)
    if unknown:
        raise MalformedInput(f"unknown parameters for {command.value}: {sorted(unknown)}", operation="run")
    resolved: dict[str, Any] = {}
    for key, spec in specs.items():
        value = raw.get(key, spec.default)
        if value is None:
            resolved[key] = None
        elif spec.kind is ParamKind.FLOATS:
            items = value if isinstance(value, list) else str(value).split(",")
            resolved[key] = [_convert(key, _p(ParamKind.FLOAT), v) for v in items]
        elif isinstance(value, list):
            if not spec.sweepable:
                raise MalformedInput(f"--{key} takes a single value", operation="run")
            if not value:
                raise MalformedInput(f"--{key}-list is empty", operation="run")
            resolved[key] = [_convert(key, spec, v) for v in value]
        else:
            resolved[key] = _convert(key, spec, value)
    lists = [k for k, v in resolved.items() if isinstance(v, list) and specs[k].kind is not ParamKind.FLOATS]
    if len(lists) > MAX_LISTS:
        raise MalformedInput(f"at most {MAX_LISTS} list-valued parameters, got {lists}", operation="sweep")
    return resolved


class RunConfig(BaseModel):
    """Fully resolved run; its JSON form is the header of every table."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    command: Command
    format: OutputFormat = OutputFormat.CSV
    hbar: float = Field(1.0, gt=0, description="Action scale.")
    mass: float = Field(1.0, gt=0, description="Particle mass.")
    params: dict[str, Any] = Field(default_factory=dict)

    @model_validator(mode="before")
    @classmethod
    def _resolve(cls, data: Any) -> Any:
        # idempotent, so a header read back in resolves to itself
        if isinstance(data, dict) and "command" in data:
            data = {**data, "params": resolve_params(Command(data["command"]), data.get("params") or {})}
        return data

    @property
    def units(self) -> UnitSystem:
        return UnitSystem(hbar=self.hbar, mass=self.mass)

    def header(self) -> str:
        return HEADER_PREFIX + json.dumps(self.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_header(cls, line: str) -> "RunConfig":
        if not line.startswith(HEADER_PREFIX):
            raise MalformedInput("not a wall-lab header", operation="run")
        try:
            data = json.loads(line[len(HEADER_PREFIX):])
        except json.JSONDecodeError as e:
            raise MalformedInput(f"header is not JSON: {e}", operation="run") from e
        return cls.model_validate(data)


# 1. Result tables

class ColumnKind(str, Enum):
    REAL = "real"
    COMPLEX = "complex"   # emitted as name_re, name_im
    TEXT = "text"


class Column(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str
    kind: ColumnKind = ColumnKind.REAL


class ResultTable(BaseModel):
    config: RunConfig
    columns: list[Column]
    rows: list[list[Any]] = Field(default_factory=list)

    @model_validator(mode="after")
    def _check_width(self) -> "ResultTable":
        for row in self.rows:
            if len(row) != len(self.columns):
                raise ValueError(f"row has {len(row)} values for {len(self.columns)} columns")
        return self

    def flat_names(self) -> list[str]:
        names = []
        for column in self.columns:
            if column.kind is ColumnKind.COMPLEX:
                names += [f"{column.name}_re", f"{column.name}_im"]
            else:
                names.append(column.name)
        return names

    def flat_row(self, row: list[Any]) -> list[Any]:
        out = []
        for column, value in zip(self.columns, row):
            if column.kind is ColumnKind.COMPLEX:
                z = complex(value)
                out += [z.real, z.imag]
            elif column.kind is ColumnKind.REAL:
                out.append(float(value))
            else:
                out.append(str(value))
        return out

    def to_csv(self) -> str:
        buffer = io.StringIO()
        buffer.write(self.config.header() + "\n")
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(self.flat_names())
        for row in self.rows:
            writer.writerow([format_value(v) for v in self.flat_row(row)])
        return buffer.getvalue()

    def records(self) -> list[dict[str, Any]]:
        names = self.flat_names()
        return [
            {name: _json_value(v) for name, v in zip(names, self.flat_row(row))}
            for row in self.rows
        ]

    def to_json(self) -> str:
        payload = {"config": self.config.model_dump(mode="json"), "records": self.records()}
        return json.dumps(payload, indent=2) + "\n"

    def render(self) -> str:
        return self.to_json() if self.config.format is OutputFormat.JSON else self.to_csv()


def format_value(value: Any) -> str:
    """17 significant digits, so every double round-trips."""
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def _json_value(value: Any) -> Any:
    if isinstance(value, float) and not math.isfinite(value):
        return format(value, "g")
    return value


# 2. Commands

RowFunction = Callable[[dict[str, Any], UnitSystem], list[list[Any]]]


def _wall(point: dict[str, Any], key: str = "L") -> WallParameter:
    return parse_wall(point[key])


def _delay_rows(point, units):
    wall = _wall(point)
    k0 = point["k0"]
    return [[point["L"], k0, phase_shift(k0, wall), time_delay(k0, wall, units=units)]]


def _packet_rows(point, units):
    wall = _wall(point)
    packet = WavePacket(k0=point["k0"], sigma=point["sigma"], x0=point["x0"], wall=wall)
    grid = Grid(x_min=0.0, x_max=point["x-max"], n=point["grid-n"])
    measured = measure_time_delay(packet, grid, point["t-list"], units=units)
    return [[
        point["L"], packet.k0, packet.sigma, packet.x0, packet_release_time(packet, units=units),
        measured, time_delay(packet.k0, wall, units=units),
    ]]


def _kernel_rows(point, units):
    q = KernelQuery(a=point["a"], b=point["b"], T=point["T"], wall=_wall(point))
    value = kernel_spectral(q, units=units) if point["method"] == "spectral" else kernel_closed(q, units=units)
    return [[point["L"], q.a, q.b, q.T, value.method.value, value.value, value.est_error]]


def _scheme(point) -> Any:
    target = None if point.get("L") is None else _wall(point)
    options = {key: point[key] for key in ("c", "nu", "beta0", "c1") if point.get(key) is not None}
    return make_scheme(point["scheme"], target, **options)


def _d_list(point, scheme) -> list[float]:
    if point.get("d-decades") is None:
        return default_d_list(scheme)
    first, last = (int(part) for part in point["d-decades"].split(":"))
    return decades(first, last)


def _regularize_rows(point, units):
    scheme = _scheme(point)
    report = convergence_sweep(scheme, [point["E"]], _d_list(point, scheme), units=units)
    target = serialize_wall(scheme.L_target)
    return [[scheme.family.value, target, row.E, row.d, row.R, row.r_inv, row.err] for row in report.rows]


def _classical_rows(point, units):
    sub, L = point["sub"], point["L"]
    if sub == "counterpart":
        return [[L, point["x"], counterpart_potential(L, point["x"], units=units)]]
    if sub == "delay":
        V = CounterpartPotential(L, units=units)
        E = point["E"]
        k = math.sqrt(2.0 * units.mass * E) / units.hbar
        tau = classical_time_delay(V, E, point["x0"], units=units)
        return [[L, E, point["x0"], V.turning_point(E), tau, time_delay(k, WallParameter.finite(L), units=units)]]
    if sub == "invert":
        wall = WallParameter.finite(L)
        if L > 0.0:
            x = abel_invert(tau_tilde_profile(wall), L, point["W"], units=units)
        else:
            x = abel_invert(quantum_tau_profile(wall), 0.0, point["W"], units=units)
        gamma = 2.0 * units.mass * L * L / units.hbar**2
        return [[L, point["W"], x, L / math.sqrt(1.0 + gamma * point["W"])]]
    if sub == "bound":
        return [[L, point["W"], impossibility_bound(L, point["W"], units=units)]]
    r = WeakRealization(L=L, c=point["c"])
    if sub == "weak-potential":
        return [[L, r.c, point["x"], weak_potential(r, point["x"], units=units)]]
    E, x0 = point["E"], point["x0"]
    k = math.sqrt(2.0 * units.mass * E) / units.hbar
    quadrature = classical_time_delay(WeakPotential(r, units=units), E, x0, units=units)
    return [[L, r.c, E, x0, weak_delay_formula(r, x0, E, units=units), quadrature,
             time_delay(k, WallParameter.finite(L), units=units)]]


def _wkb_rows(point, units):
    sub = point["sub"]
    a, b, T = point["a"], point["b"], point["T"]
    if sub == "deltas":
        scheme = make_scheme(point["scheme"], None if point["scheme"] in ("s512", "s513") else _wall(point))
        limit = delta_S_limit(scheme, units=units)
        rows = []
        for d in _d_list(point, scheme):
            bounce = step_bounce(scheme, d, a, b, T, units=units)
            rows.append([scheme.family.value, d, bounce.E_bounce, bounce.delta_S, bounce.d2S_dadb, limit])
        return rows
    wall = _wall(point)
    if sub == "action":
        if wall.is_dirichlet:
            V = HardWall()
        elif wall.is_nonstandard_finite and wall.L > 0.0:
            V = CounterpartPotential(wall.L, units=units)
        else:
            raise UnsupportedWall(f"no reflecting classical potential for L={wall}", operation="bounce_quantities")
        r = bounce_quantities(V, a, b, T, units=units)
        return [[point["L"], a, b, T, r.E_direct, r.S_direct, r.E_bounce, r.S_bounce,
                 r.dS_da, r.dS_da_fd, r.d2S_dadb, r.delta_S]]
    if sub == "al":
        report = al_ab_dependence(wall, T, units=units)
        witnessed = "yes" if report.witnessed else "no"
        return [[point["L"], T, s, phase, report.spread, report.noise, witnessed]
                for s, phase in zip(report.sums, report.phases)]
    exact, _ = closed_form(wall, a, b, T, units=units)
    approx = wkb_kernel(wall, a, b, T, units=units)
    return [[point["L"], a, b, T, approx, exact, abs(approx - exact)]]


def _columns(*spec: str) -> list[Column]:
    out = []
    for item in spec:
        name, _, kind = item.partition(":")
        out.append(Column(name=name, kind=ColumnKind(kind) if kind else ColumnKind.REAL))
    return out


def columns_for(config: RunConfig) -> list[Column]:
    p = config.params
    match config.command:
        case Command.DELAY:
            return _columns("L:text", "k0", "delta", "tau")
        case Command.PACKET:
            return _columns("L:text", "k0", "sigma", "x0", "t_release", "tau_measured", "tau_predicted")
        case Command.KERNEL:
            return _columns("L:text", "a", "b", "T", "method:text", "K:complex", "est_error")
        case Command.REGULARIZE:
            return _columns("scheme:text", "L:text", "E", "d", "R", "r_inv", "err")
        case Command.CLASSICAL:
            return {
                "counterpart": _columns("L", "x", "V"),
                "delay": _columns("L", "E", "x0", "x_turn", "tau_classical", "tau_quantum"),
                "invert": _columns("L", "W", "x_abel", "x_closed"),
                "bound": _columns("L", "W", "x_bound"),
                "weak-potential": _columns("L", "c", "x", "V"),
                "weak-delay": _columns("L", "c", "E", "x0", "tau_formula", "tau_quadrature", "tau_quantum"),
            }[p["sub"]]
    return {
        "deltas": _columns("scheme:text", "d", "E_bounce", "delta_S", "d2S_dadb", "delta_S_limit"),
        "action": _columns("L:text", "a", "b", "T", "E_direct", "S_direct", "E_bounce", "S_bounce",
                           "dS_da", "dS_da_fd", "d2S_dadb", "delta_S"),
        "al": _columns("L:text", "T", "s", "phase", "spread", "noise", "witnessed:text"),
        "wkbkernel": _columns("L:text", "a", "b", "T", "K_wkb:complex", "K_exact:complex", "abs_diff"),
    }[p["sub"]]


ROW_FUNCTIONS: dict[Command, RowFunction] = {
    Command.DELAY: _delay_rows,
    Command.PACKET: _packet_rows,
    Command.KERNEL: _kernel_rows,
    Command.REGULARIZE: _regularize_rows,
    Command.CLASSICAL: _classical_rows,
    Command.WKB: _wkb_rows,
}


# 3. Sweeps

def sweep_points(config: RunConfig) -> list[dict[str, Any]]:
    """Cartesian product of the list-valued parameters, first declared list outermost."""
    specs = COMMAND_PARAMS[config.command]
    axes = [
        key for key in specs
        if isinstance(config.params.get(key), list) and specs[key].kind is not ParamKind.FLOATS
    ]
    points = []
    for combo in itertools.product(*(config.params[key] for key in axes)):
        point = dict(config.params)
        point.update(zip(axes, combo))
        points.append(point)
    return points


def dispatch(config: RunConfig, *, workers: int = 1) -> ResultTable:
    """Evaluate every sweep point; rows come back in declared order whatever the worker count."""
    columns = columns_for(config)
    row_function = ROW_FUNCTIONS[config.command]
    units = config.units
    points = sweep_points(config)
    logger.info("%s: %d point(s) on %d worker(s)", config.command.value, len(points), workers)

    def evaluate(point: dict[str, Any]) -> list[list[Any]]:
        return row_function(point, units)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            blocks = list(pool.map(evaluate, points))
    else:
        blocks = [evaluate(point) for point in points]
    return ResultTable(config=config, columns=columns, rows=[row for block in blocks for row in block])
