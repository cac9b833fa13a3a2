"""Run configuration, binary field snapshots and the CSV energy log.

Config files are flat ``key = value`` text with ``#`` comments. Snapshots use
a fixed little-endian layout::

    8 bytes   magic b"PACOKF1\\0"
    u32 Nx, u32 Ny, f64 X, f64 Y
    Nx*Ny f64 values, y-index outer, x-index inner
"""

from __future__ import annotations

import csv
import dataclasses
import math
import struct
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Any

import numpy as np

from .model import ModelParams
from .solver import SolverParams, StepReport
from .spectral import Field, GridMismatch, GridSpec


class ConfigError(ValueError):
    pass


class UnknownKey(ConfigError):
    pass


class ConfigTypeError(ConfigError, TypeError):
    pass


class MissingRequired(ConfigError):
    pass


class DuplicateKey(UserWarning):
    pass


class SnapshotError(ValueError):
    pass


class BadMagic(SnapshotError):
    pass


class TruncatedFile(SnapshotError):
    pass


IC_KINDS = ("disc", "tanh_disc", "block_random", "file")


@dataclass
class RunConfig:
    eps: float
    gamma: float
    tau: float
    X: float = 1.0
    Y: float = 1.0
    Nx: int = 512
    Ny: int = 512
    omega: float = 0.15
    M: float = 1000.0
    indicator: str = "quintic"
    kappa_h: float = 2000.0
    beta_h: float = 2.0
    tol: float = 1e-3
    max_steps: int = 1_000_000
    enforce_stability: bool = True
    ic: str = "disc"
    ic_ratio: int = 16
    ic_file: str | None = None
    r_shift: float = 0.1
    seed: int = 0
    snapshot_stride: int = 500
    log_stride: int = 1
    output_dir: str = "out"
    notes: list[str] = field(default_factory=list, repr=False)

    def __post_init__(self):
        if not 0 <= self.seed < 2**64:
            raise ConfigTypeError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if self.ic not in IC_KINDS:
            raise ConfigTypeError(f"ic must be one of {IC_KINDS}, got {self.ic!r}")
        if self.ic == "block_random" and (self.Nx % self.ic_ratio or self.Ny % self.ic_ratio):
            raise ConfigTypeError(f"ic_ratio {self.ic_ratio} must divide Nx and Ny")
        if self.ic == "file" and not self.ic_file:
            raise MissingRequired("ic = file needs ic_file")
        if self.snapshot_stride < 0 or self.log_stride < 1:
            raise ConfigTypeError("strides must be positive (snapshot_stride 0 disables snapshots)")
        try:
            self.grid_spec()
            self.model_params()
            self.solver_params()
        except ValueError as exc:
            raise ConfigTypeError(str(exc)) from exc

    @property
    def h(self) -> float:
        return 2 * self.X / self.Nx

    def grid_spec(self) -> GridSpec:
        return GridSpec(self.X, self.Y, self.Nx, self.Ny)

    def model_params(self) -> ModelParams:
        return ModelParams(eps=self.eps, gamma=self.gamma, omega=self.omega, M=self.M, indicator=self.indicator)

    def solver_params(self) -> SolverParams:
        return SolverParams(
            tau=self.tau,
            kappa_h=self.kappa_h,
            beta_h=self.beta_h,
            tol=self.tol,
            max_steps=self.max_steps,
            enforce_stability=self.enforce_stability,
            report_stride=self.log_stride,
        )

    def to_text(self) -> str:
        skip = {"notes", "ic_file"} if self.ic_file is None else {"notes"}
        lines = [f"{f.name} = {_render(getattr(self, f.name))}" for f in dataclasses.fields(self) if f.name not in skip]
        return "\n".join(lines) + "\n"


def _render(v: Any) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _parse_bool(s: str) -> bool:
    low = s.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _parse_int(s: str) -> int:
    v = float(s) if any(c in s for c in ".eE") else int(s, 0)
    if v != int(v):
        raise ValueError(f"not an integer: {s!r}")
    return int(v)


_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(RunConfig) if f.name != "notes"}
_PARSERS = {"float": float, "int": _parse_int, "bool": _parse_bool, "str": str, "str | None": str}
# keys accepted in addition to RunConfig fields
_ALIASES = {"N", "eps_over_h"}


def parse_config(text: str) -> RunConfig:
    """Parse ``key = value`` lines into a :class:`RunConfig`.

    ``eps`` may be given directly or as ``eps_over_h`` (a multiple of the x
    grid spacing), not both. ``N`` sets ``Nx`` and ``Ny`` together. A repeated
    key keeps its last value and leaves a note (and a ``DuplicateKey``
    warning).
    """
    raw: dict[str, str] = {}
    notes: list[str] = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _FIELD_TYPES and key not in _ALIASES:
            raise UnknownKey(f"line {lineno}: unknown key {key!r}")
        if key in raw:
            msg = f"line {lineno}: duplicate key {key!r}, last value wins"
            notes.append(msg)
            warnings.warn(msg, DuplicateKey, stacklevel=2)
        raw[key] = value

    values: dict[str, Any] = {}
    try:
        for key, value in raw.items():
            if key == "N":
                n = _parse_int(value)
                values.setdefault("Nx", n)
                values.setdefault("Ny", n)
            elif key == "eps_over_h":
                values["eps_over_h"] = float(value)
            else:
                values[key] = _PARSERS[_FIELD_TYPES[key]](value)
    except ValueError as exc:
        raise ConfigTypeError(str(exc)) from exc
    for axis in ("Nx", "Ny"):
        if axis in raw:
            values[axis] = _parse_int(raw[axis])

    eps_over_h = values.pop("eps_over_h", None)
    if eps_over_h is not None:
        if "eps" in values:
            raise ConfigError("give either eps or eps_over_h, not both")
        X = values.get("X", 1.0)
        Nx = values.get("Nx", 512)
        values["eps"] = eps_over_h * 2 * X / Nx
    missing = [k for k in ("eps", "gamma", "tau") if k not in values]
    if missing:
        raise MissingRequired(f"missing required keys: {', '.join(missing)}")
    return RunConfig(**values, notes=notes)


def load_config(path: str | Path) -> RunConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"))


# -- snapshots ------------------------------------------------------------------

MAGIC = b"PACOKF1\0"
_HEADER = struct.Struct("<IIdd")


def write_snapshot(phi: Field, path: str | Path) -> None:
    spec = phi.grid
    body = np.ascontiguousarray(phi.values.T, dtype="<f8").tobytes()
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(_HEADER.pack(spec.Nx, spec.Ny, spec.X, spec.Y))
        fh.write(body)


def read_snapshot(path: str | Path, expect: GridSpec | None = None) -> Field:
    data = Path(path).read_bytes()
    if len(data) < len(MAGIC) or data[: len(MAGIC)] != MAGIC:
        raise BadMagic(f"{path}: not a field snapshot")
    off = len(MAGIC)
    if len(data) < off + _HEADER.size:
        raise TruncatedFile(f"{path}: header cut short")
    Nx, Ny, X, Y = _HEADER.unpack_from(data, off)
    off += _HEADER.size
    need = off + 8 * Nx * Ny
    if len(data) < need:
        raise TruncatedFile(f"{path}: expected {need} bytes, found {len(data)}")
    try:
        spec = GridSpec(X, Y, Nx, Ny)
    except ValueError as exc:
        raise SnapshotError(f"{path}: bad header ({exc})") from exc
    if expect is not None and spec != expect:
        raise GridMismatch(f"{path}: snapshot grid {spec} != expected {expect}")
    values = np.frombuffer(data, dtype="<f8", count=Nx * Ny, offset=off).reshape(Ny, Nx).T
    return Field(spec, values.astype(float))


# -- energy log ------------------------------------------------------------------

LOG_COLUMNS = (
    "step",
    "time",
    "E_total",
    "E_interface",
    "E_doublewell",
    "E_nonlocal",
    "E_penalty",
    "volume_residual",
    "step_change",
)


def fmt_float(x: float) -> str:
    return format(x, ".17g")


class EnergyLog:
    """Append-only CSV sink for step reports; writes the header on first use."""

    def __init__(self, sink: IO[str]):
        self.sink = sink
        self._writer = csv.writer(sink, lineterminator="\n")
        self._started = False

    def append(self, report: StepReport) -> None:
        if not self._started:
            self._writer.writerow(LOG_COLUMNS)
            self._started = True
        e = report.energy.as_dict()
        row = [str(report.step), fmt_float(report.time)]
        row += [fmt_float(e[k]) for k in LOG_COLUMNS[2:8]]
        row.append(fmt_float(report.step_change))
        self._writer.writerow(row)


def energy_log_append(report: StepReport, sink: EnergyLog) -> None:
    sink.append(report)


def read_csv(path: str | Path) -> list[dict[str, float]]:
    """Read any CSV this package writes, converting every cell to a number."""
    with open(path, newline="") as fh:
        return [{k: _number(v) for k, v in row.items()} for row in csv.DictReader(fh)]


def _number(v: str) -> float:
    if v in ("", "--"):
        return math.nan
    try:
        return int(v)
    except ValueError:
        return float(v)
