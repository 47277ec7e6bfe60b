"""Flat ``key = value`` run configuration.

Blank lines and ``#`` comments are ignored.  Unknown keys are rejected so a
typo cannot silently fall back to a default.  Example::

    # regularizing regime
    N = 2
    n = 64
    p = 1.5
    r = 6
    A = 1
    data = singular
    alpha = 1.68
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from .data import make_singular_f, make_smooth_f
from .energy import CouplingParams
from .fixedpoint import FixedPointOptions
from .grid import Grid, GridFunction
from .optimize import SolverOptions

DATA_KINDS = ("smooth", "singular", "zero")


class ConfigError(ValueError):
    pass


def _real(text):
    """Decimal, exponent or ``a/b`` notation."""
    return float(Fraction(text.strip()))


def _floats(text):
    return tuple(_real(v) for v in text.split(",") if v.strip())


def _ints(text):
    return tuple(int(v) for v in text.split(",") if v.strip())


def _opt_float(text):
    return None if text.strip().lower() in ("", "none", "default") else _real(text)


def _omega(text):
    return "auto" if text.strip() == "auto" else _real(text)


@dataclass(frozen=True)
class RunConfig:
    # grid
    N: int = 2
    n: tuple[int, ...] = (32,)
    extent: tuple[float, ...] = (1.0,)
    # coupling
    p: float = 2.0
    A: float = 1.0
    r: float = 2.0
    theta: float = 0.0
    eps: float | None = None
    # inner solver
    tol: float = 1e-8
    max_iters: int = 5000
    method: str = "newton_damped"
    # outer loop
    fp_tol: float = 1e-6
    max_outer: int = 200
    omega: float | str = 1.0
    init: str = "zero"
    accel: str = "none"
    # data
    data: str = "smooth"
    amplitude: float = 1.0
    alpha: float = 0.0
    center: tuple[float, ...] | None = None
    cap_radius: float | None = None
    m: float | None = None
    m_gap: float = 0.01
    # diagnostics and output
    floor: float = 1e-2
    out: str = "out"
    seed: int = 0

    def __post_init__(self):
        if self.N not in (2, 3):
            raise ConfigError(f"N must be 2 or 3, got {self.N}")
        for name in ("n", "extent"):
            if len(getattr(self, name)) not in (1, self.N):
                raise ConfigError(f"{name} needs 1 or N={self.N} entries, got {getattr(self, name)}")
        if any(c < 2 for c in self.n):
            raise ConfigError(f"need at least 2 cells per axis, got n={self.n}")
        if any(not e > 0 for e in self.extent):
            raise ConfigError(f"extent must be positive, got {self.extent}")
        if self.data not in DATA_KINDS:
            raise ConfigError(f"data must be one of {DATA_KINDS}, got {self.data!r}")
        if not self.alpha >= 0:
            raise ConfigError(f"need alpha >= 0, got alpha={self.alpha}")
        if self.cap_radius is not None and not self.cap_radius > 0:
            raise ConfigError(f"need cap_radius > 0, got cap_radius={self.cap_radius}")
        if self.center is not None and len(self.center) != self.N:
            raise ConfigError(f"center needs N={self.N} coordinates, got {self.center}")
        if self.m is not None and not self.m >= 1:
            raise ConfigError(f"need m >= 1, got m={self.m}")
        if not self.floor > 0:
            raise ConfigError(f"need floor > 0, got floor={self.floor}")
        try:
            self.params()
            self.solver_options()
            self.fp_options()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)

    def grid(self) -> Grid:
        n = self.n * self.N if len(self.n) == 1 else self.n
        ext = self.extent * self.N if len(self.extent) == 1 else self.extent
        return Grid(tuple(c + 1 for c in n), tuple(ext))

    def params(self) -> CouplingParams:
        return CouplingParams(p=self.p, A=self.A, r=self.r, theta=self.theta, eps=self.eps)

    def solver_options(self) -> SolverOptions:
        return SolverOptions(tol=self.tol, max_iters=self.max_iters, method=self.method)

    def fp_options(self) -> FixedPointOptions:
        return FixedPointOptions(fp_tol=self.fp_tol, max_outer=self.max_outer, omega=self.omega,
                                 init=self.init, accel=self.accel)

    def rhs(self, grid: Grid | None = None) -> GridFunction:
        grid = grid or self.grid()
        if self.data == "zero":
            return GridFunction.zeros(grid)
        if self.data == "smooth":
            return make_smooth_f(grid, self.amplitude)
        return make_singular_f(grid, self.alpha, self.center, self.cap_radius) * self.amplitude


_PARSERS = {
    "N": int, "n": _ints, "extent": _floats,
    "p": _real, "A": _real, "r": _real, "theta": _real, "eps": _opt_float,
    "tol": _real, "max_iters": int, "method": str.strip,
    "fp_tol": _real, "max_outer": int, "omega": _omega, "init": str.strip, "accel": str.strip,
    "data": str.strip, "amplitude": _real, "alpha": _real, "center": _floats,
    "cap_radius": _opt_float, "m": _opt_float, "m_gap": _real,
    "floor": _real, "out": str.strip, "seed": int,
}
assert set(_PARSERS) == {f.name for f in dataclasses.fields(RunConfig)}


def parse_value(key: str, text: str):
    if key not in _PARSERS:
        raise ConfigError(f"unknown config key {key!r}")
    try:
        return _PARSERS[key](text)
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"bad value for {key}: {text!r} ({exc})") from None


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected key = value, got {raw!r}")
        key, _, val = (s.strip() for s in line.partition("="))
        if key in values:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        values[key] = parse_value(key, val)
    return RunConfig(**values)


def load_config(path) -> RunConfig:
    path = Path(path)
    return parse_config(path.read_text(), str(path))


def dump_config(cfg: RunConfig) -> str:
    lines = []
    for f in dataclasses.fields(cfg):
        v = getattr(cfg, f.name)
        if v is None:
            v = "none"
        elif isinstance(v, tuple):
            v = ",".join(repr(x) for x in v)
        lines.append(f"{f.name} = {v}")
    return "\n".join(lines) + "\n"
