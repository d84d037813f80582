"""
Flat ``key = value`` run configuration.

Values come from three layers, later ones winning: built-in defaults, the
config file, and ``--set key=value`` overrides on the command line.  Every
problem is reported as ``ConfigError`` carrying the source and line number.
"""

from __future__ import annotations

import csv
import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .hamiltonians import HamiltonianSpec, PotentialKind, PotentialSpec
from .krein import Boundary, Grid, PhysicalConstants

COMMANDS = ("spectrum", "evolve", "check", "report")
CHECK_NAMES = ("pt_symmetric", "j_hermitian", "real_potential", "krein_unitary",
               "hilbert_unitary", "adjoint_identity", "adjoint_identity_dirac",
               "adjoint_axioms")
INITIAL_STATES = ("gaussian", "eigenstate", "file")
POTENTIALS = ("zero", "harmonic", "bender", "imaginary_cubic", "custom")

_ALIASES = {"L": "half_width", "N": "n_points", "m": "mass", "eps": "epsilon",
            "epsilon_": "epsilon"}

# names usable inside potential_expr; no builtins are exposed
_EXPR_NAMESPACE = {
    "np": np, "pi": math.pi, "i": 1j, "I": 1j, "exp": np.exp, "sin": np.sin,
    "cos": np.cos, "abs": np.abs, "sqrt": np.sqrt, "sign": np.sign, "real": np.real,
    "imag": np.imag, "conj": np.conj,
}


class ConfigError(ValueError):
    def __init__(self, message: str, source: str = "<config>", line: int | None = None):
        self.source, self.line = source, line
        where = f"{source}:{line}" if line is not None else source
        super().__init__(f"{where}: {message}")


def _as_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _as_checks(text: str) -> tuple[str, ...]:
    names = tuple(n.strip() for n in text.split(",") if n.strip())
    if not names:
        raise ValueError("empty check list")
    if names == ("all",):
        return CHECK_NAMES
    bad = [n for n in names if n not in CHECK_NAMES]
    if bad:
        raise ValueError(f"unknown checks {bad}; choose from {', '.join(CHECK_NAMES)}")
    return names


@dataclass(frozen=True)
class RunConfig:
    command: str = "spectrum"
    # grid
    half_width: float = 8.0
    n_points: int = 401
    boundary: str = "dirichlet"
    stencil_order: int = 2
    # constants
    hbar: float = 1.0
    mass: float = 1.0
    # potential
    potential: str = "harmonic"
    omega: float = 1.0
    epsilon: float = 0.0
    potential_expr: str = ""
    potential_file: str = ""
    # evolution
    t_final: float = 2.0
    n_steps: int = 200
    initial_state: str = "gaussian"
    gaussian_center: float = 1.0
    gaussian_width: float = 0.5
    gaussian_momentum: float = 0.0
    eigenstate_index: int = 0
    initial_file: str = ""
    save_snapshots: bool = False
    # checks and tolerances
    checks: tuple[str, ...] = CHECK_NAMES
    check_time: float = 0.5
    null_tol: float = 1e-8
    reality_tol: float = 1e-6
    unitarity_tol: float = 1e-8
    axiom_tol: float = 1e-10
    include_null_states: bool = False
    base_dir: str = field(default=".", compare=False)

    _PARSERS = {
        "half_width": float, "n_points": int, "stencil_order": int, "hbar": float,
        "mass": float, "omega": float, "epsilon": float, "t_final": float, "n_steps": int,
        "gaussian_center": float, "gaussian_width": float, "gaussian_momentum": float,
        "eigenstate_index": int, "save_snapshots": _as_bool, "checks": _as_checks,
        "check_time": float, "null_tol": float, "reality_tol": float,
        "unitarity_tol": float, "axiom_tol": float, "include_null_states": _as_bool,
    }

    @classmethod
    def keys(cls) -> list[str]:
        return [f.name for f in dataclasses.fields(cls) if f.name not in ("command", "base_dir")]

    @classmethod
    def load(cls, command: str, path: str | Path | None = None,
             overrides: list[str] | tuple[str, ...] = ()) -> "RunConfig":
        if command not in COMMANDS:
            raise ConfigError(f"unknown command {command!r}", "<command line>")
        values: dict[str, object] = {}
        base_dir = "."
        if path is not None:
            path = Path(path)
            base_dir = str(path.parent)
            try:
                text = path.read_text()
            except OSError as exc:
                raise ConfigError(f"cannot read config: {exc.strerror}", str(path)) from None
            for lineno, raw in enumerate(text.splitlines(), 1):
                line = raw.split("#", 1)[0].strip()
                if line:
                    cls._assign(values, line, str(path), lineno)
        for k, item in enumerate(overrides, 1):
            cls._assign(values, item, "--set", k)
        # file references are pinned to absolute paths so the echo replays anywhere
        for key in ("potential_file", "initial_file"):
            if values.get(key):
                values[key] = str((Path(base_dir) / str(values[key])).resolve())
        try:
            cfg = cls(command=command, base_dir=base_dir, **values)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None
        cfg.validate()
        return cfg

    @classmethod
    def _assign(cls, values: dict, line: str, source: str, lineno: int) -> None:
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {line!r}", source, lineno)
        key, text = (s.strip() for s in line.split("=", 1))
        key = _ALIASES.get(key, key)
        if key not in cls.keys():
            raise ConfigError(f"unknown key {key!r}", source, lineno)
        parse = cls._PARSERS.get(key, str)
        try:
            values[key] = parse(text)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {exc}", source, lineno) from None

    def validate(self) -> None:
        def need(cond, msg):
            if not cond:
                raise ConfigError(msg)

        need(self.half_width > 0 and math.isfinite(self.half_width), "half_width must be > 0")
        need(self.boundary in ("dirichlet", "periodic"), "boundary must be dirichlet or periodic")
        if self.boundary == "dirichlet":
            need(self.n_points >= 5 and self.n_points % 2 == 1,
                 "dirichlet grids need an odd n_points >= 5")
        else:
            need(self.n_points >= 4 and self.n_points % 2 == 0,
                 "periodic grids need an even n_points >= 4")
        need(self.n_points <= 5001, "n_points above 5001 is outside the dense-matrix range")
        need(self.stencil_order in (2, 4, 6, 8), "stencil_order must be 2, 4, 6 or 8")
        need(self.hbar > 0 and self.mass > 0, "hbar and mass must be > 0")
        need(self.potential in POTENTIALS, f"potential must be one of {', '.join(POTENTIALS)}")
        need(self.omega > 0, "omega must be > 0")
        need(self.epsilon >= 0, "epsilon must be >= 0")
        if self.potential == "custom":
            need(bool(self.potential_expr) != bool(self.potential_file),
                 "custom potentials need exactly one of potential_expr or potential_file")
        need(self.t_final >= 0 and math.isfinite(self.t_final), "t_final must be >= 0")
        need(self.n_steps >= 1, "n_steps must be >= 1")
        need(self.initial_state in INITIAL_STATES,
             f"initial_state must be one of {', '.join(INITIAL_STATES)}")
        need(self.gaussian_width > 0, "gaussian_width must be > 0")
        need(self.eigenstate_index >= 0, "eigenstate_index must be >= 0")
        if self.initial_state == "file":
            need(bool(self.initial_file), "initial_state = file needs initial_file")
        need(math.isfinite(self.check_time), "check_time must be finite")
        for name in ("null_tol", "reality_tol", "unitarity_tol", "axiom_tol"):
            need(getattr(self, name) > 0, f"{name} must be > 0")

    # -- echo ---------------------------------------------------------------

    def to_dict(self) -> dict:
        d = {k: getattr(self, k) for k in ["command"] + self.keys()}
        d["checks"] = list(self.checks)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        d = dict(d)
        d["checks"] = tuple(d["checks"])
        return cls(**d)

    def to_text(self) -> str:
        lines = []
        for k in self.keys():
            v = getattr(self, k)
            if isinstance(v, tuple):
                v = ",".join(v)
            elif isinstance(v, bool):
                v = str(v).lower()
            elif isinstance(v, float):
                v = repr(v)
            lines.append(f"{k} = {v}")
        return "\n".join(lines) + "\n"

    # -- builders -----------------------------------------------------------

    def resolve(self, name: str) -> Path:
        p = Path(name)
        return p if p.is_absolute() else Path(self.base_dir) / p

    def grid(self) -> Grid:
        return Grid(self.n_points, self.half_width, Boundary(self.boundary))

    def constants(self) -> PhysicalConstants:
        return PhysicalConstants(self.hbar, self.mass)

    def potential_spec(self, grid: Grid) -> PotentialSpec:
        kind = self.potential
        if kind == "zero":
            return PotentialSpec(PotentialKind.ZERO)
        if kind == "harmonic":
            return PotentialSpec.harmonic(self.omega)
        if kind == "bender":
            return PotentialSpec.bender(self.epsilon)
        if kind == "imaginary_cubic":
            return PotentialSpec.imaginary_cubic()
        if self.potential_expr:
            expr = self.potential_expr
            try:
                code = compile(expr, "<potential_expr>", "eval")
                vals = eval(code, {"__builtins__": {}}, {**_EXPR_NAMESPACE, "x": grid.nodes})
                samples = np.broadcast_to(np.asarray(vals, dtype=complex), grid.nodes.shape)
            except Exception as exc:  # noqa: BLE001 - any failure is a config error
                raise ConfigError(f"cannot evaluate potential_expr {expr!r}: {exc}") from None
            return PotentialSpec.custom(samples=samples, label=expr)
        samples = read_complex_column_file(self.resolve(self.potential_file), grid)
        return PotentialSpec.custom(samples=samples, label=self.potential_file)

    def hamiltonian_spec(self) -> HamiltonianSpec:
        grid = self.grid()
        return HamiltonianSpec(grid, self.constants(), self.potential_spec(grid),
                               self.stencil_order)


def read_complex_column_file(path: Path, grid: Grid) -> np.ndarray:
    """Read one complex value per grid node from CSV rows ``re,im`` or ``x,re,im``.

    A non-numeric first row is treated as a header.
    """
    try:
        with open(path, newline="") as fh:
            rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    if rows:
        try:
            float(rows[0][0])
        except ValueError:
            rows = rows[1:]
    vals = []
    for lineno, r in enumerate(rows, 1):
        try:
            nums = [float(c) for c in r]
        except ValueError:
            raise ConfigError("non-numeric entry", str(path), lineno) from None
        if len(nums) == 2:
            vals.append(complex(nums[0], nums[1]))
        elif len(nums) == 3:
            vals.append(complex(nums[1], nums[2]))
        else:
            raise ConfigError("expected 2 (re, im) or 3 (x, re, im) columns", str(path), lineno)
    if len(vals) != grid.n_points:
        raise ConfigError(f"{len(vals)} rows but the grid has {grid.n_points} nodes", str(path))
    arr = np.array(vals)
    if not np.all(np.isfinite(arr)):
        raise ConfigError("non-finite values", str(path))
    return arr
