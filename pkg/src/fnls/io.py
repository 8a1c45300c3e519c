"""Binary field snapshots and flat key=value run configurations."""

from __future__ import annotations

import struct
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Any, Optional

import numpy as np

from .ground_state import InitKind, SolverConfig
from .params import Kind, ModelParams
from .spectral import Field, Grid

MAGIC = b"FNLS"
VERSION = 1
_HEADER = struct.Struct("<4sIIIIIdddB")
_KIND_BYTE = {Kind.ISOTROPIC: 0, Kind.ANISOTROPIC: 1}


class SnapshotError(ValueError):
    pass


class ConfigError(ValueError):
    pass


# --- snapshots -----------------------------------------------------------------


def snapshot_bytes(u: Field, params: ModelParams) -> bytes:
    g = u.grid
    head = _HEADER.pack(MAGIC, VERSION, g.d, g.m, g.nx, g.ny, g.lx, params.sigma, params.alpha, _KIND_BYTE[params.kind])
    body = np.ascontiguousarray(u.values, dtype="<c16").tobytes(order="C")
    return head + body


def write_snapshot(path, u: Field, params: ModelParams) -> None:
    Path(path).write_bytes(snapshot_bytes(u, params))


def parse_snapshot(data: bytes) -> tuple:
    if len(data) < _HEADER.size:
        raise SnapshotError(f"snapshot truncated: {len(data)} bytes, header needs {_HEADER.size}")
    magic, version, d, m, nx, ny, lx, sigma, alpha, kind = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise SnapshotError(f"bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise SnapshotError(f"unsupported snapshot version {version}")
    if kind not in (0, 1):
        raise SnapshotError(f"bad kind byte {kind}")
    try:
        grid = Grid(d=d, m=m, lx=lx, nx=nx, ny=ny)
    except ValueError as exc:
        raise SnapshotError(f"bad grid header: {exc}") from None
    expected = _HEADER.size + 16 * grid.size
    if len(data) != expected:
        raise SnapshotError(f"payload size {len(data)} bytes, expected {expected} for grid {grid.shape}")
    vals = np.frombuffer(data, dtype="<c16", offset=_HEADER.size).reshape(grid.shape).astype(complex)
    if not np.all(np.isfinite(vals)):
        raise SnapshotError("snapshot contains non-finite samples")
    meta = {"version": version, "sigma": sigma, "alpha": alpha, "kind": Kind.ANISOTROPIC if kind else Kind.ISOTROPIC}
    return Field(grid, vals), meta


def read_snapshot(path) -> tuple:
    """(Field, meta) from a snapshot file; raises SnapshotError on any format problem."""
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise SnapshotError(f"cannot read snapshot {path}: {exc}") from None
    return parse_snapshot(data)


# --- configs ----------------------------------------------------------------------

_REQUIRED = object()

# key -> (type, default); run-specific keys live under the run name
_COMMON = {
    "run": (str, _REQUIRED),
    "out": (str, "."),
    "seed": (int, 0),
    "model.d": (int, _REQUIRED),
    "model.m": (int, 1),
    "model.sigma": (float, _REQUIRED),
    "model.alpha": (float, _REQUIRED),
    "model.kind": (str, Kind.ISOTROPIC.value),
    "model.lam": (float, 1.0),
    "grid.lx": (float, 16.0),
    "grid.nx": (int, 128),
    "grid.ny": (int, 16),
    "solver.tol": (float, 1e-12),
    "solver.residual_tol": (float, 1e-8),
    "solver.max_iter": (int, 20000),
    "solver.tau": (float, 0.5),
    "solver.init": (str, InitKind.GAUSSIAN_YBROKEN.value),
    "solver.epsilon": (float, 0.1),
    "solver.width": (float, 1.0),
    "solver.path": (str, ""),
}

_RUN_KEYS = {
    "groundstate": {
        "groundstate.mode": (str, _REQUIRED),
        "groundstate.omega": (float, None),
        "groundstate.mass": (float, None),
        "groundstate.rho0": (float, None),
    },
    "scan": {
        "scan.axis": (str, _REQUIRED),
        "scan.lo": (float, _REQUIRED),
        "scan.hi": (float, _REQUIRED),
        "scan.resolution": (float, _REQUIRED),
        "scan.samples": (int, 8),
        "scan.mass": (float, 1.0),
    },
    "evolve": {
        "evolve.u0": (str, _REQUIRED),
        "evolve.path": (str, ""),
        "evolve.amplitude": (float, 0.5),
        "evolve.width": (float, 2.0),
        "evolve.epsilon": (float, 0.0),
        "evolve.mode_x": (int, 1),
        "evolve.mode_y": (int, 0),
        "evolve.dt": (float, _REQUIRED),
        "evolve.t_final": (float, _REQUIRED),
        "evolve.R": (float, None),
        "evolve.sample_every": (int, 10),
        "evolve.m_c": (float, None),
        "evolve.theorem_mode": (bool, False),
    },
    "gn": {
        "gn.samples": (int, 2000),
        "gn.check_samples": (int, 10000),
        "gn.scale_invariant": (bool, False),
    },
    "check": {
        "check.suite": (str, _REQUIRED),
    },
}

GROUNDSTATE_MODES = ("fixed-frequency", "normalized-sub", "normalized-local", "intercritical", "reference-rd")
_MODE_NEEDS = {
    "fixed-frequency": ("groundstate.omega",),
    "normalized-sub": ("groundstate.mass",),
    "normalized-local": ("groundstate.mass",),
    "intercritical": ("groundstate.mass",),
    "reference-rd": (),
}


def _convert(key: str, typ, raw: str):
    try:
        if typ is bool:
            low = raw.lower()
            if low not in ("true", "false", "1", "0"):
                raise ValueError(raw)
            return low in ("true", "1")
        if typ is int:
            return int(raw)
        if typ is float:
            return float(raw)
        return raw
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {raw!r} as {typ.__name__}") from None


def _render(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


@dataclass(frozen=True)
class RunConfig:
    run: str
    model: ModelParams
    grid: Grid
    solver: SolverConfig
    out: str = "."
    seed: int = 0
    # run-specific options, keyed without the run prefix
    options: tuple = ()

    def option(self, name: str, default: Any = None) -> Any:
        return dict(self.options).get(name, default)

    def require(self, name: str) -> Any:
        v = self.option(name)
        if v is None:
            raise ConfigError(f"missing required key {self.run}.{name}")
        return v

    def canonical(self) -> str:
        vals = {
            "run": self.run,
            "out": self.out,
            "seed": self.seed,
            "model.d": self.model.d,
            "model.m": self.model.m,
            "model.sigma": self.model.sigma,
            "model.alpha": self.model.alpha,
            "model.kind": self.model.kind.value,
            "model.lam": self.model.lam,
            "grid.lx": self.grid.lx,
            "grid.nx": self.grid.nx,
            "grid.ny": self.grid.ny,
        }
        for f in fields(SolverConfig):
            v = getattr(self.solver, f.name)
            vals[f"solver.{f.name}"] = v.value if isinstance(v, InitKind) else ("" if v is None else v)
        for k, v in self.options:
            if v is not None:
                vals[f"{self.run}.{k}"] = v
        return "".join(f"{k} = {_render(vals[k])}\n" for k in sorted(vals))


def parse_config(text: str, run: Optional[str] = None) -> RunConfig:
    """Parse flat ``key = value`` text; ``#`` starts a comment.

    ``run`` (from the command line) fills in or must match the ``run`` key.
    """
    raw: dict = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value, got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        if key in raw:
            raise ConfigError(f"line {lineno}: duplicate key {key}")
        raw[key] = value
    if run is not None:
        if "run" in raw and raw["run"] != run:
            raise ConfigError(f"config is for run={raw['run']}, command is {run}")
        raw["run"] = run
    run_name = raw.get("run")
    if run_name not in _RUN_KEYS:
        raise ConfigError(f"run must be one of {sorted(_RUN_KEYS)}, got {run_name!r}")
    schema = {**_COMMON, **_RUN_KEYS[run_name]}
    unknown = sorted(set(raw) - set(schema))
    if unknown:
        raise ConfigError(f"unknown key(s): {', '.join(unknown)}")
    vals = {}
    for key, (typ, default) in schema.items():
        if key in raw:
            vals[key] = _convert(key, typ, raw[key])
        elif default is _REQUIRED:
            raise ConfigError(f"missing required key {key}")
        else:
            vals[key] = default
    try:
        model = ModelParams(
            d=vals["model.d"], m=vals["model.m"], sigma=vals["model.sigma"], alpha=vals["model.alpha"],
            kind=Kind(vals["model.kind"]), lam=vals["model.lam"],
        )
        grid = Grid(d=model.d, m=model.m, lx=vals["grid.lx"], nx=vals["grid.nx"], ny=vals["grid.ny"])
        solver = SolverConfig(
            tol=vals["solver.tol"], residual_tol=vals["solver.residual_tol"], max_iter=vals["solver.max_iter"],
            tau=vals["solver.tau"], init=InitKind(vals["solver.init"]), epsilon=vals["solver.epsilon"],
            width=vals["solver.width"], path=vals["solver.path"] or None,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    prefix = run_name + "."
    options = tuple(sorted((k[len(prefix):], v) for k, v in vals.items() if k.startswith(prefix)))
    cfg = RunConfig(run_name, model, grid, solver, vals["out"], vals["seed"], options)
    if run_name == "groundstate":
        mode = cfg.option("mode")
        if mode not in GROUNDSTATE_MODES:
            raise ConfigError(f"groundstate.mode must be one of {', '.join(GROUNDSTATE_MODES)}, got {mode!r}")
        for key in _MODE_NEEDS[mode]:
            if vals[key] is None:
                raise ConfigError(f"missing required key {key} for mode {mode}")
    return cfg


def load_config(path, run: Optional[str] = None) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text, run)


def with_overrides(cfg: RunConfig, out: Optional[str] = None, seed: Optional[int] = None) -> RunConfig:
    return replace(cfg, out=cfg.out if out is None else out, seed=cfg.seed if seed is None else seed)


def write_report(path, items: dict) -> None:
    """Flat ``key = value`` text with round-trip float formatting."""
    Path(path).write_text("".join(f"{k} = {_render(v)}\n" for k, v in items.items()))


def read_report(path) -> dict:
    out = {}
    for line in Path(path).read_text().splitlines():
        if "=" in line:
            k, v = (s.strip() for s in line.split("=", 1))
            out[k] = v
    return out
