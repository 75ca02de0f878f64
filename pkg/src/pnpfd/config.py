"""JSON run configuration.

Example::

    {
      "nx": 108, "ny": 108, "dt": 0.01, "T": 1.0,
      "species": [
        {"name": "p", "z": 1, "init": "example2_p"},
        {"name": "n", "z": -1, "init": "example2_n"}
      ]
    }

Everything else has a default; :func:`serialize_config` writes the fully
expanded document. Unknown keys are rejected.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Any

import jsonschema

from . import cases, mms
from .grid import Grid, make_grid
from .linsolve import METHODS, GaugeSpec, SolverOptions
from .stepper import SourceSet, Species

__all__ = [
    "ConfigError",
    "SpeciesConfig",
    "GaugeConfig",
    "SolverConfig",
    "OutputConfig",
    "StudyConfig",
    "RunConfig",
    "Problem",
    "parse_config",
    "load_config",
    "serialize_config",
    "build_problem",
]

BUILTIN_INITS = ("example2_p", "example2_n", "mms_p", "mms_n")


class ConfigError(ValueError):
    pass


_POS = {"type": "number", "exclusiveMinimum": 0}

SCHEMA: dict[str, Any] = {
    "type": "object",
    "additionalProperties": False,
    "required": ["nx", "ny", "dt", "T"],
    "properties": {
        "domain": {"type": "array", "items": {"type": "number"}, "minItems": 4, "maxItems": 4},
        "nx": {"type": "integer", "minimum": 2},
        "ny": {"type": "integer", "minimum": 2},
        "dt": _POS,
        "T": {"type": "number", "minimum": 0},
        "mode": {"enum": ["plain", "mms"]},
        "species": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["name", "z", "init"],
                "properties": {
                    "name": {"type": "string", "minLength": 1},
                    "z": {"type": "integer"},
                    "init": {"oneOf": [{"enum": list(BUILTIN_INITS)}, {"type": "number"}]},
                },
            },
        },
        "gauge": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "cell": {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 2, "maxItems": 2},
                "mode": {"enum": ["zero", "exact"]},
            },
        },
        "solver": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"method": {"enum": list(METHODS)}, "tol": _POS},
        },
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "directory": {"type": "string", "minLength": 1},
                "snapshot_stride": {"type": "integer", "minimum": 0},
                "diagnostics_stride": {"type": "integer", "minimum": 1},
            },
        },
        "study": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "meshes": {"type": "array", "items": {"type": "integer", "minimum": 2}, "minItems": 2},
                "dts": {"type": "array", "items": _POS, "minItems": 2},
                "reference": {"enum": ["self", "exact"]},
                "ref_factor": {"type": "integer", "minimum": 2},
            },
        },
    },
}


@dataclass(frozen=True)
class SpeciesConfig:
    name: str
    z: int
    init: str | float


@dataclass(frozen=True)
class GaugeConfig:
    cell: tuple[int, int] = (1, 1)
    mode: str = "zero"


@dataclass(frozen=True)
class SolverConfig:
    method: str = "auto"
    tol: float = 1e-12


@dataclass(frozen=True)
class OutputConfig:
    directory: str = "out"
    snapshot_stride: int = 10
    diagnostics_stride: int = 1


@dataclass(frozen=True)
class StudyConfig:
    meshes: tuple[int, ...] = (10, 20, 40, 80)
    dts: tuple[float, ...] = (1 / 40, 1 / 80, 1 / 160, 1 / 320)
    reference: str = "self"
    ref_factor: int = 16


@dataclass(frozen=True)
class RunConfig:
    nx: int
    ny: int
    dt: float
    T: float
    domain: tuple[float, float, float, float] = (0.0, 1.0, 0.0, 1.0)
    mode: str = "plain"
    species: tuple[SpeciesConfig, ...] = ()
    gauge: GaugeConfig = field(default_factory=GaugeConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    study: StudyConfig = field(default_factory=StudyConfig)


def _path(err: jsonschema.ValidationError) -> str:
    parts = [str(p) for p in err.absolute_path]
    return ".".join(parts) if parts else "<root>"


def parse_config(text: str) -> RunConfig:
    """Parse and validate a JSON document, filling defaults."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}") from exc
    errors = sorted(jsonschema.Draft202012Validator(SCHEMA).iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        raise ConfigError("; ".join(f"{_path(e)}: {e.message}" for e in errors))
    return _from_doc(doc)


def _from_doc(doc: dict) -> RunConfig:
    mode = doc.get("mode", "plain")
    a, b, c, d = (float(v) for v in doc.get("domain", (0.0, 1.0, 0.0, 1.0)))
    if not (b > a and d > c):
        raise ConfigError("domain: need [a, b, c, d] with b > a and d > c")
    if "species" in doc:
        species = tuple(
            SpeciesConfig(s["name"], s["z"], s["init"] if isinstance(s["init"], str) else float(s["init"]))
            for s in doc["species"]
        )
    elif mode == "mms":
        species = (SpeciesConfig("p", 1, "mms_p"), SpeciesConfig("n", -1, "mms_n"))
    else:
        raise ConfigError("species: required in plain mode")
    names = [s.name for s in species]
    if len(set(names)) != len(names):
        raise ConfigError(f"species: duplicate names {names}")
    for i, s in enumerate(species):
        if s.z == 0:
            raise ConfigError(f"species.{i}.z: valence must be non-zero")
    g = doc.get("gauge", {})
    gauge = GaugeConfig(tuple(g.get("cell", (1, 1))), g.get("mode", "exact" if mode == "mms" else "zero"))
    if gauge.mode == "exact" and mode != "mms":
        raise ConfigError("gauge.mode: 'exact' needs mode 'mms'")
    nx, ny = doc["nx"], doc["ny"]
    j, k = gauge.cell
    if not (1 <= j <= nx and 1 <= k <= ny) or not (j in (1, nx) or k in (1, ny)):
        raise ConfigError(f"gauge.cell: {list(gauge.cell)} is not a boundary cell of the {nx} x {ny} grid")
    s = doc.get("solver", {})
    o = doc.get("output", {})
    st = doc.get("study", {})
    study = StudyConfig(
        meshes=tuple(st.get("meshes", StudyConfig.meshes)),
        dts=tuple(float(v) for v in st.get("dts", StudyConfig.dts)),
        reference=st.get("reference", StudyConfig.reference),
        ref_factor=st.get("ref_factor", StudyConfig.ref_factor),
    )
    return RunConfig(
        nx=nx,
        ny=ny,
        dt=float(doc["dt"]),
        T=float(doc["T"]),
        domain=(a, b, c, d),
        mode=mode,
        species=species,
        gauge=gauge,
        solver=SolverConfig(s.get("method", "auto"), float(s.get("tol", 1e-12))),
        output=OutputConfig(
            o.get("directory", OutputConfig.directory),
            o.get("snapshot_stride", OutputConfig.snapshot_stride),
            o.get("diagnostics_stride", OutputConfig.diagnostics_stride),
        ),
        study=study,
    )


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def serialize_config(config: RunConfig) -> str:
    """Fully expanded JSON; ``parse_config(serialize_config(c)) == c``."""
    return json.dumps(asdict(config), indent=2)


@dataclass(frozen=True)
class Problem:
    grid: Grid
    species: tuple[Species, ...]
    gauge: GaugeSpec
    sources: SourceSet | None
    solver: SolverOptions


def _initial(init, grid: Grid):
    if isinstance(init, str):
        func = {
            "example2_p": cases.example2_p,
            "example2_n": cases.example2_n,
            "mms_p": lambda x, y: mms.exact_p(0.0, x, y),
            "mms_n": lambda x, y: mms.exact_n(0.0, x, y),
        }[init]
    else:
        func = cases.constant(init)
    return grid.sample(func)


def build_problem(config: RunConfig, nx: int | None = None, ny: int | None = None) -> Problem:
    """Grid, initial species, gauge, sources and solver options for a config."""
    grid = make_grid(*config.domain, nx or config.nx, ny or config.ny)
    species = tuple(Species(s.name, s.z, _initial(s.init, grid)) for s in config.species)
    sources = None
    if config.mode == "mms":
        sources = mms.POLYNOMIAL_CASE.source_set()
    if config.gauge.mode == "exact":
        gauge = mms.POLYNOMIAL_CASE.gauge(grid, config.gauge.cell)
    else:
        gauge = GaugeSpec(pin_cell=config.gauge.cell, pin_value=0.0)
    solver = SolverOptions(method=config.solver.method, tol=config.solver.tol)
    return Problem(grid, species, gauge, sources, solver)
