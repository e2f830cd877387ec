"""Command-line front end: ``qwall {fields,work,validate} --config FILE --out DIR``.

Scenarios are JSON documents (``"schema": "1"``)::

    {
      "schema": "1",
      "constants":  {"hbar": 1.0, "mu": 1.0},
      "geometry":   {"dimension": "1D", "size": 1.0, "speed": 0.0},
      "state":      {"coefficients": [{"mode": [1], "b": 1.0}]},
      "truncation": {"n_max": 64, "angular_max": 0},
      "grid":       {"points": [2048], "radial": "gauss"},
      "experiment": {"displacement": 1e-4, "speeds": [0.1], "truncations": [64, 128],
                     "rtol": 1e-10, "atol": 1e-12, "scaling": true},
      "output":     {"fields": "fields.csv", "report": "report.json",
                     "validation": "validation.json", "time": 0.0}
    }

Only ``geometry.dimension`` and ``state`` are required. The state is one of
``{"coefficients": [...]}``, ``{"eigenstate": [mode]}`` or
``{"random": {"n_modes": k, "seed": s, "max_radial": n}}``; complex
amplitudes are written ``[re, im]``. Unknown keys are rejected.

Every output file is computed in full, written to a temporary file in the
output directory and moved into place, so a failing run leaves no partial
output. Errors are reported on stderr as one JSON object.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
import tempfile
from dataclasses import dataclass, field, replace
from typing import Any

import numpy as np

from . import __version__
from .basis import DISK, SEGMENT, SPHERE, ModeSet, PhysicalConstants, WellGeometry, as_mode, canonical_dimension
from .density import (
    all_fields,
    disk_grid,
    segment_grid,
    sphere_grid,
    wall_force,
    wall_limits,
)
from .dynamics import SpectralState, energy_rate_initial, evolve, expected_energy, random_state
from .walllab import WorkExperiment, adiabatic_crosscheck, run_work_experiment

log = logging.getLogger("qwall")

SCHEMA = "1"
NORMALIZATION_TOL = 1e-12
FLOAT_FORMAT = ".17g"

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_CHECKS_FAILED = 3

DEFAULT_GRID = {SEGMENT: (2048,), DISK: (256, 128), SPHERE: (128, 64, 32)}


class ConfigError(ValueError):
    """Invalid scenario; ``path`` names the offending field (dotted)."""

    def __init__(self, message, path=None, line=None, column=None):
        super().__init__(message)
        self.path = path
        self.line = line
        self.column = column

    def record(self) -> dict:
        rec = {"error": "ConfigError", "message": str(self)}
        for key in ("path", "line", "column"):
            if getattr(self, key) is not None:
                rec[key] = getattr(self, key)
        return rec


# ---------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class StateSpec:
    kind: str
    coefficients: tuple = ()
    n_modes: int = 0
    seed: int = 0
    max_radial: int = 4


@dataclass(frozen=True)
class ExperimentSpec:
    displacement: float = 1e-4
    speeds: tuple[float, ...] = (0.1,)
    truncations: tuple[int, ...] | None = None
    rtol: float = 1e-10
    atol: float = 1e-12
    scaling: bool = True


@dataclass(frozen=True)
class OutputSpec:
    fields: str = "fields.csv"
    report: str = "report.json"
    validation: str = "validation.json"
    time: float = 0.0


@dataclass(frozen=True)
class ScenarioConfig:
    dimension: str
    state: StateSpec
    constants: PhysicalConstants = field(default_factory=PhysicalConstants)
    size: float = 1.0
    speed: float = 0.0
    n_max: int = 64
    angular_max: int = 0
    grid_points: tuple[int, ...] | None = None
    radial: str = "gauss"
    experiment: ExperimentSpec = field(default_factory=ExperimentSpec)
    output: OutputSpec = field(default_factory=OutputSpec)
    warnings: tuple[str, ...] = field(default=(), compare=False)

    @property
    def geometry(self) -> WellGeometry:
        return WellGeometry(self.dimension, self.size, self.speed)

    @property
    def truncations(self) -> tuple[int, ...]:
        return self.experiment.truncations or (self.n_max, 2 * self.n_max)

    @property
    def grid_shape(self) -> tuple[int, ...]:
        return self.grid_points or DEFAULT_GRID[self.dimension]


def _section(obj, path, allowed, required=()):
    if not isinstance(obj, dict):
        raise ConfigError(f"expected an object at {path or 'top level'}", path or None)
    for key in obj:
        if key not in allowed:
            where = f"{path}.{key}" if path else key
            raise ConfigError(f"unknown key {where!r}", where)
    for key in required:
        if key not in obj:
            where = f"{path}.{key}" if path else key
            raise ConfigError(f"missing required field {where!r}", where)
    return obj


def _number(obj, key, path, default, positive=False, nonneg=False):
    if key not in obj:
        return default
    val = obj[key]
    where = f"{path}.{key}"
    if isinstance(val, bool) or not isinstance(val, (int, float)) or not math.isfinite(val):
        raise ConfigError(f"{where} must be a finite number", where)
    if positive and val <= 0:
        raise ConfigError(f"{where} must be positive", where)
    if nonneg and val < 0:
        raise ConfigError(f"{where} must be non-negative", where)
    return float(val)


def _integer(obj, key, path, default, minimum=0):
    if key not in obj:
        return default
    val = obj[key]
    where = f"{path}.{key}"
    if isinstance(val, bool) or not isinstance(val, int) or val < minimum:
        raise ConfigError(f"{where} must be an integer >= {minimum}", where)
    return val


def _amplitude(val, where) -> complex:
    if isinstance(val, (int, float)) and not isinstance(val, bool):
        return complex(val)
    if (isinstance(val, list) and len(val) == 2
            and all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in val)):
        return complex(val[0], val[1])
    raise ConfigError(f"{where} must be a number or [re, im]", where)


def _mode(dimension, val, where):
    try:
        raw = tuple(val) if isinstance(val, list) else val
        if isinstance(raw, tuple) and not all(isinstance(x, int) and not isinstance(x, bool) for x in raw):
            raise ValueError("mode indices must be integers")
        return as_mode(dimension, raw)
    except (TypeError, ValueError) as err:
        raise ConfigError(f"{where}: {err}", where) from None


def _parse_state(obj, dimension, warnings):
    path = "state"
    _section(obj, path, ("coefficients", "eigenstate", "random"))
    kinds = [k for k in ("coefficients", "eigenstate", "random") if k in obj]
    if len(kinds) != 1:
        raise ConfigError("state needs exactly one of coefficients, eigenstate, random", path)
    kind = kinds[0]
    if kind == "eigenstate":
        return StateSpec("eigenstate", ((_mode(dimension, obj[kind], "state.eigenstate"), 1 + 0j),))
    if kind == "random":
        sub = _section(obj[kind], "state.random", ("n_modes", "seed", "max_radial"), ("n_modes",))
        return StateSpec(
            "random",
            n_modes=_integer(sub, "n_modes", "state.random", 0, 1),
            seed=_integer(sub, "seed", "state.random", 0),
            max_radial=_integer(sub, "max_radial", "state.random", 4, 1),
        )
    items = obj[kind]
    if not isinstance(items, list) or not items:
        raise ConfigError("state.coefficients must be a non-empty list", "state.coefficients")
    coeffs = {}
    for i, item in enumerate(items):
        where = f"state.coefficients[{i}]"
        _section(item, where, ("mode", "b"), ("mode", "b"))
        q = _mode(dimension, item["mode"], f"{where}.mode")
        if q in coeffs:
            raise ConfigError(f"duplicate mode {list(q)}", f"{where}.mode")
        coeffs[q] = _amplitude(item["b"], f"{where}.b")
    norm = sum(abs(b) ** 2 for b in coeffs.values())
    if norm == 0:
        raise ConfigError("state.coefficients are all zero", "state.coefficients")
    if abs(norm - 1.0) > NORMALIZATION_TOL:
        warnings.append(f"state renormalized (sum |b|^2 was {norm!r})")
        scale = 1.0 / math.sqrt(norm)
        coeffs = {q: b * scale for q, b in coeffs.items()}
    return StateSpec("coefficients", tuple(coeffs.items()))


def config_from_dict(doc: dict) -> ScenarioConfig:
    """Validate a decoded scenario document and apply defaults."""
    warnings: list[str] = []
    _section(doc, "", ("schema", "constants", "geometry", "state", "truncation", "grid", "experiment", "output"),
             ("geometry", "state"))
    if doc.get("schema", SCHEMA) != SCHEMA:
        raise ConfigError(f"unsupported schema {doc.get('schema')!r}; expected {SCHEMA!r}", "schema")

    c = _section(doc.get("constants", {}), "constants", ("hbar", "mu"))
    constants = PhysicalConstants(_number(c, "hbar", "constants", 1.0, positive=True),
                                  _number(c, "mu", "constants", 1.0, positive=True))

    g = _section(doc["geometry"], "geometry", ("dimension", "size", "speed"), ("dimension",))
    try:
        dimension = canonical_dimension(g["dimension"])
    except ValueError:
        raise ConfigError(f"unknown dimension {g['dimension']!r}; use 1D, 2D or 3D", "geometry.dimension") from None
    size = _number(g, "size", "geometry", 1.0, positive=True)
    speed = _number(g, "speed", "geometry", 0.0)

    state = _parse_state(doc["state"], dimension, warnings)

    t = _section(doc.get("truncation", {}), "truncation", ("n_max", "angular_max"))
    n_max = _integer(t, "n_max", "truncation", 64, 1)
    angular_max = _integer(t, "angular_max", "truncation", 0)
    if dimension == SEGMENT and angular_max:
        raise ConfigError("truncation.angular_max must be 0 for the segment", "truncation.angular_max")
    ms = ModeSet.build(dimension, n_max, angular_max)
    for q, _ in state.coefficients:
        if q not in ms:
            raise ConfigError(f"mode {list(q)} lies outside the truncation", "state")
    if state.kind == "random" and state.n_modes > sum(1 for q in ms if _radial(dimension, q) <= state.max_radial):
        raise ConfigError("state.random.n_modes exceeds the available modes", "state.random.n_modes")

    gr = _section(doc.get("grid", {}), "grid", ("points", "radial"))
    points = None
    if "points" in gr:
        pts = gr["points"]
        ndim = len(DEFAULT_GRID[dimension])
        if (not isinstance(pts, list) or len(pts) != ndim
                or not all(isinstance(p, int) and not isinstance(p, bool) and p >= 2 for p in pts)):
            raise ConfigError(f"grid.points must be a list of {ndim} integers >= 2", "grid.points")
        points = tuple(pts)
    radial = gr.get("radial", "gauss")
    if radial not in ("gauss", "uniform"):
        raise ConfigError("grid.radial must be 'gauss' or 'uniform'", "grid.radial")

    e = _section(doc.get("experiment", {}), "experiment",
                 ("displacement", "speeds", "truncations", "rtol", "atol", "scaling"))
    speeds = e.get("speeds", [0.1])
    if (not isinstance(speeds, list) or not speeds
            or not all(isinstance(v, (int, float)) and not isinstance(v, bool) and v != 0 and math.isfinite(v)
                       for v in speeds)):
        raise ConfigError("experiment.speeds must be a non-empty list of nonzero numbers", "experiment.speeds")
    truncs = e.get("truncations")
    if truncs is not None:
        if (not isinstance(truncs, list) or not truncs
                or not all(isinstance(n, int) and not isinstance(n, bool) and n >= 1 for n in truncs)):
            raise ConfigError("experiment.truncations must be a list of positive integers",
                              "experiment.truncations")
        truncs = tuple(truncs)
    scaling = e.get("scaling", True)
    if not isinstance(scaling, bool):
        raise ConfigError("experiment.scaling must be true or false", "experiment.scaling")
    displacement = _number(e, "displacement", "experiment", 1e-4, nonneg=True)
    if displacement > 1e-3 * size:
        raise ConfigError("experiment.displacement must not exceed 1e-3 * geometry.size",
                          "experiment.displacement")
    experiment = ExperimentSpec(
        displacement=displacement,
        speeds=tuple(float(v) for v in speeds),
        truncations=truncs,
        rtol=_number(e, "rtol", "experiment", 1e-10, positive=True),
        atol=_number(e, "atol", "experiment", 1e-12, positive=True),
        scaling=scaling,
    )

    o = _section(doc.get("output", {}), "output", ("fields", "report", "validation", "time"))
    names = {}
    for key in ("fields", "report", "validation"):
        val = o.get(key, getattr(OutputSpec, key))
        if not isinstance(val, str) or not val or os.path.basename(val) != val:
            raise ConfigError(f"output.{key} must be a plain file name", f"output.{key}")
        names[key] = val
    output = OutputSpec(time=_number(o, "time", "output", 0.0, nonneg=True), **names)
    try:
        WellGeometry(dimension, size, speed).check_window(0.0, output.time)
    except ValueError as err:
        raise ConfigError(str(err), "output.time") from None

    return ScenarioConfig(
        dimension=dimension, state=state, constants=constants, size=size, speed=speed,
        n_max=n_max, angular_max=angular_max, grid_points=points, radial=radial,
        experiment=experiment, output=output, warnings=tuple(warnings),
    )


def _radial(dimension, mode):
    return mode[1] if dimension == DISK else mode[0]


def parse_config(text: str) -> ScenarioConfig:
    """Parse and validate scenario text.

    Raises
    ------
    ConfigError
        With ``line``/``column`` for malformed JSON, ``path`` for invalid
        fields.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as err:
        raise ConfigError(f"malformed JSON: {err.msg}", line=err.lineno, column=err.colno) from None
    return config_from_dict(doc)


def config_to_dict(cfg: ScenarioConfig) -> dict:
    """Fully explicit document; ``parse_config(dump_config(c)) == c``."""
    if cfg.state.kind == "coefficients":
        state = {"coefficients": [{"mode": list(q), "b": [b.real, b.imag]} for q, b in cfg.state.coefficients]}
    elif cfg.state.kind == "eigenstate":
        state = {"eigenstate": list(cfg.state.coefficients[0][0])}
    else:
        state = {"random": {"n_modes": cfg.state.n_modes, "seed": cfg.state.seed,
                            "max_radial": cfg.state.max_radial}}
    exp = cfg.experiment
    experiment = {"displacement": exp.displacement, "speeds": list(exp.speeds),
                  "rtol": exp.rtol, "atol": exp.atol, "scaling": exp.scaling}
    if exp.truncations is not None:
        experiment["truncations"] = list(exp.truncations)
    grid = {"radial": cfg.radial}
    if cfg.grid_points is not None:
        grid["points"] = list(cfg.grid_points)
    return {
        "schema": SCHEMA,
        "constants": {"hbar": cfg.constants.hbar, "mu": cfg.constants.mu},
        "geometry": {"dimension": cfg.dimension, "size": cfg.size, "speed": cfg.speed},
        "state": state,
        "truncation": {"n_max": cfg.n_max, "angular_max": cfg.angular_max},
        "grid": grid,
        "experiment": experiment,
        "output": {"fields": cfg.output.fields, "report": cfg.output.report,
                   "validation": cfg.output.validation, "time": cfg.output.time},
    }


def dump_config(cfg: ScenarioConfig) -> str:
    return json.dumps(config_to_dict(cfg), indent=2) + "\n"


# ---------------------------------------------------------------------------
# scenario execution


def build_state(cfg: ScenarioConfig, seed: int | None = None) -> SpectralState:
    """Initial state of the scenario; ``seed`` overrides ``state.random.seed``."""
    ms = ModeSet.build(cfg.dimension, cfg.n_max, cfg.angular_max)
    if cfg.state.kind == "random":
        rng = np.random.default_rng(cfg.state.seed if seed is None else seed)
        pool = [q for q in ms if _radial(cfg.dimension, q) <= cfg.state.max_radial]
        return random_state(ms, cfg.state.n_modes, rng, modes=pool, constants=cfg.constants)
    return SpectralState.from_modes(ms, dict(cfg.state.coefficients), 0.0, cfg.constants)


def _grid(cfg: ScenarioConfig, t: float):
    size = cfg.geometry.size(t)
    pts = cfg.grid_shape
    if cfg.dimension == SEGMENT:
        return segment_grid(size, *pts)
    if cfg.dimension == DISK:
        return disk_grid(size, *pts, radial=cfg.radial)
    return sphere_grid(size, *pts, radial=cfg.radial)


_COORDS = {SEGMENT: ("x",), DISK: ("r", "phi"), SPHERE: ("r", "theta", "phi")}


def field_columns(dimension: str) -> list[str]:
    """CSV header: coordinates, then densities, then flux frame components."""
    coords = _COORDS[dimension]
    cols = list(coords) + ["rho_d", "rho1_re", "rho1_im", "rho2", "rho3"]
    if dimension == SEGMENT:
        return cols + ["flux2", "flux3"]
    return cols + [f"{f}_{c}" for f in ("flux2", "flux3") for c in coords]


def _fmt(x) -> str:
    return format(float(x), FLOAT_FORMAT)


def render_fields(cfg: ScenarioConfig, seed: int | None = None) -> tuple[str, dict]:
    """CSV text of every density and flux, plus a metadata record."""
    state = build_state(cfg, seed)
    geo = cfg.geometry
    t = cfg.output.time
    if t > 0:
        if geo.wall_speed == 0.0:
            state = state.replace(time=t)
        else:
            state = evolve(state, geo, t, richardson=False).final
    grid = _grid(cfg, t)
    f = all_fields(state, geo, grid)
    cols = [*grid.points, f["rho_d"], f["rho1"].real, f["rho1"].imag, f["rho2"], f["rho3"], *f["flux2"], *f["flux3"]]
    data = np.column_stack(cols)
    lines = [",".join(field_columns(cfg.dimension))]
    lines.extend(",".join(_fmt(x) for x in row) for row in data)
    meta = {
        "schema": SCHEMA,
        "kind": "fields",
        "dimension": cfg.dimension,
        "time": t,
        "size": geo.size(t),
        "grid": {"shape": list(grid.shape), "radial": grid.radial_rule},
        "columns": field_columns(cfg.dimension),
        "expected_energy": expected_energy(state, geo),
        "warnings": list(cfg.warnings),
    }
    return "\n".join(lines) + "\n", meta


def render_report(cfg: ScenarioConfig, seed: int | None = None) -> dict:
    state = build_state(cfg, seed)
    amps = {q: complex(b) for q, b in zip(state.mode_set.modes, state.coefficients) if b != 0}
    exp = WorkExperiment(
        geometry=WellGeometry(cfg.dimension, cfg.size, 0.0),
        amplitudes=amps,
        displacement=cfg.experiment.displacement,
        speeds=cfg.experiment.speeds,
        truncations=cfg.truncations,
        rtol=cfg.experiment.rtol,
        atol=cfg.experiment.atol,
        angular_max=cfg.angular_max,
        constants=cfg.constants,
        scaling=cfg.experiment.scaling,
    )
    report = {"schema": SCHEMA}
    report.update(run_work_experiment(exp).to_dict())
    report["warnings"] = list(cfg.warnings)
    return report


def _check(name, value, tol, passed=None):
    passed = bool(value <= tol) if passed is None else passed
    return {"name": name, "value": float(value), "tolerance": tol, "passed": passed}


def render_validation(cfg: ScenarioConfig, seed: int | None = None) -> dict:
    """Invariant suite on the scenario's initial state in a static well."""
    state = build_state(cfg, seed)
    geo = WellGeometry(cfg.dimension, cfg.size, 0.0)
    grid = _grid(cfg, 0.0)
    f = all_fields(state, geo, grid)
    energy = expected_energy(state, geo)
    escale = max(abs(energy), 1.0)
    limits = wall_limits(state, geo)
    force = wall_force(state, geo)
    quad = wall_force(state, geo, method="quadrature")
    v = cfg.speed or 0.1
    rate = energy_rate_initial(state, geo.with_speed(v))
    checks = [
        _check("integral_rho_d_minus_1", abs(grid.integrate(f["rho_d"]) - 1.0), 1e-8),
        _check("integral_rho2_minus_energy", abs(grid.integrate(f["rho2"]) - energy) / escale, 1e-8),
        _check("integral_rho3_minus_energy", abs(grid.integrate(f["rho3"]) - energy) / escale, 1e-8),
        _check("integral_rho1_imag", abs(grid.integrate(f["rho1"].imag)) / escale, 1e-8),
        _check("wall_rho_d", limits["rho_d"], 1e-12),
        _check("wall_rho2", limits["rho2"], 1e-12),
        _check("rho3_min", -min(float(np.min(f["rho3"])), 0.0), 0.0),
        _check("force_closed_vs_quadrature", abs(force - quad) / max(force, 1e-300), 1e-8),
        _check("rate_plus_force_times_speed", abs(rate + force * v) / max(abs(force * v), 1e-300), 1e-10),
    ]
    live = [q for q, b in zip(state.mode_set.modes, state.coefficients) if b != 0]
    for q in live:
        rep = adiabatic_crosscheck(geo, q, cfg.constants)
        checks.append(_check(f"adiabatic_{'_'.join(map(str, q))}", rep.relative_error, 1e-10))
    return {
        "schema": SCHEMA,
        "kind": "validation",
        "dimension": cfg.dimension,
        "expected_energy": energy,
        "force": force,
        "passed": all(c["passed"] for c in checks),
        "checks": checks,
        "warnings": list(cfg.warnings),
    }


def _json_text(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


def write_atomic(outdir: str, files: dict[str, str]) -> list[str]:
    """Write every ``{name: text}`` into ``outdir`` or nothing at all."""
    if not os.path.isdir(outdir):
        raise FileNotFoundError(f"output directory {outdir!r} does not exist")
    temps = []
    try:
        for name, text in files.items():
            fd, tmp = tempfile.mkstemp(prefix=f".{name}.", dir=outdir)
            temps.append((tmp, os.path.join(outdir, name)))
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
    except BaseException:
        for tmp, _ in temps:
            if os.path.exists(tmp):
                os.unlink(tmp)
        raise
    for tmp, final in temps:
        os.replace(tmp, final)
    return [final for _, final in temps]


def run(command: str, cfg: ScenarioConfig, outdir: str, seed: int | None = None) -> tuple[int, list[str]]:
    """Execute one subcommand; returns ``(exit status, written paths)``."""
    if not os.path.isdir(outdir):
        raise FileNotFoundError(f"output directory {outdir!r} does not exist")
    status = EXIT_OK
    if command == "fields":
        csv_text, meta = render_fields(cfg, seed)
        stem = os.path.splitext(cfg.output.fields)[0]
        files = {cfg.output.fields: csv_text, f"{stem}.meta.json": _json_text(meta)}
    elif command == "work":
        files = {cfg.output.report: _json_text(render_report(cfg, seed))}
    elif command == "validate":
        record = render_validation(cfg, seed)
        files = {cfg.output.validation: _json_text(record)}
        if not record["passed"]:
            status = EXIT_CHECKS_FAILED
    else:
        raise ValueError(f"unknown command {command!r}")
    return status, write_atomic(outdir, files)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qwall", description="Energy densities and moving-wall work in infinite wells.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("fields", "evaluate densities and fluxes on a grid and write CSV"),
        ("work", "run the moving-wall work experiment and write a JSON report"),
        ("validate", "run the invariant suite on the scenario state"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="scenario JSON file")
        p.add_argument("--out", required=True, help="existing output directory")
        p.add_argument("--seed", type=int, default=None, help="seed for random states (overrides the config)")
        p.add_argument("--quiet", action="store_true", help="suppress the summary on stdout")
    return parser


def _fail(record: dict, code: int) -> int:
    sys.stderr.write(json.dumps(record, sort_keys=True) + "\n")
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.seed is not None and not 0 <= args.seed < 2**64:
        return _fail({"error": "ConfigError", "message": "--seed must be an unsigned 64-bit integer",
                      "path": "--seed"}, EXIT_CONFIG)
    logging.basicConfig(level=logging.ERROR if args.quiet else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        with open(args.config, encoding="utf-8") as fh:
            text = fh.read()
        cfg = parse_config(text)
    except ConfigError as err:
        rec = err.record()
        rec["config"] = args.config
        return _fail(rec, EXIT_CONFIG)
    except OSError as err:
        return _fail({"error": type(err).__name__, "message": str(err), "config": args.config}, EXIT_CONFIG)
    for w in cfg.warnings:
        log.warning(w)
    try:
        status, paths = run(args.command, cfg, args.out, args.seed)
    except Exception as err:  # surfaced as a machine-readable record
        rec = {"error": type(err).__name__, "message": str(err), "command": args.command, "config": args.config}
        for attr in ("speed", "truncation", "t_reached"):
            if hasattr(err, attr):
                rec[attr] = getattr(err, attr)
        return _fail(rec, EXIT_FAILURE)
    if not args.quiet:
        for p in paths:
            print(p)
        if status == EXIT_CHECKS_FAILED:
            print("validation: some checks failed")
    return status


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
