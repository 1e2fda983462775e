from __future__ import annotations

import argparse
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from .algebra import AlgebraError
from .balls import BallError, BallFamily, content_upper_bound, growth_process, sample_trace
from .config import Settings, SettingsError, load_settings
from .mesh import DomainSpec, SingularitySpec, SolverError
from .solver import (
    DEFAULT_TIMES,
    EnergyReport,
    IncompatibleTopology,
    MonotonicityViolation,
    NonConvergence,
    RelaxConfig,
    renormalised_energy,
    sweep_positions,
    synharmony_estimate,
)
from .targets import Loop, target_for
from .topology import (
    BoundaryTopology,
    HomotopyClass,
    ManifoldDescriptor,
    TopologyError,
    homotopy_class,
    is_topological_resolution,
    singular_energy_of_boundary,
    table_report,
)
from .utils import emit, energy_text, parse_float_list, render_csv, significant

LOGGER = logging.getLogger(__name__)

COMMANDS = ("table", "resolve", "energy", "balls", "synharmony")
FORMATS = ("text", "csv", "json")
ENERGY_KEYS = {"domain", "target", "boundary_data", "singularities", "rho_schedule", "h", "mode", "sweep", "solver"}
SINGULARITY_KEYS = {"x", "y", "class", "phase", "conjugator"}
LOOP_KEYS = {"class", "phase", "conjugator"}
SWEEP_KEYS = {"index", "axis", "range", "steps"}
SOLVER_KEYS = {"tol", "max_sweeps", "restarts", "omega", "phase_samples", "seed"}
BALLS_KEYS = {"balls", "t_max", "samples"}
ENERGY_HEADER = ("record", "rho", "energy", "A", "W", "residual", "singularity", "flux_x", "flux_y", "a_x", "a_y")

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_INCOMPATIBLE = 2
EXIT_NONCONVERGENCE = 3


class ConfigInvalid(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    params: Dict[str, Any] = field(default_factory=dict)
    out: Optional[Path] = None
    format: str = "text"
    settings: Settings = field(default_factory=Settings)

    def __post_init__(self) -> None:
        if self.command not in COMMANDS:
            raise ConfigInvalid(f"Unknown command {self.command!r}")
        if self.format not in FORMATS:
            raise ConfigInvalid(f"Unknown format {self.format!r}")


def _check_keys(section: str, payload: Any, allowed: set) -> Dict[str, Any]:
    if not isinstance(payload, dict):
        raise ConfigInvalid(f"{section} must be a JSON object")
    unknown = sorted(set(payload) - allowed)
    if unknown:
        raise ConfigInvalid(f"Unknown field(s) in {section}: {', '.join(unknown)}")
    return payload


def _read_json(path: Path) -> Any:
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigInvalid(f"Cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigInvalid(f"Config {path} is not valid JSON: {exc}") from exc
    return payload


def _load_json(path: Path) -> Dict[str, Any]:
    payload = _read_json(path)
    if not isinstance(payload, dict):
        raise ConfigInvalid("Config must be a JSON object")
    return payload


def _manifold(raw: Any) -> ManifoldDescriptor:
    if not isinstance(raw, str):
        raise ConfigInvalid("Manifold must be a string")
    try:
        return ManifoldDescriptor.parse(raw)
    except TopologyError as exc:
        raise ConfigInvalid(str(exc)) from exc


def _class(manifold: ManifoldDescriptor, raw: Any) -> HomotopyClass:
    try:
        return homotopy_class(manifold, raw)
    except (TopologyError, TypeError, ValueError) as exc:
        raise ConfigInvalid(f"Invalid class {raw!r} on {manifold.label}: {exc}") from exc


def parse_class_tokens(manifold: ManifoldDescriptor, raw: Optional[str]) -> List[HomotopyClass]:
    """Comma-separated class tokens; lattice vectors use `a:b`."""
    if not raw:
        return []
    return [_class(manifold, token.strip()) for token in raw.split(",") if token.strip()]


def _number(kind: type, raw: Any, name: str) -> Any:
    if isinstance(raw, bool):
        raise ConfigInvalid(f"{name} must be a number, got {raw!r}")
    try:
        return kind(raw)
    except (TypeError, ValueError) as exc:
        raise ConfigInvalid(f"{name} must be a number, got {raw!r}") from exc


def _loop(manifold: ManifoldDescriptor, spec: Any, section: str, allowed: set = LOOP_KEYS) -> Loop:
    if not isinstance(spec, dict):
        spec = {"class": spec}
    spec = _check_keys(section, spec, allowed)
    if "class" not in spec:
        raise ConfigInvalid(f"{section} needs a class")
    target = target_for(manifold)
    conjugator = _number(int, spec.get("conjugator", 0), f"{section}.conjugator")
    phase = _number(float, spec.get("phase", 0.0), f"{section}.phase")
    charge = _class(manifold, spec["class"])
    if conjugator not in target.conjugators(charge.class_id):
        raise ConfigInvalid(f"{section}: conjugator {conjugator} does not give a distinct geodesic")
    return target.geodesic(charge, phase, conjugator)


def _domain(payload: Dict[str, Any], manifold: ManifoldDescriptor) -> DomainSpec:
    raw = payload.get("domain", "disk")
    polygon = None
    if raw != "disk":
        raw = _check_keys("domain", raw, {"polygon"})
        try:
            polygon = tuple((float(x), float(y)) for x, y in raw["polygon"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigInvalid("domain.polygon must be a list of [x, y] pairs") from exc
    singularities = []
    for idx, item in enumerate(payload.get("singularities", [])):
        section = f"singularities[{idx}]"
        item = _check_keys(section, item, SINGULARITY_KEYS)
        if "x" not in item or "y" not in item:
            raise ConfigInvalid(f"{section} needs x and y")
        loop = _loop(manifold, item, section, SINGULARITY_KEYS)
        center = (_number(float, item["x"], f"{section}.x"), _number(float, item["y"], f"{section}.y"))
        singularities.append(SingularitySpec(center, loop.homotopy_class, loop))
    h = _number(float, payload.get("h", 1.0 / 128.0), "h")
    schedule = payload.get("rho_schedule")
    try:
        rho = min(float(r) for r in schedule) if schedule else 0.2
    except (TypeError, ValueError) as exc:
        raise ConfigInvalid("rho_schedule must be a list of numbers") from exc
    try:
        return DomainSpec(tuple(singularities), rho, h, polygon)
    except SolverError as exc:
        raise ConfigInvalid(str(exc)) from exc


def _relax_config(settings: Settings, payload: Dict[str, Any]) -> RelaxConfig:
    solver = _check_keys("solver", payload.get("solver", {}), SOLVER_KEYS)
    return RelaxConfig.from_settings(settings, **solver)


def _energy_rows(report: EnergyReport, domain: DomainSpec) -> List[List[Any]]:
    rows: List[List[Any]] = []
    for rho, energy in report.samples:
        rows.append(["sample", rho, repr(energy), None, None, None, None, None, None, None, None])
    rows.append(["fit", None, None, repr(report.slope), repr(report.renormalised), repr(report.residual),
                 None, None, None, None, None])
    for idx, (flux, center) in enumerate(zip(report.fluxes, domain.centers)):
        fx, fy = (None, None) if flux is None else (repr(flux[0]), repr(flux[1]))
        rows.append(["flux", None, None, None, None, None, idx, fx, fy, repr(float(center[0])), repr(float(center[1]))])
    return rows


def _energy_text(report: EnergyReport) -> str:
    lines = [f"mode: {report.mode}"]
    for rho, energy in report.samples:
        lines.append(f"rho={significant(rho)}  E={energy_text(energy)}")
    lines.append(f"A={energy_text(report.slope)}  expected {energy_text(report.theory_slope)}")
    lines.append(f"W={energy_text(report.renormalised)}  residual={significant(report.residual)}")
    for idx, flux in enumerate(report.fluxes):
        if flux is not None:
            lines.append(f"flux[{idx}]=({significant(flux[0])}, {significant(flux[1])})")
    return "\n".join(lines) + "\n"


def _cmd_table(cfg: RunConfig) -> int:
    manifold = _manifold(cfg.params.get("manifold"))
    table = table_report(manifold, cfg.params.get("bound"))
    render = {"text": table.to_text, "csv": table.to_csv, "json": table.to_json}[cfg.format]
    emit(render(), cfg.out)
    return EXIT_OK


def _cmd_resolve(cfg: RunConfig) -> int:
    manifold = _manifold(cfg.params.get("manifold"))
    if not cfg.params.get("outer"):
        raise ConfigInvalid("resolve needs --outer")
    outer = _class(manifold, cfg.params["outer"])
    singular = parse_class_tokens(manifold, cfg.params.get("sing"))
    inner = parse_class_tokens(manifold, cfg.params.get("inner"))
    boundary = BoundaryTopology(outer, tuple(inner))
    compatible = is_topological_resolution(boundary, singular)
    esg = singular_energy_of_boundary(boundary)
    verdict = "compatible" if compatible else "incompatible"
    payload = {
        "manifold": manifold.label,
        "outer": outer.name,
        "singularities": [c.name for c in singular],
        "inner": [c.name for c in inner],
        "verdict": verdict,
        "singular_energy": esg,
        "singular_energy_over_pi": esg / math.pi,
    }
    if cfg.format == "json":
        text = json.dumps(payload, ensure_ascii=False, indent=2)
    elif cfg.format == "csv":
        text = render_csv(("verdict", "singular_energy", "singular_energy_over_pi"), [(verdict, repr(esg), repr(esg / math.pi))])
    else:
        text = f"{verdict}\nE^sg={energy_text(esg)}"
    emit(text, cfg.out)
    return EXIT_OK if compatible else EXIT_INCOMPATIBLE


def _cmd_energy(cfg: RunConfig) -> int:
    if cfg.params.get("config") is None:
        raise ConfigInvalid("energy needs --config")
    payload = _check_keys("config", _load_json(cfg.params["config"]), ENERGY_KEYS)
    manifold = _manifold(payload.get("target", cfg.params.get("manifold") or "circle"))
    mode = payload.get("mode", "geom")
    if mode not in ("geom", "top"):
        raise ConfigInvalid("mode must be 'geom' or 'top'")
    if "boundary_data" not in payload:
        raise ConfigInvalid("energy config needs boundary_data")
    outer = _loop(manifold, payload["boundary_data"], "boundary_data")
    domain = _domain(payload, manifold)
    config = _relax_config(cfg.settings, payload)
    schedule = payload.get("rho_schedule")

    if "sweep" in payload:
        sweep = _check_keys("sweep", payload["sweep"], SWEEP_KEYS)
        axis = {"x": 0, "y": 1}.get(sweep.get("axis", "x"))
        if axis is None:
            raise ConfigInvalid("sweep.axis must be 'x' or 'y'")
        try:
            low, high = (float(v) for v in sweep["range"])
            steps = int(sweep.get("steps", 5))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigInvalid("sweep needs range [low, high] and integer steps") from exc
        positions = np.linspace(low, high, steps).tolist()
        index = _number(int, sweep.get("index", 0), "sweep.index")
        samples = sweep_positions(domain, outer, index, axis, positions, mode, schedule, config)
        rows = [["sweep", None, None, None, repr(s.renormalised), None, index, None, None, repr(s.a_x), repr(s.a_y)] for s in samples]
        if cfg.format == "json":
            text = json.dumps([{"a_x": s.a_x, "a_y": s.a_y, "W": s.renormalised} for s in samples], indent=2)
        elif cfg.format == "csv":
            text = render_csv(ENERGY_HEADER, rows)
        else:
            text = "\n".join(f"a=({significant(s.a_x)}, {significant(s.a_y)})  W={energy_text(s.renormalised)}" for s in samples)
        emit(text, cfg.out)
        return EXIT_OK

    report = renormalised_energy(domain, outer, schedule, mode, config)
    if cfg.format == "json":
        text = json.dumps(
            {
                "mode": report.mode,
                "samples": [{"rho": r, "energy": e} for r, e in report.samples],
                "A": report.slope,
                "A_expected": report.theory_slope,
                "W": report.renormalised,
                "W_over_pi": report.renormalised / math.pi,
                "residual": report.residual,
                "fluxes": [None if f is None else list(f) for f in report.fluxes],
            },
            indent=2,
        )
    elif cfg.format == "csv":
        text = render_csv(ENERGY_HEADER, _energy_rows(report, domain))
    else:
        text = _energy_text(report)
    emit(text, cfg.out)
    return EXIT_OK


def _parse_balls(raw: str) -> BallFamily:
    try:
        items = [tuple(float(v) for v in chunk.split(",")) for chunk in raw.split(";") if chunk.strip()]
        return BallFamily.of(items)
    except (ValueError, BallError) as exc:
        raise ConfigInvalid(f"Balls must be 'x,y,r;x,y,r;...': {exc}") from exc


def _cmd_balls(cfg: RunConfig) -> int:
    params = dict(cfg.params)
    if params.get("config") is not None:
        payload = _read_json(params["config"])
        if isinstance(payload, list):
            payload = {"balls": payload}
        elif not isinstance(payload, dict):
            raise ConfigInvalid("Balls config must be a list of [x, y, r] triples or a JSON object")
        payload = _check_keys("config", payload, BALLS_KEYS)
        try:
            family = BallFamily.of(payload.get("balls", []))
        except (TypeError, ValueError) as exc:
            raise ConfigInvalid(f"balls must be a list of [x, y, r] triples: {exc}") from exc
        if params.get("t_max") is None:
            params["t_max"] = payload.get("t_max")
        if params.get("samples") is None:
            params["samples"] = payload.get("samples")
    elif params.get("balls"):
        family = _parse_balls(params["balls"])
    else:
        raise ConfigInvalid("balls needs --balls or --config")
    t_max = _number(float, params.get("t_max") or 1.0, "t_max")
    trace = growth_process(family, t_max)
    rows = sample_trace(trace, _number(int, params.get("samples") or 32, "samples"))
    content = content_upper_bound(family)
    if cfg.format == "csv":
        text = render_csv(("t", "ballIndex", "cx", "cy", "r"), [[repr(v) if isinstance(v, float) else v for v in row] for row in rows])
    elif cfg.format == "json":
        text = json.dumps(
            {
                "content_upper_bound": content,
                "merge_times": list(trace.merge_times),
                "intervals": [
                    {
                        "t_start": interval.t_start,
                        "t_end": interval.t_end,
                        "balls": [[b.center[0], b.center[1], b.radius] for b in interval.family],
                    }
                    for interval in trace.intervals
                ],
            },
            indent=2,
        )
    else:
        lines = [f"content upper bound: {significant(content)}", f"merges: {len(trace.merge_times)}"]
        for interval in trace.intervals:
            lines.append(
                f"[{significant(interval.t_start)}, {significant(interval.t_end)}]: {len(interval.family)} ball(s)"
            )
        text = "\n".join(lines)
    emit(text, cfg.out)
    return EXIT_OK


def _cmd_synharmony(cfg: RunConfig) -> int:
    manifold = _manifold(cfg.params.get("manifold"))
    if not cfg.params.get("class"):
        raise ConfigInvalid("synharmony needs --class")
    gamma = _loop(manifold, {"class": cfg.params["class"]}, "--class")
    beta = gamma.rotated(float(cfg.params.get("rotation") or 0.0))
    times = parse_float_list(cfg.params["times"]) if cfg.params.get("times") else list(DEFAULT_TIMES)
    config = RelaxConfig.from_settings(cfg.settings)
    result = synharmony_estimate(gamma, beta, times, int(cfg.params.get("n_theta") or 64), config)
    if cfg.format == "csv":
        text = render_csv(("T", "excess"), [(repr(t), repr(e)) for t, e in result.per_time])
    elif cfg.format == "json":
        text = json.dumps({"estimate": result.estimate, "per_time": [{"T": t, "excess": e} for t, e in result.per_time]}, indent=2)
    else:
        lines = [f"T={significant(t)}  excess={energy_text(e)}" for t, e in result.per_time]
        lines.append(f"estimate={energy_text(result.estimate)}")
        text = "\n".join(lines)
    emit(text, cfg.out)
    return EXIT_OK


_HANDLERS = {
    "table": _cmd_table,
    "resolve": _cmd_resolve,
    "energy": _cmd_energy,
    "balls": _cmd_balls,
    "synharmony": _cmd_synharmony,
}


def dispatch(cfg: RunConfig) -> int:
    """Run one command; exceptions map to exit codes with the message on stderr."""
    try:
        return _HANDLERS[cfg.command](cfg)
    except (ConfigInvalid, SettingsError, AlgebraError, TopologyError, BallError) as exc:
        LOGGER.error("Invalid configuration: %s", exc)
        return EXIT_CONFIG
    except IncompatibleTopology as exc:
        LOGGER.error("Incompatible topology: %s", exc)
        return EXIT_INCOMPATIBLE
    except (NonConvergence, MonotonicityViolation) as exc:
        LOGGER.error("Solver did not converge: %s", exc)
        return EXIT_NONCONVERGENCE
    except SolverError as exc:
        LOGGER.error("Solver error: %s", exc)
        return EXIT_CONFIG


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="harmonic-renorm",
        description="Singular and renormalised energies of harmonic maps with point singularities.",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    def common(sub: argparse.ArgumentParser) -> None:
        sub.add_argument("--out", default=None, metavar="PATH")
        sub.add_argument("--format", choices=FORMATS, default="text")
        sub.add_argument("--threads", type=int, default=None)

    table = subparsers.add_parser("table", help="Class table of a target manifold.")
    table.add_argument("--manifold", required=True)
    table.add_argument("--bound", type=float, default=None, help="Norm bound for lattice targets.")
    common(table)

    resolve = subparsers.add_parser("resolve", help="Check a topological resolution.")
    resolve.add_argument("--manifold", required=True)
    resolve.add_argument("--outer", required=True)
    resolve.add_argument("--sing", default="")
    resolve.add_argument("--inner", default="")
    common(resolve)

    energy = subparsers.add_parser("energy", help="Renormalised energy from a JSON config.")
    energy.add_argument("--config", required=True, type=Path)
    energy.add_argument("--manifold", default=None)
    common(energy)

    balls = subparsers.add_parser("balls", help="Ball growth trace.")
    balls.add_argument("--balls", default=None, metavar="x,y,r;...")
    balls.add_argument("--config", default=None, type=Path)
    balls.add_argument("--t-max", dest="t_max", type=float, default=None)
    balls.add_argument("--samples", type=int, default=None)
    common(balls)

    synharmony = subparsers.add_parser("synharmony", help="Synharmony between a geodesic and its rotation.")
    synharmony.add_argument("--manifold", required=True)
    synharmony.add_argument("--class", dest="class", required=True)
    synharmony.add_argument("--rotation", type=float, default=0.0)
    synharmony.add_argument("--times", default=None, metavar="T1,T2,...")
    synharmony.add_argument("--n-theta", dest="n_theta", type=int, default=64)
    common(synharmony)
    return parser


def main(argv: Optional[Sequence[str]] = None, settings: Optional[Settings] = None) -> int:
    args = build_parser().parse_args(argv)
    params = {k: v for k, v in vars(args).items() if k not in ("command", "out", "format")}
    try:
        settings = settings or load_settings()
        if args.threads is not None:
            if args.threads < 1:
                raise ConfigInvalid("--threads must be >= 1")
            settings.threads = args.threads
        cfg = RunConfig(args.command, params, Path(args.out) if args.out else None, args.format, settings)
    except (ConfigInvalid, SettingsError) as exc:
        LOGGER.error("Invalid configuration: %s", exc)
        return EXIT_CONFIG
    return dispatch(cfg)
