"""Configuration files, initial-data sampling, run orchestration, persistence.

This is the reproducibility surface of the lab: a run is fully determined by
one YAML config plus a master seed, every output bundle carries the resolved
config and 64-bit content hashes, and reruns are byte-identical.

Config schema (all keys strict; unknown keys are errors):

    name: str                     # optional run label
    seed: int                     # master seed; sub-seeds derived by counter
    allow_hypothesis_violation: bool
    scenario:                     # inline mapping, or a path to a YAML file
      grid: {dimension, half_width, points}
      rigidity: float
      foundation: float
      damping:
        kind: complementary_patches | constant | ring
        ... kind-specific keys (see _build_damping)
      nonlinearity:
        stiffness: {kind: constant|kirchhoff|saturating|zero, ...params}
        restoring: {kind: zero|cubic|power, ...params}
      load: {kind: zero | bump, amplitude, radius}
      numerics: {dt, cg_tol}      # dt null -> conservative default
    run:
      horizon: float
      stride: int
      snapshots: bool
      radii: [float]              # tail-norm radii recorded as observers
      lags: [float]               # difference-quotient lags (need snapshots)
      initial: {kind: fourier|constant|zero, target_norm, value}
      seeds: [int]                # optional ensemble seeds
    output: {directory: str}
"""

from __future__ import annotations

import hashlib
import json
import math
import platform
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Optional, Sequence, Union

import numpy as np
import scipy
import yaml

from .energetics import energy_balance_residual, difference_quotient_energy, standard_observers
from .grid import Field, Grid, make_grid, phase_norm
from .integrator import BlowUpError, evolve
from .model import (
    DampingCoefficients,
    HypothesisViolation,
    RuleCheck,
    Scenario,
    ValidationReport,
    bump_load,
    complementary_patch_damping,
    constant_damping,
    half_box_mask,
    make_nonlinearity,
    ring_profile,
)
from .state import State, TrajectoryRecord

__all__ = [
    "ConfigError",
    "EnsembleResult",
    "RunResult",
    "build_scenario",
    "config_hash",
    "load_config",
    "run_ensemble",
    "run_scenario",
    "sample_initial_data",
    "validate_config",
]


class ConfigError(ValueError):
    """Malformed configuration; the message carries the offending key path."""


# ---------------------------------------------------------------------------
# config loading and strict schema checks

_REQUIRED = object()


def _mapping(obj, path: str) -> dict:
    if obj is None:
        return {}
    if not isinstance(obj, Mapping):
        raise ConfigError(f"{path}: expected a mapping, got {type(obj).__name__}")
    return dict(obj)


def _check_keys(d: Mapping, allowed: Sequence[str], path: str) -> None:
    unknown = sorted(set(d) - set(allowed))
    if unknown:
        raise ConfigError(f"{path}: unknown key(s) {unknown}; allowed: {sorted(allowed)}")


def _get(d: Mapping, key: str, path: str, caster, default=_REQUIRED):
    if key not in d or d[key] is None:
        if default is _REQUIRED:
            raise ConfigError(f"{path}.{key}: required key is missing")
        return default
    try:
        return caster(d[key])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}.{key}: {exc}") from exc


def _as_bool(v) -> bool:
    if isinstance(v, bool):
        return v
    raise ValueError(f"expected a boolean, got {v!r}")


def _as_float_list(v) -> list[float]:
    if not isinstance(v, (list, tuple)):
        raise ValueError(f"expected a list, got {v!r}")
    return [float(x) for x in v]


def _as_int_list(v) -> list[int]:
    if not isinstance(v, (list, tuple)):
        raise ValueError(f"expected a list, got {v!r}")
    return [int(x) for x in v]


def load_config(source: Union[str, Path, Mapping]) -> dict:
    """Parse and strictly validate a config; returns the resolved mapping
    with defaults filled in. Unknown keys anywhere are errors."""
    if isinstance(source, Mapping):
        raw = dict(source)
        base_dir = Path.cwd()
    else:
        path = Path(source)
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        try:
            raw = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            raise ConfigError(f"{path}: YAML parse error: {exc}") from exc
        base_dir = path.parent
    raw = _mapping(raw, "config")
    _check_keys(raw, ["name", "seed", "allow_hypothesis_violation", "scenario", "run", "output"], "config")

    resolved: dict = {}
    resolved["name"] = _get(raw, "name", "config", str, default="run")
    resolved["seed"] = _get(raw, "seed", "config", int, default=0)
    resolved["allow_hypothesis_violation"] = _get(
        raw, "allow_hypothesis_violation", "config", _as_bool, default=False
    )

    scenario_raw = raw.get("scenario")
    if isinstance(scenario_raw, str):
        ref = base_dir / scenario_raw
        try:
            loaded = yaml.safe_load(ref.read_text())
        except OSError as exc:
            raise ConfigError(f"config.scenario: cannot read referenced file {ref}: {exc}") from exc
        except yaml.YAMLError as exc:
            raise ConfigError(f"{ref}: YAML parse error: {exc}") from exc
        loaded = _mapping(loaded, str(ref))
        scenario_raw = loaded.get("scenario", loaded)
    resolved["scenario"] = _resolve_scenario(_mapping(scenario_raw, "config.scenario"))
    resolved["run"] = _resolve_run(_mapping(raw.get("run"), "config.run"))

    output = _mapping(raw.get("output"), "config.output")
    _check_keys(output, ["directory"], "config.output")
    resolved["output"] = {"directory": _get(output, "directory", "config.output", str, default=None)}
    return resolved


def _resolve_scenario(sc: Mapping) -> dict:
    path = "config.scenario"
    _check_keys(sc, ["grid", "rigidity", "foundation", "damping", "nonlinearity", "load", "numerics"], path)

    grid = _mapping(sc.get("grid"), f"{path}.grid")
    _check_keys(grid, ["dimension", "half_width", "points"], f"{path}.grid")
    grid_resolved = {
        "dimension": _get(grid, "dimension", f"{path}.grid", int),
        "half_width": _get(grid, "half_width", f"{path}.grid", float),
        "points": _get(grid, "points", f"{path}.grid", int),
    }

    damping = _mapping(sc.get("damping"), f"{path}.damping")
    kind = _get(damping, "kind", f"{path}.damping", str, default="complementary_patches")
    if kind == "complementary_patches":
        _check_keys(damping, ["kind", "weak_floor", "strong_floor", "exterior_radius"], f"{path}.damping")
        damping_resolved = {
            "kind": kind,
            "weak_floor": _get(damping, "weak_floor", f"{path}.damping", float, default=1.0),
            "strong_floor": _get(damping, "strong_floor", f"{path}.damping", float, default=1.0),
            "exterior_radius": _get(damping, "exterior_radius", f"{path}.damping", float),
        }
    elif kind == "constant":
        _check_keys(
            damping,
            ["kind", "weak", "strong", "weak_floor", "strong_floor", "exterior_radius"],
            f"{path}.damping",
        )
        damping_resolved = {
            "kind": kind,
            "weak": _get(damping, "weak", f"{path}.damping", float),
            "strong": _get(damping, "strong", f"{path}.damping", float),
            "weak_floor": _get(damping, "weak_floor", f"{path}.damping", float, default=None),
            "strong_floor": _get(damping, "strong_floor", f"{path}.damping", float, default=None),
            "exterior_radius": _get(damping, "exterior_radius", f"{path}.damping", float, default=None),
        }
    elif kind == "ring":
        _check_keys(
            damping,
            ["kind", "weak_floor", "strong_floor", "exterior_radius", "weak_mask", "strong_mask"],
            f"{path}.damping",
        )
        damping_resolved = {
            "kind": kind,
            "weak_floor": _get(damping, "weak_floor", f"{path}.damping", float, default=1.0),
            "strong_floor": _get(damping, "strong_floor", f"{path}.damping", float, default=1.0),
            "exterior_radius": _get(damping, "exterior_radius", f"{path}.damping", float),
            "weak_mask": _get(damping, "weak_mask", f"{path}.damping", str, default="none"),
            "strong_mask": _get(damping, "strong_mask", f"{path}.damping", str, default="none"),
        }
    else:
        raise ConfigError(f"{path}.damping.kind: unknown kind {kind!r}")

    nl = _mapping(sc.get("nonlinearity"), f"{path}.nonlinearity")
    _check_keys(nl, ["stiffness", "restoring"], f"{path}.nonlinearity")
    stiff = _mapping(nl.get("stiffness"), f"{path}.nonlinearity.stiffness")
    rest = _mapping(nl.get("restoring"), f"{path}.nonlinearity.restoring")
    stiff_kind = _get(stiff, "kind", f"{path}.nonlinearity.stiffness", str, default="zero")
    rest_kind = _get(rest, "kind", f"{path}.nonlinearity.restoring", str, default="zero")
    stiff_params = {k: float(v) for k, v in stiff.items() if k != "kind"}
    rest_params = {k: float(v) for k, v in rest.items() if k != "kind"}

    load = _mapping(sc.get("load"), f"{path}.load")
    load_kind = _get(load, "kind", f"{path}.load", str, default="zero")
    if load_kind == "zero":
        _check_keys(load, ["kind"], f"{path}.load")
        load_resolved = {"kind": "zero"}
    elif load_kind == "bump":
        _check_keys(load, ["kind", "amplitude", "radius"], f"{path}.load")
        load_resolved = {
            "kind": "bump",
            "amplitude": _get(load, "amplitude", f"{path}.load", float, default=1.0),
            "radius": _get(load, "radius", f"{path}.load", float, default=2.0),
        }
    else:
        raise ConfigError(f"{path}.load.kind: unknown kind {load_kind!r}")

    numerics = _mapping(sc.get("numerics"), f"{path}.numerics")
    _check_keys(numerics, ["dt", "cg_tol"], f"{path}.numerics")
    numerics_resolved = {
        "dt": _get(numerics, "dt", f"{path}.numerics", float, default=None),
        "cg_tol": _get(numerics, "cg_tol", f"{path}.numerics", float, default=1e-10),
    }

    return {
        "grid": grid_resolved,
        "rigidity": _get(sc, "rigidity", path, float, default=1.0),
        "foundation": _get(sc, "foundation", path, float, default=1.0),
        "damping": damping_resolved,
        "nonlinearity": {
            "stiffness": {"kind": stiff_kind, **stiff_params},
            "restoring": {"kind": rest_kind, **rest_params},
        },
        "load": load_resolved,
        "numerics": numerics_resolved,
    }


def _resolve_run(run: Mapping) -> dict:
    path = "config.run"
    _check_keys(run, ["horizon", "stride", "snapshots", "radii", "lags", "initial", "seeds"], path)
    initial = _mapping(run.get("initial"), f"{path}.initial")
    _check_keys(initial, ["kind", "target_norm", "value"], f"{path}.initial")
    kind = _get(initial, "kind", f"{path}.initial", str, default="fourier")
    if kind not in ("fourier", "constant", "zero"):
        raise ConfigError(f"{path}.initial.kind: unknown kind {kind!r}")
    target = initial.get("target_norm", 1.0)
    if isinstance(target, (list, tuple)):
        target = [float(x) for x in target]
    elif target is not None:
        target = float(target)
    return {
        "horizon": _get(run, "horizon", path, float, default=1.0),
        "stride": _get(run, "stride", path, int, default=1),
        "snapshots": _get(run, "snapshots", path, _as_bool, default=False),
        "radii": _get(run, "radii", path, _as_float_list, default=[]),
        "lags": _get(run, "lags", path, _as_float_list, default=[]),
        "seeds": _get(run, "seeds", path, _as_int_list, default=[]),
        "initial": {
            "kind": kind,
            "target_norm": target,
            "value": _get(initial, "value", f"{path}.initial", float, default=1.0),
        },
    }


# ---------------------------------------------------------------------------
# scenario construction


def _build_damping(grid: Grid, spec: Mapping) -> DampingCoefficients:
    kind = spec["kind"]
    if kind == "complementary_patches":
        return complementary_patch_damping(
            grid, spec["weak_floor"], spec["strong_floor"], spec["exterior_radius"]
        )
    if kind == "constant":
        return constant_damping(
            grid,
            spec["weak"],
            spec["strong"],
            weak_floor=spec.get("weak_floor"),
            strong_floor=spec.get("strong_floor"),
            exterior_radius=spec.get("exterior_radius"),
        )
    if kind == "ring":
        masks = {}
        for side_key in ("weak_mask", "strong_mask"):
            choice = spec.get(side_key, "none")
            if choice == "none":
                masks[side_key] = None
            elif choice in ("left", "right"):
                masks[side_key] = half_box_mask(grid, choice)
            else:
                raise ConfigError(f"damping.{side_key}: unknown mask {choice!r}")
        weak = ring_profile(grid, spec["weak_floor"], spec["exterior_radius"], masks["weak_mask"])
        strong = ring_profile(grid, spec["strong_floor"], spec["exterior_radius"], masks["strong_mask"])
        return DampingCoefficients(
            weak, strong, spec["weak_floor"], spec["strong_floor"], spec["exterior_radius"]
        )
    raise ConfigError(f"damping.kind: unknown kind {kind!r}")


def build_scenario(config: Mapping) -> Scenario:
    """Build the Scenario described by a resolved config (see load_config)."""
    cfg = config if "scenario" in config else {"scenario": config}
    sc = cfg["scenario"]
    grid = make_grid(sc["grid"]["dimension"], sc["grid"]["half_width"], sc["grid"]["points"])
    damping = _build_damping(grid, sc["damping"])
    stiff = dict(sc["nonlinearity"]["stiffness"])
    rest = dict(sc["nonlinearity"]["restoring"])
    nonlinearity = make_nonlinearity(
        stiff.pop("kind"), rest.pop("kind"), stiffness_params=stiff, restoring_params=rest
    )
    load_spec = sc["load"]
    if load_spec["kind"] == "bump":
        load = bump_load(grid, load_spec["amplitude"], load_spec["radius"])
    else:
        load = Field.zeros(grid)
    return Scenario(
        grid=grid,
        rigidity=sc["rigidity"],
        foundation=sc["foundation"],
        damping=damping,
        nonlinearity=nonlinearity,
        load=load,
        dt=sc["numerics"]["dt"],
        cg_tol=sc["numerics"]["cg_tol"],
        name=cfg.get("name", "scenario"),
        seed=cfg.get("seed", 0),
        allow_violation=cfg.get("allow_hypothesis_violation", False),
    )


# ---------------------------------------------------------------------------
# initial data


def _synthesize_low_pass(grid: Grid, rng: np.random.Generator) -> np.ndarray:
    """Random low-pass trigonometric superposition: per-mode coefficients
    standard normal, magnitude weight 1/(1 + |m|^3), modes |m| <= N/8."""
    cutoff = grid.points // 8
    k1 = math.pi / grid.half_width
    coords = grid.coordinate_arrays()
    acc = np.zeros(grid.shape)
    if grid.dimension == 1:
        x = coords[0]
        for m in range(cutoff + 1):
            a, b = rng.standard_normal(2)
            w = 1.0 / (1.0 + m**3)
            acc += w * (a * np.cos(m * k1 * x) + b * np.sin(m * k1 * x))
        return acc
    x, y = coords
    for m1 in range(cutoff + 1):
        for m2 in range(-cutoff, cutoff + 1):
            if m1 == 0 and m2 < 0:
                continue
            mag = math.hypot(m1, m2)
            if mag > cutoff:
                continue
            a, b = rng.standard_normal(2)
            w = 1.0 / (1.0 + mag**3)
            phase = k1 * (m1 * x + m2 * y)
            acc += w * (a * np.cos(phase) + b * np.sin(phase))
    return acc


def _sample_with_meta(spec: Mapping, grid: Grid, seed: int) -> tuple[State, int]:
    kind = spec.get("kind", "fourier")
    if kind == "zero":
        return State.zero(grid), 0
    if kind == "constant":
        return State(Field.full(grid, spec.get("value", 1.0)), Field.zeros(grid)), 0
    if kind != "fourier":
        raise ConfigError(f"initial.kind: unknown kind {kind!r}")
    target = spec.get("target_norm", 1.0)
    if isinstance(target, (list, tuple)):
        target = float(target[0])
    if not target > 0.0:
        raise ConfigError(f"initial.target_norm must be positive, got {target}")
    for attempt in range(16):
        rng = np.random.default_rng([int(seed), attempt])
        u = Field(grid, _synthesize_low_pass(grid, rng))
        v = Field(grid, _synthesize_low_pass(grid, rng))
        rho = phase_norm(u, v)
        if rho > 0.0:
            scale = target / rho
            return State(u * scale, v * scale), attempt
    raise RuntimeError("initial-data sampler drew zero fields 16 times in a row")


def sample_initial_data(spec: Mapping, grid: Grid, seed: int) -> State:
    """Seeded random initial data; the fourier sampler rescales the pair so
    its phase-space norm equals the target exactly (to roundoff)."""
    return _sample_with_meta(spec, grid, seed)[0]


# ---------------------------------------------------------------------------
# hashing and serialization helpers


def config_hash(config: Mapping) -> str:
    """64-bit content hash of a resolved config (hex)."""
    blob = json.dumps(config, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.blake2b(blob, digest_size=8).hexdigest()


def _hash_file(path: Path) -> str:
    return hashlib.blake2b(path.read_bytes(), digest_size=8).hexdigest()


def _format_float(x: float) -> str:
    return repr(float(x))


def _write_ndjson(path: Path, traj: TrajectoryRecord) -> None:
    names = sorted(traj.series)
    with path.open("w", newline="\n") as fh:
        for i, t in enumerate(traj.times):
            rec = {"t": float(t)}
            for name in names:
                rec[name] = float(traj.series[name][i])
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def _write_summary_csv(path: Path, traj: TrajectoryRecord, residuals: Optional[np.ndarray]) -> None:
    base = ["energy", "lyapunov", "dissipation", "phase_norm", "u_h2", "v_l2"]
    tails = sorted(n for n in traj.series if n.startswith("tail_r"))
    extra = sorted(n for n in traj.series if n not in base and not n.startswith("tail_r"))
    columns = [n for n in base if n in traj.series] + extra + tails
    header = ["time"] + columns + (["residual"] if residuals is not None else [])
    with path.open("w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for i, t in enumerate(traj.times):
            row = [_format_float(t)]
            row += [_format_float(traj.series[c][i]) for c in columns]
            if residuals is not None:
                rho = residuals[i - 1] if i >= 1 else 0.0
                row.append(_format_float(rho))
            fh.write(",".join(row) + "\n")


def _versions() -> dict:
    from . import __version__

    return {
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "platelab": __version__,
    }


# ---------------------------------------------------------------------------
# runs


@dataclass
class RunResult:
    status: str
    record: TrajectoryRecord
    scenario: Scenario
    config: dict
    out_dir: Optional[Path]
    files: dict
    manifest: dict

    @property
    def ok(self) -> bool:
        return self.status == "completed"


def run_scenario(
    source: Union[str, Path, Mapping],
    out_dir: Union[str, Path, None] = None,
    overrides: Optional[Mapping] = None,
) -> RunResult:
    """Run one trajectory from a config and persist the bundle.

    Writes trajectory.ndjson (one observer record per line), summary.csv,
    optional difference_quotients.csv, and manifest.yaml into the output
    directory. A blow-up guard halt persists the partial trajectory and is
    reported through the status (and a nonzero CLI exit)."""
    config = load_config(source)
    if overrides:
        config = _apply_overrides(config, overrides)
    scenario = build_scenario(config)
    run_cfg = config["run"]

    directory = out_dir if out_dir is not None else config["output"]["directory"]
    if directory is None:
        raise ConfigError("no output directory: pass out_dir or set config.output.directory")
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)

    state, resamples = _sample_with_meta(run_cfg["initial"], scenario.grid, config["seed"])
    observers = standard_observers(run_cfg["radii"])
    needs_snapshots = run_cfg["snapshots"] or bool(run_cfg["lags"])

    status = "completed"
    halted_step = None
    try:
        record = evolve(
            state,
            scenario,
            run_cfg["horizon"],
            observers=observers,
            stride=run_cfg["stride"],
            record_snapshots=needs_snapshots,
        )
    except BlowUpError as exc:
        if exc.partial is None:
            raise
        record = exc.partial
        status = record.status
        halted_step = exc.step_index

    record.config_hash = config_hash(config)
    record.seed = config["seed"]

    files: dict[str, Path] = {}
    traj_path = directory / "trajectory.ndjson"
    _write_ndjson(traj_path, record)
    files["trajectory.ndjson"] = traj_path

    residuals = None
    if run_cfg["stride"] == 1 and status == "completed" and {"lyapunov", "dissipation"} <= set(record.series):
        residuals = energy_balance_residual(record, scenario).values
    summary_path = directory / "summary.csv"
    _write_summary_csv(summary_path, record, residuals)
    files["summary.csv"] = summary_path

    if run_cfg["lags"] and record.snapshots is not None and status == "completed":
        dq_path = directory / "difference_quotients.csv"
        _write_difference_quotients(dq_path, record, scenario, run_cfg["lags"])
        files["difference_quotients.csv"] = dq_path

    manifest = {
        "name": config["name"],
        "status": status,
        "halted_step": halted_step,
        "seed": config["seed"],
        "initial_resamples": resamples,
        "config": config,
        "config_hash": record.config_hash,
        "waived_rules": list(scenario.waived_rules),
        "outputs": {
            name: {"bytes": p.stat().st_size, "hash64": _hash_file(p)} for name, p in files.items()
        },
        "versions": _versions(),
    }
    manifest_path = directory / "manifest.yaml"
    manifest_path.write_text(yaml.safe_dump(manifest, sort_keys=True), newline="\n")
    files["manifest.yaml"] = manifest_path

    return RunResult(
        status=status,
        record=record,
        scenario=scenario,
        config=config,
        out_dir=directory,
        files=files,
        manifest=manifest,
    )


def _write_difference_quotients(path: Path, record: TrajectoryRecord, sc: Scenario, lags: Sequence[float]) -> None:
    series = {}
    times_ref = None
    for lag in lags:
        times, values = difference_quotient_energy(record, sc, lag)
        series[lag] = (times, values)
        if times_ref is None or len(times) < len(times_ref):
            times_ref = times
    with path.open("w", newline="\n") as fh:
        header = ["time"] + [f"dq_energy_lag{lag:g}" for lag in lags]
        fh.write(",".join(header) + "\n")
        n = len(times_ref)
        for i in range(n):
            row = [_format_float(times_ref[i])]
            for lag in lags:
                row.append(_format_float(series[lag][1][i]))
            fh.write(",".join(row) + "\n")


def _apply_overrides(config: dict, overrides: Mapping) -> dict:
    config = json.loads(json.dumps(config))  # deep copy, keeps plain types
    for key, value in overrides.items():
        if value is None:
            continue
        if key == "dt":
            config["scenario"]["numerics"]["dt"] = float(value)
        elif key == "horizon":
            config["run"]["horizon"] = float(value)
        elif key == "stride":
            config["run"]["stride"] = int(value)
        elif key == "seed":
            config["seed"] = int(value)
        elif key == "target_norm":
            config["run"]["initial"]["target_norm"] = value
        elif key == "allow_hypothesis_violation":
            config["allow_hypothesis_violation"] = bool(value)
        elif key == "out":
            config["output"]["directory"] = str(value)
        else:
            raise ConfigError(f"unknown override {key!r}")
    return config


@dataclass
class EnsembleResult:
    times: np.ndarray
    sup_phase_norm: np.ndarray
    sup_tails: dict[float, np.ndarray]
    max_lyapunov_increase: float
    max_balance_residual: Optional[float]
    members: list[RunResult]
    out_dir: Optional[Path]
    aggregate_path: Optional[Path]


def run_ensemble(
    source: Union[str, Path, Mapping],
    seeds: Sequence[int],
    out_dir: Union[str, Path, None] = None,
    target_norms: Optional[Sequence[float]] = None,
) -> EnsembleResult:
    """One trajectory per seed, then ensemble aggregates: the absorption
    curve (sup of the phase norm per sample time), sup of each tail series,
    the worst Lyapunov increase, and the worst balance residual (stride-1
    runs). Any member failure aborts aggregation; member bundles persist."""
    if len(seeds) < 2:
        raise ConfigError(f"an ensemble needs at least 2 seeds, got {len(seeds)}")
    config = load_config(source)
    directory = out_dir if out_dir is not None else config["output"]["directory"]
    if directory is None:
        raise ConfigError("no output directory: pass out_dir or set config.output.directory")
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)

    base_targets = config["run"]["initial"]["target_norm"]
    members: list[RunResult] = []
    for i, seed in enumerate(seeds):
        overrides = {"seed": int(seed)}
        if target_norms is not None:
            overrides["target_norm"] = float(target_norms[i % len(target_norms)])
        elif isinstance(base_targets, list):
            overrides["target_norm"] = float(base_targets[i % len(base_targets)])
        member_dir = directory / f"member_{i:02d}_seed{seed}"
        result = run_scenario(config, out_dir=member_dir, overrides=overrides)
        members.append(result)

    failed = [m for m in members if not m.ok]
    if failed:
        raise RuntimeError(
            f"{len(failed)} ensemble member(s) failed ({failed[0].status}); "
            f"member bundles were kept under {directory}"
        )

    times = members[0].record.times
    for m in members[1:]:
        if m.record.times.shape != times.shape or not np.array_equal(m.record.times, times):
            raise RuntimeError("ensemble members recorded different sample times")

    phase = np.vstack([m.record.series["phase_norm"] for m in members])
    sup_phase = phase.max(axis=0)
    tail_names = sorted(n for n in members[0].record.series if n.startswith("tail_r"))
    sup_tails: dict[float, np.ndarray] = {}
    for name in tail_names:
        r = float(name[len("tail_r"):])
        sup_tails[r] = np.vstack([m.record.series[name] for m in members]).max(axis=0)

    max_increase = max(
        float(np.max(np.diff(m.record.series["lyapunov"]), initial=-np.inf)) for m in members
    )
    max_residual = None
    if members[0].record.stride == 1:
        max_residual = max(
            energy_balance_residual(m.record, m.scenario).normalized_max for m in members
        )

    aggregate_path = directory / "aggregate.csv"
    with aggregate_path.open("w", newline="\n") as fh:
        header = ["time", "sup_phase_norm"] + [f"sup_tail_r{r:g}" for r in sorted(sup_tails)]
        fh.write(",".join(header) + "\n")
        for i, t in enumerate(times):
            row = [_format_float(t), _format_float(sup_phase[i])]
            row += [_format_float(sup_tails[r][i]) for r in sorted(sup_tails)]
            fh.write(",".join(row) + "\n")

    manifest = {
        "name": config["name"],
        "seeds": [int(s) for s in seeds],
        "member_dirs": [str(m.out_dir) for m in members],
        "max_lyapunov_increase": float(max_increase),
        "max_balance_residual": None if max_residual is None else float(max_residual),
        "aggregate_hash64": _hash_file(aggregate_path),
        "versions": _versions(),
    }
    (directory / "ensemble_manifest.yaml").write_text(
        yaml.safe_dump(manifest, sort_keys=True), newline="\n"
    )

    return EnsembleResult(
        times=times,
        sup_phase_norm=sup_phase,
        sup_tails=sup_tails,
        max_lyapunov_increase=max_increase,
        max_balance_residual=max_residual,
        members=members,
        out_dir=directory,
        aggregate_path=aggregate_path,
    )


# ---------------------------------------------------------------------------
# validation without running


@dataclass(frozen=True)
class ConfigReport:
    checks: tuple[RuleCheck, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def lines(self) -> list[str]:
        return ValidationReport(self.checks).lines()


def validate_config(source: Union[str, Path, Mapping]) -> ConfigReport:
    """Full hypothesis and numerics validation of a config without running.

    Machine-readable pass/fail per rule; parse and schema problems become a
    failing "config-schema" entry carrying the offending path."""
    checks: list[RuleCheck] = []
    try:
        config = load_config(source)
    except ConfigError as exc:
        return ConfigReport((RuleCheck("config-schema", False, str(exc)),))
    checks.append(RuleCheck("config-schema", True, "config parsed, all keys known"))

    sc_cfg = config["scenario"]
    try:
        grid = make_grid(
            sc_cfg["grid"]["dimension"], sc_cfg["grid"]["half_width"], sc_cfg["grid"]["points"]
        )
        checks.append(RuleCheck("grid", True, f"grid ok (spacing {grid.spacing:g})"))
    except ValueError as exc:
        checks.append(RuleCheck("grid", False, str(exc)))
        return ConfigReport(tuple(checks))

    try:
        damping = _build_damping(grid, sc_cfg["damping"])
    except (ValueError, ConfigError) as exc:
        checks.append(RuleCheck("damping-build", False, str(exc)))
        return ConfigReport(tuple(checks))

    margin_ok = grid.half_width >= 4.0 * damping.exterior_radius
    checks.append(
        RuleCheck(
            "truncation-margin",
            margin_ok,
            f"half_width {grid.half_width:g} vs 4 * exterior_radius {4.0 * damping.exterior_radius:g}",
        )
    )

    from .model import validate_coefficients, validate_nonlinearity

    checks.extend(validate_coefficients(damping).checks)

    stiff = dict(sc_cfg["nonlinearity"]["stiffness"])
    rest = dict(sc_cfg["nonlinearity"]["restoring"])
    try:
        nl = make_nonlinearity(
            stiff.pop("kind"), rest.pop("kind"), stiffness_params=stiff, restoring_params=rest
        )
        checks.extend(validate_nonlinearity(nl).checks)
    except ValueError as exc:
        checks.append(RuleCheck("nonlinearity-build", False, str(exc)))

    numerics = sc_cfg["numerics"]
    dt = numerics["dt"]
    dt_ok = dt is None or dt > 0.0
    checks.append(RuleCheck("numerics-dt", dt_ok, f"dt = {dt}"))
    tol_ok = 0.0 < numerics["cg_tol"] < 1.0
    checks.append(RuleCheck("numerics-cg-tol", tol_ok, f"cg_tol = {numerics['cg_tol']}"))

    run_cfg = config["run"]
    checks.append(RuleCheck("run-horizon", run_cfg["horizon"] > 0.0, f"horizon = {run_cfg['horizon']}"))
    checks.append(RuleCheck("run-stride", run_cfg["stride"] >= 1, f"stride = {run_cfg['stride']}"))
    radii_ok = all(0.0 < 2.0 * r < grid.half_width for r in run_cfg["radii"])
    checks.append(
        RuleCheck("run-radii", radii_ok, f"tail radii {run_cfg['radii']} need 0 < 2r < half_width")
    )

    hypothesis_failures = [
        c.rule
        for c in checks
        if not c.passed and (c.rule.startswith(("damping-", "exterior-", "stiffness", "restoring", "growth")))
    ]
    if hypothesis_failures and not config["allow_hypothesis_violation"]:
        checks.append(
            RuleCheck(
                "override-required",
                False,
                "admissibility rules fail and allow_hypothesis_violation is not set: "
                + ", ".join(hypothesis_failures),
            )
        )
    elif hypothesis_failures:
        checks.append(
            RuleCheck(
                "override-required",
                True,
                "admissibility failures waived by allow_hypothesis_violation: "
                + ", ".join(hypothesis_failures),
            )
        )
    return ConfigReport(tuple(checks))
