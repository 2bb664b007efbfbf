"""Experiment configuration: nested YAML, dotted-key overrides, validation.

A config is a plain nested dict. :func:`resolve` merges a file (or nothing)
over :data:`DEFAULTS`, applies ``section.key=value`` overrides and checks the
result, raising :class:`ConfigError` with the offending key on any problem.
"""

from __future__ import annotations

import copy
import re
from pathlib import Path

import yaml

from .evolve import EvolveOptions
from .functionals import ModelParams, ParameterError
from .grid import build_grid
from .ground_state import PRECONDITIONERS, GroundStateOptions

COMMANDS = ("ground", "evolve", "instability", "verify", "sweep")

DEFAULTS = {
    "command": "ground",
    "output": "runs",
    "seed": 0,
    "model": {"n_dims": 2, "p": 5.0, "omega": 1.0},
    "grid": {"points": 256, "half_lengths": 16.0},
    "ground": {"step_size": 0.01, "max_iters": 20000, "residual_tol": 1e-6,
               "recenter_every": 10, "seed_width": 1.0, "preconditioner": "none",
               "min_step": 1e-12},
    "evolve": {"dt0": 1e-3, "t_end": 1.0, "sample_every": 1e-2,
               "grad_blowup_factor": 1e3, "dt_floor": 1e-9, "boundary_mass_cap": 1e-6,
               "boundary_margin": 0.1, "linear_only": False, "dealias": False,
               "adapt_constant": 0.1},
    "initial": {"kind": "gaussian", "amplitude": 0.1, "width": 1.0, "path": None},
    "instability": {"lam": 1.2, "slack": 0.1, "concavity_tol": 0.05},
    "verify": {"n_identity_fields": 50, "n_gap_fields": 100},
    "sweep": {"command": "instability", "parameter": "lam",
              "values": [1.05, 1.1, 1.2, 1.5], "workers": 1},
}

SWEEP_PARAMETERS = {"lam": ("instability", "lam"), "omega": ("model", "omega")}


class ConfigError(ValueError):
    pass


# YAML 1.1 reads "1e-3" (no decimal point) as a string
_EXPONENT_FLOAT = re.compile(r"^[-+]?(\d+\.?\d*|\.\d+)[eE][-+]?\d+$")


def _numbers(value):
    if isinstance(value, str) and _EXPONENT_FLOAT.match(value.strip()):
        return float(value)
    if isinstance(value, dict):
        return {k: _numbers(v) for k, v in value.items()}
    if isinstance(value, list):
        return [_numbers(v) for v in value]
    return value


def _merge(base: dict, update: dict, prefix: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, value in update.items():
        path = f"{prefix}{key}"
        if key not in base:
            raise ConfigError(f"unknown config key {path!r}")
        if isinstance(base[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f"{path!r} must be a mapping")
            out[key] = _merge(base[key], value, path + ".")
        else:
            out[key] = value
    return out


def parse_override(text: str) -> dict:
    """``"evolve.dt0=5e-4"`` -> ``{"evolve": {"dt0": 0.0005}}``; values are read as YAML."""
    if "=" not in text:
        raise ConfigError(f"override {text!r} is not of the form key=value")
    key, raw = text.split("=", 1)
    parts = key.strip().split(".")
    if not all(parts):
        raise ConfigError(f"override {text!r} has an empty key")
    try:
        value = yaml.safe_load(raw)
    except yaml.YAMLError as exc:
        raise ConfigError(f"override {text!r}: {exc}") from None
    value = _numbers(value)
    for part in reversed(parts):
        value = {part: value}
    return value


def load_file(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file {path} does not exist")
    try:
        data = yaml.safe_load(path.read_text()) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return _numbers(data)


def resolve(path=None, overrides=(), command: str | None = None) -> dict:
    cfg = copy.deepcopy(DEFAULTS)
    if path is not None:
        cfg = _merge(cfg, load_file(path))
    for text in overrides:
        cfg = _merge(cfg, parse_override(text))
    if command is not None:
        cfg["command"] = command
    try:
        cfg = _normalize(cfg)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"grid or numeric entry malformed: {exc}") from None
    validate(cfg)
    return cfg


def _per_axis(value, n: int, key: str) -> list:
    if isinstance(value, (list, tuple)):
        if len(value) != n:
            raise ConfigError(f"{key} needs {n} entries, got {len(value)}")
        return list(value)
    return [value] * n


def _normalize(cfg: dict) -> dict:
    cfg["output"] = str(cfg["output"])
    n = cfg["model"]["n_dims"]
    if not isinstance(n, int) or isinstance(n, bool):
        raise ConfigError(f"model.n_dims must be an integer, got {n!r}")
    cfg["grid"]["points"] = _per_axis(cfg["grid"]["points"], n, "grid.points")
    cfg["grid"]["half_lengths"] = [float(L) for L in
                                   _per_axis(cfg["grid"]["half_lengths"], n, "grid.half_lengths")]
    for section in ("model", "ground", "evolve", "instability"):
        for key, default in DEFAULTS[section].items():
            value = cfg[section][key]
            if isinstance(default, float) and isinstance(value, int) and not isinstance(value, bool):
                cfg[section][key] = float(value)
    return cfg


def validate(cfg: dict) -> None:
    if cfg["command"] not in COMMANDS:
        raise ConfigError(f"command must be one of {COMMANDS}, got {cfg['command']!r}")
    try:
        params = model_params(cfg)
        grid_from(cfg)
        ground_options(cfg)
        evolve_options(cfg)
    except ConfigError:
        raise
    except (ParameterError, ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from None

    if not isinstance(cfg["seed"], int):
        raise ConfigError("seed must be an integer")
    init = cfg["initial"]
    if init["kind"] not in ("gaussian", "snapshot"):
        raise ConfigError("initial.kind must be 'gaussian' or 'snapshot'")
    if init["kind"] == "snapshot":
        if not init["path"]:
            raise ConfigError("initial.path is required for a snapshot initial state")
        path = Path(init["path"])
        if not path.exists() or not Path(str(path) + ".json").exists():
            raise ConfigError(f"snapshot {path} (or its .json sidecar) does not exist")
    inst = cfg["instability"]
    for key in ("lam", "slack", "concavity_tol"):
        if not isinstance(inst[key], float):
            raise ConfigError(f"instability.{key} must be a number, got {inst[key]!r}")
    if not inst["lam"] > 0:
        raise ConfigError("instability.lam must be positive")
    if not (inst["slack"] >= 0 and inst["concavity_tol"] >= 0):
        raise ConfigError("instability.slack and instability.concavity_tol must be nonnegative")

    command = cfg["command"]
    if command == "sweep":
        sw = cfg["sweep"]
        if sw["command"] not in ("ground", "evolve", "instability"):
            raise ConfigError("sweep.command must be ground, evolve or instability")
        if sw["parameter"] not in SWEEP_PARAMETERS:
            raise ConfigError(f"sweep.parameter must be one of {tuple(SWEEP_PARAMETERS)}")
        values = sw["values"]
        if not isinstance(values, list) or not values:
            raise ConfigError("sweep.values must be a nonempty list")
        if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in values):
            raise ConfigError(f"sweep.values must be numbers, got {values!r}")
        if not isinstance(sw["workers"], int) or sw["workers"] < 1:
            raise ConfigError("sweep.workers must be a positive integer")
        command = sw["command"]
        for v in sw["values"]:
            section, key = SWEEP_PARAMETERS[sw["parameter"]]
            trial = copy.deepcopy(cfg)
            trial[section][key] = float(v)
            trial["command"] = command
            validate(trial)
    if command == "instability" and not params.instability_regime:
        raise ConfigError(
            f"instability needs p >= 1 + 4/(N-1) = {1 + 4 / (params.n_dims - 1):g}; "
            f"got p={params.p:g} with N={params.n_dims}")


def model_params(cfg: dict) -> ModelParams:
    m = cfg["model"]
    return ModelParams(int(m["n_dims"]), float(m["p"]), float(m["omega"]))


def grid_from(cfg: dict):
    g = cfg["grid"]
    return build_grid(cfg["model"]["n_dims"], g["points"], g["half_lengths"])


def ground_options(cfg: dict) -> GroundStateOptions:
    o = cfg["ground"]
    if o["preconditioner"] not in PRECONDITIONERS:
        raise ConfigError(f"ground.preconditioner must be one of {PRECONDITIONERS}")
    width = o["seed_width"]
    return GroundStateOptions(
        step_size=float(o["step_size"]), max_iters=int(o["max_iters"]),
        residual_tol=float(o["residual_tol"]), recenter_every=int(o["recenter_every"]),
        seed_width=tuple(width) if isinstance(width, list) else float(width),
        preconditioner=o["preconditioner"], min_step=float(o["min_step"]))


def evolve_options(cfg: dict) -> EvolveOptions:
    o = cfg["evolve"]
    return EvolveOptions(**{k: (bool(v) if isinstance(DEFAULTS["evolve"][k], bool) else float(v))
                            for k, v in o.items()})


def dump(cfg: dict) -> str:
    return yaml.safe_dump(cfg, sort_keys=True)
