"""Versioned JSON experiment configurations.

Each command has a flat table of recognised keys with defaults. Unknown keys,
wrong types and physically meaningless values raise :class:`ConfigError`
before any computation starts.
"""

from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path

from .errors import ConfigError

SCHEMA_VERSION = 1
COMMANDS = ("place", "minimize", "gamma", "phase-diagram", "audit")

_NUM = (int, float)

_DENSITY = {"kind": "uniform_disk", "center": [0.0, 0.0], "radius": 0.45}

# key -> (accepted types, default)
_COMMON = {
    "schema_version": (int, SCHEMA_VERSION),
    "command": (str, None),
    "seed": (int, 0),
    "output_dir": (str, None),
}

_SCHEMAS = {
    "place": {
        "density": (dict, {"kind": "uniform"}),
        "epsilons": (list, [0.1, 0.05, 0.025]),
        "mass": (_NUM, 0.0),
        "grid_resolution": (int, 1024),
    },
    "minimize": {
        "epsilon": (_NUM, 0.04),
        "sigma": (_NUM, 0.0),
        "mass": (_NUM, 0.0),
        "r": (_NUM, 0.45),
        "grid": (int, 256),
        "density": ((dict, type(None)), None),
        "coefficients": (str, "calibrated"),
        "init": (dict, {"kind": "random", "amplitude": 0.1}),
        "stepping": (str, "semi-implicit-spectral"),
        "time_step": (_NUM, 1e-3),
        "max_steps": (int, 5000),
        "stop_tolerance": (_NUM, 1e-8),
        "snapshot_every": (int, 0),
        "seeds": ((list, type(None)), None),
    },
    "gamma": {
        "pattern": (str, "lamellar"),
        "epsilons": (list, [0.04, 0.02, 0.01]),
        "sigma": (_NUM, 0.0),
        "mass": (_NUM, 0.0),
        "r": (_NUM, 0.45),
        "density": ((dict, type(None)), None),
        "resolution": (int, 512),
        "rel_tol": (_NUM, 0.05),
    },
    "phase-diagram": {
        "mass": (_NUM, 0.0),
        "r": (_NUM, 0.45),
        "sigma_min": (_NUM, 0.0),
        "sigma_max": (_NUM, 4.0),
        "sigma_step": (_NUM, 0.05),
        "battery_sigma": ((int, float, type(None)), None),
        "large_sigma": (list, [3.0]),
        "figures": (bool, True),
    },
    "audit": {
        "source": (dict, {"kind": "pattern", "pattern": {"kind": "disk", "center": [0.0, 0.0],
                                                          "radius": 1 / math.sqrt(2 * math.pi)}}),
        "sigma": (_NUM, 1.0),
        "r": (_NUM, 0.45),
        "mass": (_NUM, 0.0),
        "density": ((dict, type(None)), None),
        "window": (int, 8),
        "vertex_spacing": (_NUM, 2e-3),
        "exclusion_radius": ((int, float, type(None)), None),
        "convention": (str, "both"),
        "rel_tol": (_NUM, 0.05),
        "per_vertex_csv": (bool, False),
    },
}


class ExperimentConfig(dict):
    """Validated configuration: a dict with attribute access and a stable hash."""

    def __getattr__(self, key):
        try:
            return self[key]
        except KeyError as exc:
            raise AttributeError(key) from exc

    @property
    def canonical(self) -> str:
        return json.dumps(self, sort_keys=True, separators=(",", ":"))

    @property
    def digest(self) -> str:
        return hashlib.sha256(self.canonical.encode()).hexdigest()


def _type_name(types):
    types = types if isinstance(types, tuple) else (types,)
    return "/".join("null" if t is type(None) else t.__name__ for t in types)


def _check_type(key, value, types):
    # bool is an int subclass; never accept it for numbers
    if isinstance(value, bool) and types is not bool and (
        not isinstance(types, tuple) or bool not in types
    ):
        raise ConfigError(f"{key}: expected {_type_name(types)}, got boolean")
    if not isinstance(value, types):
        raise ConfigError(f"{key}: expected {_type_name(types)}, got {type(value).__name__}")


def _check_mass(m, *, sharp_window=False):
    if not -1.0 < m < 1.0:
        raise ConfigError(f"mass m = {m} violates the constraint m in (-1, 1)")
    if sharp_window and not 0.0 <= m < 1.0 - 2.0 / math.pi:
        raise ConfigError(f"mass m = {m} violates the constraint m in [0, 1 - 2/pi)")


def _check_radius(r, m):
    lo = math.sqrt((1 + m) / (2 * math.pi))
    if not lo < r < 0.5:
        raise ConfigError(f"r = {r} violates the constraint sqrt((1+m)/(2 pi)) = {lo:.5f} < r < 1/2")


def _check_density(d, key="density"):
    kind = d.get("kind")
    allowed = {"uniform": {"kind", "clamp"},
               "uniform_disk": {"kind", "center", "radius", "clamp"}}
    if kind not in allowed:
        raise ConfigError(f"{key}.kind must be one of {sorted(allowed)}")
    extra = set(d) - allowed[kind]
    if extra:
        raise ConfigError(f"{key}: unknown keys {sorted(extra)}")
    if kind == "uniform_disk":
        radius = d.get("radius", 0.45)
        if not 0 < radius < 0.5:
            raise ConfigError(f"{key}.radius must lie in (0, 1/2)")


def _check_epsilons(eps, key="epsilons"):
    if not eps or not all(isinstance(e, _NUM) and not isinstance(e, bool) for e in eps):
        raise ConfigError(f"{key} must be a non-empty list of numbers")
    if any(e <= 0 for e in eps):
        raise ConfigError(f"{key} must be positive")
    if any(b >= a for a, b in zip(eps, eps[1:])):
        raise ConfigError(f"{key} must be strictly decreasing")


def _validate(cmd, c):
    if cmd == "place":
        _check_density(c["density"])
        _check_epsilons(c["epsilons"])
        _check_mass(c["mass"])
        if c["grid_resolution"] < 16 or c["grid_resolution"] & (c["grid_resolution"] - 1):
            raise ConfigError("grid_resolution must be a power of two >= 16")
    elif cmd == "minimize":
        _check_mass(c["mass"])
        if c["epsilon"] <= 0 or c["sigma"] < 0 or c["time_step"] <= 0:
            raise ConfigError("epsilon and time_step must be positive, sigma nonnegative")
        if c["grid"] < 16 or c["grid"] & (c["grid"] - 1):
            raise ConfigError("grid must be a power of two >= 16")
        if c["max_steps"] < 0 or c["snapshot_every"] < 0 or c["stop_tolerance"] < 0:
            raise ConfigError("max_steps, snapshot_every and stop_tolerance must be nonnegative")
        if c["coefficients"] not in ("calibrated", "literal"):
            raise ConfigError("coefficients must be 'calibrated' or 'literal'")
        if c["stepping"] not in ("semi-implicit-spectral", "explicit"):
            raise ConfigError("stepping must be 'semi-implicit-spectral' or 'explicit'")
        if c["sigma"] > 0 and c["density"] is None:
            c["density"] = dict(_DENSITY, radius=c["r"])
        if c["density"] is not None:
            _check_density(c["density"])
        init = c["init"]
        kinds = {"random": {"kind", "amplitude"}, "disk": {"kind", "center", "radius"},
                 "lamellar": {"kind", "center", "axis"}}
        if init.get("kind") not in kinds:
            raise ConfigError(f"init.kind must be one of {sorted(kinds)}")
        extra = set(init) - kinds[init["kind"]]
        if extra:
            raise ConfigError(f"init: unknown keys {sorted(extra)}")
        if c["seeds"] is not None and (not c["seeds"] or not all(
                isinstance(s, int) and not isinstance(s, bool) for s in c["seeds"])):
            raise ConfigError("seeds must be a non-empty list of integers")
    elif cmd == "gamma":
        if c["pattern"] not in ("lamellar", "disk"):
            raise ConfigError("pattern must be 'lamellar' or 'disk'")
        _check_epsilons(c["epsilons"])
        if c["sigma"] < 0:
            raise ConfigError("sigma must be nonnegative")
        if c["sigma"] > 0:
            _check_mass(c["mass"], sharp_window=True)
            _check_radius(c["r"], c["mass"])
            if c["density"] is None:
                c["density"] = dict(_DENSITY, radius=c["r"])
        else:
            _check_mass(c["mass"])
        if c["density"] is not None:
            _check_density(c["density"])
        if c["resolution"] < 16 or c["resolution"] & (c["resolution"] - 1):
            raise ConfigError("resolution must be a power of two >= 16")
    elif cmd == "phase-diagram":
        _check_mass(c["mass"], sharp_window=True)
        _check_radius(c["r"], c["mass"])
        if c["sigma_step"] <= 0 or c["sigma_max"] < c["sigma_min"] or c["sigma_min"] < 0:
            raise ConfigError("need 0 <= sigma_min <= sigma_max and sigma_step > 0")
        if any(not isinstance(s, _NUM) or s <= 0 for s in c["large_sigma"]):
            raise ConfigError("large_sigma must be a list of positive numbers")
    elif cmd == "audit":
        _check_mass(c["mass"])
        if c["sigma"] < 0:
            raise ConfigError("sigma must be nonnegative")
        if c["density"] is None:
            c["density"] = dict(_DENSITY, radius=c["r"])
        _check_density(c["density"])
        src = c["source"]
        kinds = {"pattern": {"kind", "pattern"}, "field": {"kind", "path"},
                 "critical_band_aid": {"kind", "sigmas"}, "best_lamellar": {"kind", "center"}}
        if src.get("kind") not in kinds:
            raise ConfigError(f"source.kind must be one of {sorted(kinds)}")
        extra = set(src) - kinds[src["kind"]]
        if extra:
            raise ConfigError(f"source: unknown keys {sorted(extra)}")
        if c["convention"] not in ("firstvar", "curv2d", "both"):
            raise ConfigError("convention must be 'firstvar', 'curv2d' or 'both'")
        if c["window"] < 1 or c["vertex_spacing"] <= 0:
            raise ConfigError("window and vertex_spacing must be positive")


def build_config(command: str, raw: dict | None = None) -> ExperimentConfig:
    """Fill defaults, reject unknown keys and validate physical constraints."""
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}")
    raw = dict(raw or {})
    schema = {**_COMMON, **_SCHEMAS[command]}
    unknown = sorted(set(raw) - set(schema))
    if unknown:
        raise ConfigError(f"unknown configuration keys: {', '.join(unknown)}")
    out = {}
    for key, (types, default) in schema.items():
        if key in raw:
            _check_type(key, raw[key], types)
            out[key] = json.loads(json.dumps(raw[key]))
        else:
            out[key] = json.loads(json.dumps(default))
    if out["schema_version"] != SCHEMA_VERSION:
        raise ConfigError(f"schema_version {out['schema_version']} is not supported "
                          f"(expected {SCHEMA_VERSION})")
    if out["command"] not in (None, command):
        raise ConfigError(f"config is for command {out['command']!r}, not {command!r}")
    out["command"] = command
    _validate(command, out)
    return ExperimentConfig(out)


def load_config(command: str, path=None, overrides: dict | None = None) -> ExperimentConfig:
    raw = {}
    if path is not None:
        try:
            raw = json.loads(Path(path).read_text())
        except FileNotFoundError as exc:
            raise ConfigError(f"config file {path} not found") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError("config file must hold a JSON object")
    raw.update({k: v for k, v in (overrides or {}).items() if v is not None})
    return build_config(command, raw)
