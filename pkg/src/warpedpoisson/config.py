"""Run configuration: JSON schema, validation with key paths, and object builders."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np
from jsonschema import Draft202012Validator

from .errors import ConfigError
from .geometry import CustomProfile, ModelManifold, make_profile
from .poisson import RadialSource

_NUM = {"type": "number"}
_POS = {"type": "number", "exclusiveMinimum": 0}


def _obj(properties: dict, required: tuple = ()) -> dict:
    return {"type": "object", "properties": properties, "required": list(required),
            "additionalProperties": False}


MANIFOLD_SCHEMA = _obj({
    "family": {"enum": ["euclidean", "space_form", "power_exp", "cusp", "custom"]},
    "dimension": {"type": "integer", "minimum": 2},
    "r_max": _POS,
    "eps0": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
    "params": _obj({"gamma": {"type": "number", "minimum": 0}, "B": _POS,
                    "curvature": {"type": "number", "exclusiveMaximum": 0}}),
    "samples": _obj({k: {"type": "array", "items": _NUM, "minItems": 4}
                     for k in ("r", "phi", "dphi", "d2phi")}, ("r", "phi", "dphi", "d2phi")),
}, ("family",))

SOURCE_SCHEMA = _obj({
    "type": {"enum": ["power", "expdecay", "file"]},
    "alpha": _NUM,
    "c": _POS,
    "path": {"type": "string"},
}, ("type",))

SCHEMA = _obj({
    "manifold": MANIFOLD_SCHEMA,
    "spectrum": _obj({
        "domain": {"enum": ["exterior", "ess", "annulus", "whole"]},
        "R": {"type": "number", "minimum": 0},
        "R2": _POS,
        "h_fraction": _POS,
        "h_cap": _POS,
        "convergence_tol": _POS,
    }),
    "green": _obj({"kind": {"enum": ["minimal", "dirichlet", "parabolic"]}, "R": _POS,
                   "samples": {"type": "integer", "minimum": 2}}),
    "poisson": _obj({"source": SOURCE_SCHEMA, "grid_step": _POS, "r_out": _POS}),
    "criterion": _obj({
        "zeta": _obj({"type": {"enum": ["power", "constant"]}, "value": _NUM}, ("type", "value")),
        "jmax": {"type": "integer", "minimum": 9},
        "j0": {"type": "integer", "minimum": 2},
        "mode": {"enum": ["numerical", "barta"]},
    }),
    "verify": _obj({"suite": {"type": "string"}, "resolution": {"type": "integer", "minimum": 1}}),
    "sharpness": _obj({"gamma": {"type": "number", "minimum": 0}, "alpha_min": _NUM,
                       "alpha_max": _NUM, "step": _POS, "dimension": {"type": "integer", "minimum": 2},
                       "r_max": _POS}),
    "output": _obj({"json": {"type": "string"}, "csv": {"type": "string"}}),
    "deterministic": {"const": True},
})

_VALIDATOR = Draft202012Validator(SCHEMA)


def _error_path(err) -> str:
    parts = [str(p) for p in err.absolute_path]
    if err.validator == "additionalProperties" and isinstance(err.instance, dict):
        allowed = set(err.schema.get("properties", {}))
        extra = sorted(k for k in err.instance if k not in allowed)
        if extra:
            parts.append(extra[0])
    return ".".join(parts) or "<root>"


def validate(config: dict) -> dict:
    """Raise :class:`ConfigError` naming the key path of the first violation."""
    errors = sorted(_VALIDATOR.iter_errors(config), key=lambda e: (list(map(str, e.absolute_path)), e.message))
    if errors:
        err = errors[0]
        raise ConfigError(err.message, _error_path(err))
    return config


def load(path: str | Path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", str(path)) from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}",
                          str(path)) from None
    if not isinstance(data, dict):
        raise ConfigError("top level must be an object", "<root>")
    return validate(data)


def merge(base: dict, override: dict) -> dict:
    """Recursive merge; ``None`` values in ``override`` are ignored."""
    out = dict(base)
    for k, v in override.items():
        if v is None:
            continue
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = merge(out[k], v)
        elif isinstance(v, dict):
            sub = merge({}, v)
            if sub:
                out[k] = sub
        else:
            out[k] = v
    return out


def build_manifold(section: dict) -> ModelManifold:
    family = section["family"]
    n = section.get("dimension", 3)
    eps0 = section.get("eps0", 0.1)
    if family == "custom":
        s = section.get("samples")
        if s is None:
            raise ConfigError("custom family needs samples", "manifold.samples")
        warping = CustomProfile(s["r"], s["phi"], s["dphi"], s["d2phi"])
    else:
        warping = make_profile(family, r_max=section.get("r_max", 200.0), **section.get("params", {}))
    return ModelManifold(n, warping, eps0)


def read_samples(path: str | Path) -> tuple[np.ndarray, np.ndarray]:
    """Two-column CSV ``r,f`` with an optional header row."""
    rows = []
    try:
        with open(path, newline="") as fh:
            for k, row in enumerate(csv.reader(fh)):
                if not row:
                    continue
                try:
                    rows.append((float(row[0]), float(row[1])))
                except (ValueError, IndexError):
                    if k == 0:
                        continue
                    raise ConfigError(f"line {k + 1} is not a pair of numbers", "poisson.source.path")
    except OSError as exc:
        raise ConfigError(f"cannot read source file: {exc.strerror}", "poisson.source.path") from None
    data = np.array(rows, dtype=float).reshape(-1, 2)
    return data[:, 0], data[:, 1]


def build_source(section: dict) -> RadialSource:
    kind = section["type"]
    if kind == "power":
        if "alpha" not in section:
            raise ConfigError("power source needs alpha", "poisson.source.alpha")
        return RadialSource.power(section["alpha"])
    if kind == "expdecay":
        if "c" not in section:
            raise ConfigError("expdecay source needs c", "poisson.source.c")
        return RadialSource.expdecay(section["c"])
    if "path" not in section:
        raise ConfigError("file source needs path", "poisson.source.path")
    r, f = read_samples(section["path"])
    return RadialSource.sampled(r, f)
