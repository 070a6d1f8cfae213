"""Experiment configuration: JSON schema, per-experiment defaults, validation.

A config names one experiment; every other field is optional and falls back
to the experiment's defaults. Unknown keys are rejected at every level.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import jsonschema

from .errors import ConfigError, FracsyncError
from .paths import HurstParameter, TimeGrid
from .suite import SystemSpec

__all__ = ["EXPERIMENTS", "SCHEMA", "DEFAULTS", "ExperimentConfig", "load_config", "parse_config"]

EXPERIMENTS = (
    "generate-fbm",
    "fou",
    "young",
    "equivalence",
    "contraction",
    "pullback",
    "sync-sweep",
    "averaged-sweep",
    "case-multiplicative",
    "case-mixed",
)

_num = {"type": "number"}
_vec = {"type": "array", "items": _num, "minItems": 1}
_pos_int = {"type": "integer", "minimum": 1}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "fracsync experiment config",
    "type": "object",
    "additionalProperties": False,
    "required": ["experiment"],
    "properties": {
        "experiment": {"enum": list(EXPERIMENTS)},
        "system": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "a1": _num,
                "a2": _num,
                "b1": _vec,
                "b2": _vec,
                "H1": _num,
                "H2": _num,
                "L": _num,
                "drift_f": {"enum": ["linear", "affine", "cubic-dissipative"]},
                "drift_g": {"enum": ["linear", "affine", "cubic-dissipative"]},
                "c_f": _vec,
                "c_g": _vec,
                "tail_length": _num,
            },
        },
        "grid": {
            "type": "object",
            "additionalProperties": False,
            "required": ["t0", "t1", "n"],
            "properties": {"t0": _num, "t1": _num, "n": _pos_int},
        },
        "kappas": {"type": "array", "items": _num, "minItems": 1},
        "seed": {"type": "integer", "minimum": 0},
        "trials": _pos_int,
        "output_dir": {"type": "string"},
        "options": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "H_list": {"type": "array", "items": _num, "minItems": 1},
                "regularity_n": _pos_int,
                "regularity_trials": _pos_int,
                "alpha": _num,
                "a": _num,
                "c": _num,
                "b_list": {"type": "array", "items": _vec, "minItems": 1},
                "x0": _num,
                "start_times": {"type": "array", "items": _num, "minItems": 1},
                "radius0": _num,
                "burn_fraction": _num,
                "rel_tol": _num,
            },
        },
    },
}

_SYNC = {"grid": {"t0": 0.0, "t1": 40.0, "n": 5120}, "kappas": [1.0, 10.0, 100.0], "trials": 50,
         "options": {"burn_fraction": 0.5, "rel_tol": 1e-6}}

DEFAULTS = {
    "generate-fbm": {"grid": {"t0": 0.0, "t1": 1.0, "n": 64}, "trials": 20000,
                     "options": {"H_list": [0.6, 0.75, 0.9], "regularity_n": 4096, "regularity_trials": 200}},
    "fou": {"grid": {"t0": 0.0, "t1": 500.0, "n": 8000}, "trials": 100},
    "young": {"grid": {"t0": 0.0, "t1": 1.0, "n": 4096}, "trials": 50, "options": {"alpha": 0.7}},
    "equivalence": {"grid": {"t0": 0.0, "t1": 1.0, "n": 4096}, "trials": 50,
                    "options": {"a": 1.0, "c": 1.0, "b_list": [[0.0], [1.0]], "x0": 0.5}},
    "contraction": {"grid": {"t0": 0.0, "t1": 20.0, "n": 2560}, "trials": 50},
    "pullback": {"grid": {"t0": -20.0, "t1": 0.0, "n": 2560}, "trials": 50,
                 "options": {"start_times": [-5.0, -10.0, -20.0], "radius0": 10.0}},
    "sync-sweep": _SYNC,
    "averaged-sweep": _SYNC,
    "case-multiplicative": {**_SYNC, "system": {"b1": [0.0, 0.0], "b2": [0.0, 0.0]}},
    "case-mixed": {**_SYNC, "system": {"a2": 0.0}},
}


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def _schema_field(err: jsonschema.ValidationError) -> str:
    path = [str(p) for p in err.absolute_path]
    if err.validator == "additionalProperties" and isinstance(err.instance, dict):
        allowed = set(err.schema.get("properties", {}))
        extra = sorted(set(err.instance) - allowed)
        if extra:
            path.append(extra[0])
    elif err.validator == "required":
        missing = [r for r in err.validator_value if r not in err.instance]
        if missing:
            path.append(missing[0])
    return ".".join(path) or "<root>"


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    system: SystemSpec
    grid: TimeGrid
    kappas: tuple = ()
    seed: int = 0
    trials: int = 1
    output_dir: str | None = None
    options: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        out = {
            "experiment": self.experiment,
            "system": self.system.to_json(),
            "grid": {"t0": self.grid.t0, "t1": self.grid.t1, "n": self.grid.n},
            "seed": self.seed,
            "trials": self.trials,
            "options": dict(sorted(self.options.items())),
        }
        if self.kappas:
            out["kappas"] = list(self.kappas)
        if self.output_dir is not None:
            out["output_dir"] = self.output_dir
        return out

    def with_seed(self, seed: int) -> "ExperimentConfig":
        return replace(self, seed=seed)


def _check(cond: bool, fieldname: str, msg: str) -> None:
    if not cond:
        raise ConfigError(msg, fieldname)


def _validate_domain(cfg: dict) -> None:
    sysd = cfg.get("system", {})
    for key in ("H1", "H2"):
        if key in sysd:
            try:
                HurstParameter.coerce(sysd[key])
            except FracsyncError as exc:
                raise ConfigError(str(exc), f"system.{key}") from None
    _check(sysd.get("a1", 1.0) != 0, "system.a1", "a1 must be nonzero")
    _check(sysd.get("L", 1.0) > 0, "system.L", "L must be positive")
    _check(sysd.get("tail_length", 20.0) > 0, "system.tail_length", "tail_length must be positive")
    g = cfg["grid"]
    _check(g["t1"] > g["t0"], "grid.t1", "t1 must exceed t0")
    ks = cfg.get("kappas", [])
    _check(all(k > 0 for k in ks), "kappas", "kappas must be positive")
    _check(list(ks) == sorted(set(ks)), "kappas", "kappas must be strictly increasing")
    opts = cfg.get("options", {})
    if "burn_fraction" in opts:
        _check(0 <= opts["burn_fraction"] < 1, "options.burn_fraction", "burn_fraction must lie in [0, 1)")
    if "alpha" in opts:
        _check(0.5 < opts["alpha"] < 1, "options.alpha", "alpha must lie in (1/2, 1)")
    if "start_times" in opts:
        _check(all(s < 0 for s in opts["start_times"]), "options.start_times", "start times must be negative")
        _check(min(opts["start_times"]) >= g["t0"] and g["t1"] == 0, "options.start_times",
               "start times must lie in the grid, which must end at 0")
    if "H_list" in opts:
        for H in opts["H_list"]:
            _check(0.5 < H < 1, "options.H_list", "every H must lie in (1/2, 1)")


def parse_config(raw: dict) -> ExperimentConfig:
    """Validate a raw config dict against the schema and domain rules."""
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(raw), key=lambda e: (len(list(e.absolute_path)), str(e.message)))
    if errors:
        raise ConfigError(errors[0].message, _schema_field(errors[0]))
    merged = _merge(DEFAULTS[raw["experiment"]], raw)
    merged.setdefault("seed", 0)
    merged.setdefault("kappas", [])
    _validate_domain(merged)
    try:
        system = SystemSpec(**{k: tuple(v) if isinstance(v, list) else v for k, v in merged.get("system", {}).items()})
        system.coeffs1, system.coeffs2, system.f, system.g  # noqa: B018 - construction validates
    except FracsyncError as exc:
        raise ConfigError(str(exc), "system") from None
    if merged["experiment"] in ("sync-sweep", "averaged-sweep", "case-multiplicative", "case-mixed"):
        _check(len(merged["kappas"]) > 0, "kappas", "coupled experiments need at least one kappa")
    if merged["experiment"] == "case-multiplicative":
        _check(not any(system.b1), "system.b1", "multiplicative case needs b1 = 0")
        _check(not any(system.b2), "system.b2", "multiplicative case needs b2 = 0")
        _check(system.a2 != 0, "system.a2", "multiplicative case needs a2 != 0")
    if merged["experiment"] == "case-mixed":
        _check(system.a2 == 0, "system.a2", "mixed case needs a2 = 0")
    g = merged["grid"]
    try:
        grid = TimeGrid(float(g["t0"]), float(g["t1"]), int(g["n"]))
    except FracsyncError as exc:
        raise ConfigError(str(exc), "grid") from None
    return ExperimentConfig(
        merged["experiment"],
        system,
        grid,
        tuple(float(k) for k in merged["kappas"]),
        int(merged["seed"]),
        int(merged["trials"]),
        merged.get("output_dir"),
        merged.get("options", {}),
    )


def load_config(path: str | Path) -> ExperimentConfig:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", str(path)) from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc.msg} at line {exc.lineno}", str(path)) from None
    if not isinstance(raw, dict):
        raise ConfigError("top level must be an object", "<root>")
    return parse_config(raw)
