"""Config-file parsing for the command line.

One JSON document describes an experiment, a bound query, output options,
and a seed.  Validation is strict: unknown keys are rejected with an error
message naming the offending key, before any work starts.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import processes, schedules
from .bounds import BoundQuery
from .engine import weight_rule_from_config
from .montecarlo import ExperimentSpec, standard_initial_conditions


class ConfigError(ValueError):
    """Invalid or incomplete configuration; the message names the key."""


_TOP_KEYS = {"experiment", "bounds", "output", "seed"}
_EXPERIMENT_KEYS = {
    "n", "process", "schedule", "weights", "initial_conditions",
    "horizon", "tol", "trials", "epsilon",
}
_BOUNDS_KEYS = {
    "n", "epsilon", "schedule", "eta", "q", "B", "interval_ends",
    "theta0", "basic_arc_count", "search_cap",
}
_OUTPUT_KEYS = {"out", "format", "dump_graphs"}


@dataclass
class OutputOptions:
    out: str | None = None
    format: str = "json"
    dump_graphs: bool = False


@dataclass
class Config:
    experiment: ExperimentSpec | None
    bounds: BoundQuery | None
    output: OutputOptions
    seed: int
    raw: dict


def _reject_unknown(section: str, obj: dict, allowed: set[str]) -> None:
    for key in obj:
        if key not in allowed:
            raise ConfigError(f"unknown key {key!r} in {section!r} section")


def _require(section: str, obj: dict, key: str):
    if key not in obj:
        raise ConfigError(f"missing key {key!r} in {section!r} section")
    return obj[key]


def _parse_experiment(obj: dict, seed: int) -> ExperimentSpec:
    if not isinstance(obj, dict):
        raise ConfigError("'experiment' section must be an object")
    _reject_unknown("experiment", obj, _EXPERIMENT_KEYS)
    n = _require("experiment", obj, "n")
    if not isinstance(n, int) or n < 1:
        raise ConfigError("'n' must be a positive integer")
    try:
        process = processes.from_config(_require("experiment", obj, "process"), n)
        schedule = schedules.from_config(_require("experiment", obj, "schedule"))
        rule = weight_rule_from_config(_require("experiment", obj, "weights"))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    ics_cfg = obj.get("initial_conditions", "standard")
    if ics_cfg == "standard":
        ics = standard_initial_conditions(n)
    elif isinstance(ics_cfg, dict) and ics_cfg:
        ics = {name: np.asarray(vals, dtype=float) for name, vals in ics_cfg.items()}
    else:
        raise ConfigError("'initial_conditions' must be \"standard\" or a nonempty name->vector object")

    try:
        return ExperimentSpec(
            process=process,
            schedule=schedule,
            rule=rule,
            initial_conditions=ics,
            horizon=_require("experiment", obj, "horizon"),
            tol=obj.get("tol", 1e-6),
            trials=_require("experiment", obj, "trials"),
            master_seed=seed,
            epsilon=obj.get("epsilon"),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _parse_bounds(obj: dict) -> BoundQuery:
    if not isinstance(obj, dict):
        raise ConfigError("'bounds' section must be an object")
    _reject_unknown("bounds", obj, _BOUNDS_KEYS)
    try:
        schedule = schedules.from_config(_require("bounds", obj, "schedule"))
        ends = obj.get("interval_ends")
        return BoundQuery(
            n=_require("bounds", obj, "n"),
            epsilon=_require("bounds", obj, "epsilon"),
            schedule=schedule,
            eta=_require("bounds", obj, "eta"),
            q=obj.get("q"),
            B=obj.get("B"),
            interval_ends=tuple(ends) if ends is not None else None,
            theta0=obj.get("theta0"),
            basic_arc_count=obj.get("basic_arc_count"),
            search_cap=obj.get("search_cap", 10_000_000),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _parse_output(obj: dict) -> OutputOptions:
    if not isinstance(obj, dict):
        raise ConfigError("'output' section must be an object")
    _reject_unknown("output", obj, _OUTPUT_KEYS)
    fmt = obj.get("format", "json")
    if fmt not in ("json", "csv"):
        raise ConfigError(f"'format' must be \"json\" or \"csv\", got {fmt!r}")
    return OutputOptions(out=obj.get("out"), format=fmt, dump_graphs=bool(obj.get("dump_graphs", False)))


def load_config(path: str | Path, *, seed_override: int | None = None) -> Config:
    """Read, schema-check, and materialize a config file."""
    try:
        raw = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError("config document must be a JSON object")
    _reject_unknown("top-level", raw, _TOP_KEYS)

    seed = seed_override if seed_override is not None else raw.get("seed", 0)
    if not isinstance(seed, int) or seed < 0:
        raise ConfigError("'seed' must be a nonnegative integer")

    experiment = _parse_experiment(raw["experiment"], seed) if "experiment" in raw else None
    bound_query = _parse_bounds(raw["bounds"]) if "bounds" in raw else None
    output = _parse_output(raw.get("output", {}))
    return Config(experiment=experiment, bounds=bound_query, output=output, seed=seed, raw=raw)
