"""Command-line front end: config-driven experiments, bound evaluation,
and randomized self-verification.

Exit codes: 0 success, 1 verification found a violation, 2 invalid
configuration or arguments, 3 runtime failure.  stdout carries only the
result payload; diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from pathlib import Path

from . import __version__, bounds as bounds_mod, verify as verify_mod
from .config import Config, ConfigError, load_config
from .engine import run_trial
from .montecarlo import SWEEP_PARAMS, run_experiment, sweep_parameter
from .rng import RngStream

_WHICH_BOUNDS = ("thm1", "thm5", "prop1", "prop2", "eq-a8", "conditions")

_BOUND_EVALUATORS = {
    "thm1": bounds_mod.tcom_lower_bound,
    "thm5": bounds_mod.tcom_upper_connectivity_independent,
    "prop1": bounds_mod.tcom_upper_uniform_joint,
    "prop2": bounds_mod.tcom_upper_bidirectional_joint,
    "eq-a8": bounds_mod.tcom_upper_arc_independent,
}


def _default_threads() -> int:
    env = os.environ.get("CONSENSUS_LAB_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


def _metadata(cfg: Config, threads: int) -> dict:
    canonical = json.dumps(cfg.raw, sort_keys=True, separators=(",", ":"))
    return {
        "version": __version__,
        "seed": cfg.seed,
        "threads": threads,
        "spec_hash": hashlib.sha256(canonical.encode()).hexdigest(),
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
    }


def _emit(args, cfg: Config, payload_json: dict, csv_text: str | None) -> None:
    fmt = args.format or cfg.output.format
    if fmt == "csv" and csv_text is not None:
        text = csv_text
    else:
        text = json.dumps(payload_json, indent=2) + "\n"
    out = args.out or cfg.output.out
    if out:
        Path(out).write_text(text)
        print(f"wrote {out}", file=sys.stderr)
    sys.stdout.write(text)


def _load(args) -> Config:
    if not args.config:
        raise ConfigError("--config is required for this subcommand")
    return load_config(args.config, seed_override=args.seed)


def _dump_graphs(cfg: Config, args, threads: int) -> None:
    """Replay every trial's graph draws to newline-delimited JSON.

    Streams are coordinate-keyed, so the replay consults exactly the
    graphs the estimation pass saw."""
    out = args.out or cfg.output.out
    if not out:
        raise ConfigError("--dump-graphs needs an output path (--out)")
    spec = cfg.experiment
    dump_path = Path(str(out) + ".graphs.ndjson")
    with dump_path.open("w") as fh:
        for ic_index, (name, x0) in enumerate(spec.initial_conditions.items()):
            for t in range(spec.trials):
                def write(k: int, g) -> None:
                    fh.write(json.dumps({"ic": name, "trial": t, "k": k, "graph": g.to_json()}) + "\n")
                run_trial(spec.process, spec.schedule, spec.rule, x0, spec.horizon,
                          spec.tol, RngStream(spec.master_seed).child(ic_index, t),
                          epsilon=spec.epsilon, record=False, on_graph=write)
    print(f"wrote {dump_path}", file=sys.stderr)


def cmd_simulate(args) -> int:
    cfg = _load(args)
    if cfg.experiment is None:
        raise ConfigError("simulate requires an 'experiment' section")
    threads = args.threads or _default_threads()
    result = run_experiment(cfg.experiment, threads=threads)
    payload = {"metadata": _metadata(cfg, threads), "results": result.to_json()}
    lines = ["ic,p_hat,ci_low,ci_high,trials,n_hit,tcom"]
    for name, est in result.consensus.items():
        tcom = ""
        if result.tcom is not None:
            t = result.tcom.per_ic[name]
            tcom = "censored" if t is None else str(t)
        lines.append(f"{name},{est.p_hat!r},{est.ci_low!r},{est.ci_high!r},{est.trials},{est.n_hit},{tcom}")
    _emit(args, cfg, payload, "\n".join(lines) + "\n")
    if args.dump_graphs or cfg.output.dump_graphs:
        _dump_graphs(cfg, args, threads)
    return 0


def cmd_sweep(args) -> int:
    cfg = _load(args)
    if cfg.experiment is None:
        raise ConfigError("sweep requires an 'experiment' section")
    if args.param not in SWEEP_PARAMS:
        raise ConfigError(f"unknown sweep parameter {args.param!r}; expected one of {SWEEP_PARAMS}")
    try:
        values = [float(v) for v in args.values.split(",") if v.strip() != ""]
    except ValueError:
        raise ConfigError(f"--values must be a comma-separated list of reals, got {args.values!r}") from None
    if not values:
        raise ConfigError("--values must list at least one value")
    threads = args.threads or _default_threads()
    try:
        points = sweep_parameter(cfg.experiment, args.param, values, threads=threads)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    payload = {"metadata": _metadata(cfg, threads), "results": [p.to_json() for p in points]}
    lines = ["param_value,p_hat,ci_low,ci_high,trials,censored_fraction"]
    for p in points:
        lines.append(f"{p.value!r},{p.p_hat!r},{p.ci_low!r},{p.ci_high!r},{p.trials},{p.censored_fraction!r}")
    _emit(args, cfg, payload, "\n".join(lines) + "\n")
    return 0


def cmd_bounds(args) -> int:
    cfg = _load(args)
    if cfg.bounds is None:
        raise ConfigError("bounds requires a 'bounds' section")
    if args.which == "conditions":
        payload = bounds_mod.conditions_report(cfg.bounds)
    else:
        evaluator = _BOUND_EVALUATORS[args.which]
        try:
            payload = evaluator(cfg.bounds).to_json()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    _emit(args, cfg, payload, None)
    return 0


def cmd_verify(args) -> int:
    try:
        report = verify_mod.run_suite(args.suite, args.cases, args.seed if args.seed is not None else 0)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    sys.stdout.write(json.dumps(report.to_json(), indent=2) + "\n")
    for v in report.violations:
        print(f"violation: {v}", file=sys.stderr)
    return 0 if report.passed else 1


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="path to the JSON config document")
    common.add_argument("--out", help="write the payload to this file as well as stdout")
    common.add_argument("--format", choices=("csv", "json"), help="payload format (default from config)")
    common.add_argument("--seed", type=int, help="master seed, overriding the config")
    common.add_argument("--threads", type=int,
                        help="worker count (default: CONSENSUS_LAB_THREADS or available parallelism); "
                             "results do not depend on it")
    common.add_argument("--dump-graphs", action="store_true",
                        help="also stream sampled graphs to <out>.graphs.ndjson")

    parser = argparse.ArgumentParser(prog="consensus-lab",
                                     description="randomized consensus over random graph processes")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", parents=[common],
                           help="estimate consensus probability (and convergence time when epsilon is set)")
    p_sim.set_defaults(func=cmd_simulate)

    p_sweep = sub.add_parser("sweep", parents=[common], help="re-run the experiment over a parameter grid")
    p_sweep.add_argument("--param", required=True, help=f"one of {', '.join(SWEEP_PARAMS)}")
    p_sweep.add_argument("--values", required=True, help="comma-separated list of parameter values")
    p_sweep.set_defaults(func=cmd_sweep)

    p_bounds = sub.add_parser("bounds", parents=[common], help="evaluate a convergence-time bound")
    p_bounds.add_argument("--which", required=True, choices=_WHICH_BOUNDS,
                          help="thm1: universal lower bound; thm5: connectivity-independent upper bound; "
                               "prop1: block-joint upper bound; prop2: bidirectional-joint upper bound; "
                               "eq-a8: arc-independent upper bound; conditions: divergence conditions")
    p_bounds.set_defaults(func=cmd_bounds)

    p_verify = sub.add_parser("verify", parents=[common], help="run a randomized invariant suite")
    p_verify.add_argument("--suite", required=True, choices=sorted(verify_mod.SUITES))
    p_verify.add_argument("--cases", type=int, default=200)
    p_verify.set_defaults(func=cmd_verify)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - boundary of the process
        print(f"runtime failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    raise SystemExit(main())
