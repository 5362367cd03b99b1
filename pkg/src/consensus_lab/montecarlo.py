"""Monte Carlo harness: consensus-probability estimates, empirical
convergence times, and threshold sweeps.

Trials are embarrassingly parallel.  Every trial draws from its own
coordinate-keyed stream and results are reduced by trial index, so the
numbers coming out are bit-identical no matter how many workers ran them.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .engine import WeightRule, consensus_measure, run_trial
from .processes import GraphProcess
from .rng import RngStream
from .schedules import PowerDecaySchedule, Schedule
from .stats import wilson_interval

# fraction of trials rerun with the full invariant battery switched on
SPOT_CHECK_STRIDE = 100


def standard_initial_conditions(n: int) -> dict[str, np.ndarray]:
    """Fixed spread-pattern dictionary standing in for the worst case over
    all initial conditions: a single raised node, an alternating split, and
    a linear ramp."""
    if n < 1:
        raise ValueError("need at least one node")
    indicator = np.zeros(n)
    indicator[0] = 1.0
    alternating = np.array([1.0 if i % 2 == 0 else -1.0 for i in range(n)])
    ramp = np.linspace(0.0, 1.0, n)
    return {"indicator": indicator, "alternating": alternating, "ramp": ramp}


@dataclass
class ExperimentSpec:
    """Everything one experiment needs, including its master seed."""

    process: GraphProcess
    schedule: Schedule
    rule: WeightRule
    initial_conditions: dict[str, np.ndarray]
    horizon: int
    tol: float
    trials: int
    master_seed: int
    epsilon: float | None = None

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")
        if self.horizon < 1:
            raise ValueError(f"horizon must be >= 1, got {self.horizon}")
        if not 0 < self.tol < 1:
            raise ValueError(f"tol must be in (0, 1), got {self.tol}")
        if self.epsilon is not None and not 0 < self.epsilon < 1:
            raise ValueError(f"epsilon must be in (0, 1), got {self.epsilon}")
        if not self.initial_conditions:
            raise ValueError("need at least one initial condition")
        ics = {}
        spread = 0.0
        for name, x0 in self.initial_conditions.items():
            arr = np.asarray(x0, dtype=float)
            if arr.shape != (self.process.n,):
                raise ValueError(f"initial condition {name!r} must have length {self.process.n}")
            ics[name] = arr
            spread = max(spread, consensus_measure(arr))
        if spread <= 0:
            raise ValueError("at least one initial condition must have positive spread")
        self.initial_conditions = ics


@dataclass(frozen=True)
class ConsensusEstimate:
    """Fraction of trials whose spread fell below tol * initial spread."""

    p_hat: float
    ci_low: float
    ci_high: float
    trials: int
    n_hit: int

    def to_json(self) -> dict:
        return {
            "p_hat": self.p_hat,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "trials": self.trials,
            "n_hit": self.n_hit,
        }


@dataclass(frozen=True)
class TcomEstimate:
    """Empirical epsilon-computation time: per initial condition, the first
    recorded step at which the fraction of trials still spread out (relative
    spread >= epsilon) drops to epsilon or below; the headline number is the
    max over the dictionary.  None marks a censored estimate (never happened
    within the horizon)."""

    epsilon: float
    per_ic: dict[str, int | None]
    t_max: int | None
    censored: bool

    def to_json(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "per_ic": dict(self.per_ic),
            "t_max": self.t_max,
            "censored": self.censored,
        }


@dataclass(frozen=True)
class SweepPoint:
    param: str
    value: float
    p_hat: float
    ci_low: float
    ci_high: float
    trials: int
    censored_fraction: float

    def to_json(self) -> dict:
        return {
            "param": self.param,
            "value": self.value,
            "p_hat": self.p_hat,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "trials": self.trials,
            "censored_fraction": self.censored_fraction,
        }


def _run_trial_span(spec: ExperimentSpec, ic_index: int, x0: np.ndarray,
                    t_lo: int, t_hi: int) -> list[tuple[int, int | None, int | None]]:
    """Trial summaries (index, hit_time, eps_time) for one index span."""
    root = RngStream(spec.master_seed)
    out = []
    for t in range(t_lo, t_hi):
        rec = run_trial(
            spec.process,
            spec.schedule,
            spec.rule,
            x0,
            spec.horizon,
            spec.tol,
            root.child(ic_index, t),
            epsilon=spec.epsilon,
            record=False,
            check_invariants=(t % SPOT_CHECK_STRIDE == 0),
        )
        out.append((t, rec.hit_time, rec.eps_time))
    return out


def _collect(spec: ExperimentSpec, threads: int = 1) -> dict[str, list[tuple[int, int | None, int | None]]]:
    """All trial summaries, keyed by initial condition, ordered by trial
    index regardless of how the work was scheduled."""
    jobs = []
    for ic_index, (name, x0) in enumerate(spec.initial_conditions.items()):
        if threads > 1:
            span = max(1, math.ceil(spec.trials / (threads * 4)))
        else:
            span = spec.trials
        for lo in range(0, spec.trials, span):
            jobs.append((name, ic_index, x0, lo, min(lo + span, spec.trials)))

    results: dict[str, list] = {name: [] for name in spec.initial_conditions}
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            futures = [(name, pool.submit(_run_trial_span, spec, ic_index, x0, lo, hi))
                       for name, ic_index, x0, lo, hi in jobs]
            for name, fut in futures:
                results[name].extend(fut.result())
    else:
        for name, ic_index, x0, lo, hi in jobs:
            results[name].extend(_run_trial_span(spec, ic_index, x0, lo, hi))
    for name in results:
        results[name].sort(key=lambda row: row[0])
    return results


def _consensus_estimate(rows: list[tuple[int, int | None, int | None]]) -> ConsensusEstimate:
    n_hit = sum(1 for _, hit, _ in rows if hit is not None)
    trials = len(rows)
    lo, hi = wilson_interval(n_hit, trials)
    return ConsensusEstimate(p_hat=n_hit / trials, ci_low=lo, ci_high=hi, trials=trials, n_hit=n_hit)


def estimate_consensus_probability(spec: ExperimentSpec, *, threads: int = 1) -> dict[str, ConsensusEstimate]:
    """Per initial condition, the fraction of trials reaching spread
    <= tol * initial spread within the horizon, with a 95% Wilson interval."""
    return {name: _consensus_estimate(rows) for name, rows in _collect(spec, threads).items()}


def _tcom_from_times(times: list[int | None], epsilon: float, trials: int) -> int | None:
    """Smallest k at which at most epsilon * trials trajectories still have
    relative spread >= epsilon.  Monotone spread makes this an order
    statistic of the per-trial first-crossing times."""
    allowed = math.floor(epsilon * trials)
    finite = sorted(t for t in times if t is not None)
    want = trials - allowed  # need this many crossings by time k
    if len(finite) < want:
        return None
    return finite[want - 1] if want >= 1 else 0


def estimate_tcom(spec: ExperimentSpec, *, threads: int = 1) -> TcomEstimate:
    """Empirical epsilon-computation time over the initial-condition
    dictionary; requires ``spec.epsilon``."""
    if spec.epsilon is None:
        raise ValueError("estimate_tcom requires spec.epsilon")
    collected = _collect(spec, threads)
    per_ic: dict[str, int | None] = {}
    for name, rows in collected.items():
        per_ic[name] = _tcom_from_times([eps for _, _, eps in rows], spec.epsilon, len(rows))
    censored = any(v is None for v in per_ic.values())
    t_max = None if censored else max(per_ic.values())
    return TcomEstimate(epsilon=spec.epsilon, per_ic=per_ic, t_max=t_max, censored=censored)


@dataclass(frozen=True)
class ExperimentResult:
    """Combined output of one simulate run."""

    consensus: dict[str, ConsensusEstimate]
    tcom: TcomEstimate | None

    def to_json(self) -> dict:
        out = {"consensus": {name: est.to_json() for name, est in self.consensus.items()}}
        out["tcom"] = self.tcom.to_json() if self.tcom is not None else None
        return out


def run_experiment(spec: ExperimentSpec, *, threads: int = 1) -> ExperimentResult:
    """One pass over the trials serving both estimates."""
    collected = _collect(spec, threads)
    consensus = {name: _consensus_estimate(rows) for name, rows in collected.items()}
    tcom = None
    if spec.epsilon is not None:
        per_ic = {
            name: _tcom_from_times([eps for _, _, eps in rows], spec.epsilon, len(rows))
            for name, rows in collected.items()
        }
        censored = any(v is None for v in per_ic.values())
        t_max = None if censored else max(per_ic.values())
        tcom = TcomEstimate(epsilon=spec.epsilon, per_ic=per_ic, t_max=t_max, censored=censored)
    return ExperimentResult(consensus=consensus, tcom=tcom)


def _with_param(spec: ExperimentSpec, param: str, value: float) -> ExperimentSpec:
    """Copy of the spec with one tunable replaced."""
    if param in ("beta", "c"):
        sched = spec.schedule
        if not isinstance(sched, PowerDecaySchedule):
            raise ValueError(f"sweeping {param!r} requires a power_decay schedule")
        return replace(spec, schedule=replace(sched, **{param: value}))
    if param == "epsilon":
        return replace(spec, epsilon=value)
    if param == "a_star":
        return replace(spec, rule=WeightRule("self_confident", a_star=value))
    if param == "q":
        if not hasattr(spec.process, "q"):
            raise ValueError("process has no q parameter")
        return replace(spec, process=replace(spec.process, q=value))
    if param == "theta0":
        if not hasattr(spec.process, "theta"):
            raise ValueError("process has no arc probabilities")
        return replace(spec, process=replace(spec.process, theta=value, theta_floor=value))
    raise ValueError(f"unknown sweep parameter {param!r}")


SWEEP_PARAMS = ("beta", "c", "q", "theta0", "a_star", "epsilon")


def sweep_parameter(spec: ExperimentSpec, param: str, values: list[float], *, threads: int = 1) -> list[SweepPoint]:
    """Consensus probability at each parameter value, trials pooled over
    the initial-condition dictionary, output sorted by value."""
    if param not in SWEEP_PARAMS:
        raise ValueError(f"unknown sweep parameter {param!r}; expected one of {SWEEP_PARAMS}")
    if not values:
        raise ValueError("sweep needs at least one value")
    points = []
    for v in sorted(values):
        sub = _with_param(spec, param, float(v))
        collected = _collect(sub, threads)
        pooled = [row for rows in collected.values() for row in rows]
        est = _consensus_estimate(pooled)
        points.append(
            SweepPoint(
                param=param,
                value=float(v),
                p_hat=est.p_hat,
                ci_low=est.ci_low,
                ci_high=est.ci_high,
                trials=est.trials,
                censored_fraction=1.0 - est.p_hat,
            )
        )
    return points


def threshold_sweep(spec: ExperimentSpec, betas: list[float], *, threads: int = 1) -> list[SweepPoint]:
    """Consensus probability across decay exponents: the zero-one picture."""
    return sweep_parameter(spec, "beta", betas, threads=threads)
