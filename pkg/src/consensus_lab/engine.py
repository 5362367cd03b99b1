"""Bernoulli-gated averaging dynamics.

At every step each node flips an independent coin with success probability
P_k.  On success it replaces its state with a weighted average over its
in-neighbors plus itself; on failure it keeps its state.  Stacking the
per-node choices gives the matrix form x(k+1) = W(k) x(k), where row i of
W(k) is either the node's weight vector or the unit row e_i.

Arc direction convention: an arc (j, i) makes j a neighbor of i, i.e.
information flows along arcs.  Every node is always its own neighbor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, TextIO

import numpy as np

from .graphs import Digraph
from .matrices import StochasticMatrix
from .processes import GraphProcess
from .rng import RngStream
from .schedules import Schedule

# rng lanes under a trial's stream
_GRAPH_LANE = 0
_SUCCESS_LANE = 1

# dense recording up to here, then geometric subsampling
DENSE_RECORD_LIMIT = 10_000
_RECORD_GROWTH = 1.05

_SUCCESS_BLOCK = 4096


class EngineInvariantError(AssertionError):
    """A runtime dynamics invariant failed; indicates a genuine bug."""


@dataclass(frozen=True)
class WeightRule:
    """How a node spreads unit mass over its neighbor set.

    ``equal`` splits evenly over in-neighbors plus self.  ``self_confident``
    pins the self weight to ``a_star`` in (1/2, 1) and splits the rest
    evenly; a node with no in-neighbors keeps weight 1 on itself under
    either rule.  Every active weight is at least ``eta(n)``.
    """

    kind: str
    a_star: float | None = None

    def __post_init__(self):
        if self.kind not in ("equal", "self_confident"):
            raise ValueError(f"unknown weight rule kind {self.kind!r}")
        if self.kind == "self_confident":
            if self.a_star is None or not (0.5 < self.a_star < 1.0):
                raise ValueError(f"self-confident rule needs a_star in (1/2, 1), got {self.a_star}")
        elif self.a_star is not None:
            raise ValueError("a_star only applies to the self_confident rule")

    def eta(self, n: int) -> float:
        """Guaranteed lower bound on every active weight for node count n."""
        if n < 1:
            raise ValueError(f"node count must be >= 1, got {n}")
        if self.kind == "equal":
            return 1.0 / n
        if n == 1:
            return 1.0
        return min(self.a_star, (1.0 - self.a_star) / (n - 1))

    def to_config(self) -> dict:
        if self.kind == "equal":
            return {"kind": "equal"}
        return {"kind": "self_confident", "a_star": self.a_star}


EQUAL_WEIGHTS = WeightRule("equal")


def weight_rule_from_config(obj: dict) -> WeightRule:
    cfg = dict(obj)
    kind = cfg.pop("kind", None)
    a_star = cfg.pop("a_star", None)
    if cfg:
        raise ValueError(f"unknown weights key {sorted(cfg)[0]!r}")
    return WeightRule(kind, a_star)


def consensus_measure(x: np.ndarray) -> float:
    """Spread of the state vector: max entry minus min entry."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or len(x) < 1:
        raise ValueError("state must be a nonempty vector")
    return float(x.max() - x.min())


def build_weights(g: Digraph, rule: WeightRule) -> np.ndarray:
    """Averaging matrix: row i holds node i's weights over its in-neighbors
    plus itself, zeros elsewhere.  Rows sum to 1 and every nonzero entry is
    at least ``rule.eta(n)``."""
    n = g.n
    a = np.zeros((n, n))
    for i in range(1, n + 1):
        nbrs = g.in_neighbors(i)
        row = a[i - 1]
        if not nbrs:
            row[i - 1] = 1.0
        elif rule.kind == "equal":
            w = 1.0 / (len(nbrs) + 1)
            row[i - 1] = w
            for j in nbrs:
                row[j - 1] = w
        else:
            row[i - 1] = rule.a_star
            w = (1.0 - rule.a_star) / len(nbrs)
            for j in nbrs:
                row[j - 1] = w
    return a


def step(
    x: np.ndarray, g: Digraph, rule: WeightRule, success: np.ndarray
) -> tuple[np.ndarray, StochasticMatrix]:
    """One synchronous update given the per-node success draws.

    Nodes with ``success[i]`` average; the rest stick.  Returns the new
    state and the realized update matrix W (averaging rows for successes,
    unit rows for the rest), with ``x_new = W @ x`` up to the clip below.
    Convex combinations can overshoot [min x, max x] by an ulp in floating
    point; the result is clipped back so the spread is exactly monotone.
    """
    x = np.asarray(x, dtype=float)
    success = np.asarray(success, dtype=bool)
    if len(success) != g.n or len(x) != g.n:
        raise ValueError("state/success length must equal the node count")
    a = build_weights(g, rule)
    w = np.where(success[:, None], a, np.eye(g.n))
    x_new = w @ x
    np.clip(x_new, x.min(), x.max(), out=x_new)
    return x_new, StochasticMatrix(w)


@dataclass
class TrialRecord:
    """One simulated trajectory.

    ``record_ks`` is the recording grid (dense up to 10^4 steps, then
    geometrically subsampled); ``h_seq`` holds the spread at those times and
    ``psi_seq`` the at-least-one-node-updated indicator.  ``hit_time`` is the
    first k with spread <= tol * initial spread (checked at every step, not
    just recorded ones); ``eps_time`` is the first k with spread strictly
    below epsilon * initial spread when an epsilon was requested.
    """

    record_ks: np.ndarray
    h_seq: np.ndarray
    psi_seq: np.ndarray
    hit_time: int | None
    eps_time: int | None
    final_state: np.ndarray
    horizon: int
    tol: float
    epsilon: float | None
    h0: float
    psi_count: int
    steps_run: int
    checks: int

    def to_json(self) -> dict:
        return {
            "horizon": self.horizon,
            "tol": self.tol,
            "epsilon": self.epsilon,
            "h0": self.h0,
            "hit_time": self.hit_time,
            "eps_time": self.eps_time,
            "psi_count": self.psi_count,
            "steps_run": self.steps_run,
            "checks": self.checks,
            "final_state": list(self.final_state),
            "record_ks": [int(k) for k in self.record_ks],
            "h_seq": list(self.h_seq),
            "psi_seq": [int(p) for p in self.psi_seq],
        }

    def write_csv(self, f: TextIO) -> None:
        f.write("k,H,psi\n")
        for k, h, p in zip(self.record_ks, self.h_seq, self.psi_seq):
            f.write(f"{int(k)},{h!r},{int(p)}\n")


def record_grid(horizon: int) -> np.ndarray:
    """Recording times: every step up to the dense limit, then indices
    growing by 5% per record, always ending at the horizon."""
    if horizon <= DENSE_RECORD_LIMIT:
        return np.arange(horizon + 1, dtype=np.int64)
    ks = list(range(DENSE_RECORD_LIMIT + 1))
    k = DENSE_RECORD_LIMIT
    while k < horizon:
        k = min(math.ceil(k * _RECORD_GROWTH), horizon)
        ks.append(k)
    return np.asarray(ks, dtype=np.int64)


def run_trial(
    process: GraphProcess,
    schedule: Schedule,
    rule: WeightRule,
    x0: np.ndarray,
    horizon: int,
    tol: float,
    rng: RngStream,
    *,
    epsilon: float | None = None,
    record: bool = True,
    check_invariants: bool = False,
    on_graph: Callable[[int, Digraph], None] | None = None,
) -> TrialRecord:
    """Simulate one trajectory of the gated averaging dynamics.

    ``rng`` must be scoped to this trial; graph draws and per-node success
    draws use disjoint sub-streams, so they are mutually independent and
    the whole trajectory is a pure function of (inputs, rng coordinates).
    Steps where no node succeeds leave the state untouched and are skipped
    wholesale.  With ``record=False`` only hit times and counters are kept
    and the trial stops as soon as they are determined.

    With ``check_invariants=True`` every update is verified on the spot:
    stochastic rows with active entries >= eta, agreement between the
    direct update and the matrix form, monotone spread, and under the
    self-confident rule the per-step and cumulative contraction floors.
    Violations raise EngineInvariantError.
    """
    if horizon < 1:
        raise ValueError(f"horizon must be >= 1, got {horizon}")
    if not 0 < tol < 1:
        raise ValueError(f"tol must be in (0, 1), got {tol}")
    if epsilon is not None and not 0 < epsilon < 1:
        raise ValueError(f"epsilon must be in (0, 1), got {epsilon}")
    n = process.n
    x = np.array(x0, dtype=float)
    if x.shape != (n,):
        raise ValueError(f"initial state must have length {n}")
    if not np.all(np.isfinite(x)):
        raise ValueError("initial state must be finite")

    h0 = consensus_measure(x)
    cur_h = h0
    hit_time: int | None = 0 if h0 <= tol * h0 else None  # equivalent to h0 == 0
    eps_time: int | None = None
    if epsilon is not None and h0 == 0.0:
        eps_time = 0

    grid = record_grid(horizon) if record else np.asarray([0, horizon], dtype=np.int64)
    h_seq = np.empty(len(grid))
    psi_seq = np.zeros(len(grid), dtype=np.uint8)
    gi = 0

    succ_gen = rng.child(_SUCCESS_LANE).generator()
    graph_stream = rng.child(_GRAPH_LANE)

    eta = rule.eta(n)
    floor = 2.0 * rule.a_star - 1.0 if rule.kind == "self_confident" else None
    floor_pow = 1.0
    psi_count = 0
    checks = 0
    steps_run = horizon

    def fill(limit_k: int, psi_block: np.ndarray | None, block_start: int) -> None:
        """Record cur_h (and the step's psi) for grid points <= limit_k."""
        nonlocal gi
        while gi < len(grid) and grid[gi] <= limit_k:
            h_seq[gi] = cur_h
            gk = grid[gi]
            if psi_block is not None and gk < horizon and gk >= block_start:
                psi_seq[gi] = bool(psi_block[gk - block_start])
            gi += 1

    done = False
    k0 = 0
    while k0 < horizon and not done:
        m = min(_SUCCESS_BLOCK, horizon - k0)
        u = succ_gen.random((_SUCCESS_BLOCK, n))[:m]
        ks = np.arange(k0, k0 + m, dtype=np.int64)
        p = schedule.values(ks)
        succ = u < p[:, None]
        psi_block = succ.any(axis=1)
        for a_rel in np.flatnonzero(psi_block):
            k = k0 + int(a_rel)
            if record:
                fill(k, psi_block, k0)
            g = process.sample(k, graph_stream)
            if on_graph is not None:
                on_graph(k, g)
            success = succ[a_rel]
            x_new, w = step(x, g, rule, success)
            new_h = consensus_measure(x_new)
            psi_count += 1
            if check_invariants:
                checks += 1
                _check_step(x, x_new, w, g, rule, success, eta, cur_h, new_h, floor)
            if floor is not None:
                floor_pow *= floor
                if check_invariants and new_h < floor_pow * h0:
                    raise EngineInvariantError(
                        f"cumulative contraction floor violated at step {k}: "
                        f"{new_h!r} < {floor_pow * h0!r}"
                    )
            x = x_new
            cur_h = new_h
            if hit_time is None and cur_h <= tol * h0:
                hit_time = k + 1
            if epsilon is not None and eps_time is None and cur_h < epsilon * h0:
                eps_time = k + 1
            if not record and hit_time is not None and (epsilon is None or eps_time is not None):
                steps_run = k + 1
                done = True
                break
        if record:
            fill(k0 + m - 1, psi_block, k0)
        k0 += m

    if record:
        fill(horizon, None, 0)
    else:
        h_seq[:] = (h0, cur_h)
    return TrialRecord(
        record_ks=grid,
        h_seq=h_seq,
        psi_seq=psi_seq,
        hit_time=hit_time,
        eps_time=eps_time,
        final_state=x,
        horizon=horizon,
        tol=tol,
        epsilon=epsilon,
        h0=h0,
        psi_count=psi_count,
        steps_run=steps_run,
        checks=checks,
    )


def _direct_update(x: np.ndarray, g: Digraph, rule: WeightRule, success: np.ndarray) -> np.ndarray:
    """Per-node evaluation of the update, independent of the matrix path."""
    n = g.n
    out = np.empty(n)
    for i in range(1, n + 1):
        if not success[i - 1]:
            out[i - 1] = x[i - 1]
            continue
        nbrs = g.in_neighbors(i)
        if not nbrs:
            out[i - 1] = x[i - 1]
            continue
        if rule.kind == "equal":
            w_self = w_nbr = 1.0 / (len(nbrs) + 1)
        else:
            w_self = rule.a_star
            w_nbr = (1.0 - rule.a_star) / len(nbrs)
        acc = w_self * x[i - 1]
        for j in nbrs:
            acc += w_nbr * x[j - 1]
        out[i - 1] = acc
    return out


def _check_step(x, x_new, w, g, rule, success, eta, cur_h, new_h, floor) -> None:
    """Invariant battery for one realized update; raises on violation."""
    wm = w.entries
    row_err = np.abs(wm.sum(axis=1) - 1.0).max()
    if row_err > 1e-12:
        raise EngineInvariantError(f"W row sums off by {row_err:.3e}")
    nz = wm[wm > 0]
    if nz.min() < eta - 1e-12:
        raise EngineInvariantError(f"active weight {nz.min()!r} below eta={eta!r}")
    direct = _direct_update(x, g, rule, success)
    scale = max(1.0, float(np.abs(x).max()))
    if np.abs(direct - wm @ x).max() > 1e-12 * scale:
        raise EngineInvariantError("direct update disagrees with matrix form")
    if np.abs(direct - x_new).max() > 1e-12 * scale:
        raise EngineInvariantError("returned state disagrees with direct update")
    if x_new.max() > x.max() or x_new.min() < x.min():
        raise EngineInvariantError("max increased or min decreased")
    if new_h > cur_h:
        raise EngineInvariantError(f"spread increased: {new_h!r} > {cur_h!r}")
    if floor is not None and new_h < floor * cur_h - 1e-12:
        raise EngineInvariantError(
            f"per-step contraction floor violated: {new_h!r} < {floor} * {cur_h!r}"
        )
