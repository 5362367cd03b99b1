"""Seeded random graph processes.

A process is an immutable description; drawing the graph at time k is a
pure function of (description, k, stream), so draws are reproducible bit
for bit and safe to evaluate from concurrent workers.  The concrete
samplers are mixture constructions chosen so the class hypotheses hold
with known constants: a probability-q rooted draw (a uniformly random
arborescence, which always has a root) against an empty-graph filler, or
per-arc independent coins over a fixed basic graph.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np

from .graphs import Arc, Digraph, is_acyclic, is_quasi_strongly_connected, union
from .rng import RngStream
from .stats import lag1_autocorrelation, wilson_interval

GraphSampler = Callable[[int, np.random.Generator], Digraph]


# ---------------------------------------------------------------------------
# random graph constructors


def random_arborescence(n: int, gen: np.random.Generator) -> Digraph:
    """Random rooted tree: a random root, then each node in a random order
    attaches under a random earlier node.  Always has a root, hence is
    quasi-strongly connected, with exactly n-1 arcs."""
    order = gen.permutation(n) + 1
    arcs = []
    for pos in range(1, n):
        parent = order[gen.integers(0, pos)]
        arcs.append((int(parent), int(order[pos])))
    return Digraph(n, arcs)


def random_digraph(n: int, p: float, gen: np.random.Generator) -> Digraph:
    """Each of the n(n-1) ordered pairs present independently with prob p."""
    pairs = [(i, j) for i in range(1, n + 1) for j in range(1, n + 1) if i != j]
    present = gen.random(len(pairs)) < p
    return Digraph(n, (a for a, keep in zip(pairs, present) if keep))


def random_rooted_digraph(n: int, gen: np.random.Generator, extra_p: float = 0.2) -> Digraph:
    """Arborescence plus independent extra arcs; stays rooted at the
    arborescence's root."""
    base = random_arborescence(n, gen)
    extra = random_digraph(n, extra_p, gen)
    return union([base, extra])


def random_acyclic_rooted_digraph(n: int, gen: np.random.Generator, extra_p: float = 0.3) -> Digraph:
    """Random acyclic quasi-strongly connected graph.

    Nodes are laid out in a random topological order; every non-first node
    receives an arc from some earlier node (so the first node is a root)
    and further forward arcs are added independently.  All arcs point
    forward in the order, so no cycle can form.
    """
    order = gen.permutation(n) + 1
    arcs = set()
    for pos in range(1, n):
        parent = order[gen.integers(0, pos)]
        arcs.add((int(parent), int(order[pos])))
    for a in range(n):
        for b in range(a + 1, n):
            if gen.random() < extra_p:
                arcs.add((int(order[a]), int(order[b])))
    return Digraph(n, arcs)


def _empty_filler(n: int, gen: np.random.Generator) -> Digraph:
    return Digraph(n)


# ---------------------------------------------------------------------------
# process classes


@dataclass(frozen=True)
class GraphProcess:
    """Base class: a distribution over graphs for every time index."""

    n: int

    kind = "abstract"

    def sample(self, k: int, rng: RngStream) -> Digraph:
        """Graph at time k; pure in (self, k, rng)."""
        raise NotImplementedError

    def to_config(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class ArcIndependentProcess(GraphProcess):
    """Every arc of a fixed basic graph flips its own independent coin at
    every step; no other arc ever appears.

    ``theta`` is either one probability for all arcs or a per-arc map;
    every value must lie in [theta_floor, 1] with theta_floor > 0.
    """

    basic_graph: Digraph
    theta: float | Mapping[Arc, float] = 1.0
    theta_floor: float | None = None
    kind = "arc_independent"

    def __post_init__(self):
        if self.basic_graph.n != self.n:
            raise ValueError("basic graph node count disagrees with process n")
        arcs = sorted(self.basic_graph.arcs)
        if isinstance(self.theta, Mapping):
            missing = [a for a in arcs if a not in self.theta]
            if missing:
                raise ValueError(f"no arc probability given for basic arc {missing[0]}")
            thetas = np.array([float(self.theta[a]) for a in arcs])
        else:
            thetas = np.full(len(arcs), float(self.theta))
        floor = self.theta_floor
        if floor is None:
            floor = float(thetas.min()) if len(arcs) else 1.0
        if not 0 < floor <= 1:
            raise ValueError(f"theta floor must be in (0, 1], got {floor}")
        if len(arcs) and (np.any(thetas < floor) or np.any(thetas > 1)):
            raise ValueError("arc probabilities must lie in [theta_floor, 1]")
        object.__setattr__(self, "theta_floor", float(floor))
        object.__setattr__(self, "_arcs", tuple(arcs))
        object.__setattr__(self, "_thetas", thetas)

    @property
    def arc_count(self) -> int:
        return len(self._arcs)

    def sample(self, k: int, rng: RngStream) -> Digraph:
        u = rng.child(k).uniforms(len(self._arcs))
        present = u < self._thetas
        return Digraph(self.n, (a for a, keep in zip(self._arcs, present) if keep))

    def to_config(self) -> dict:
        cfg = {"kind": self.kind, "basic_graph": self.basic_graph.to_json(), "theta_floor": self.theta_floor}
        if isinstance(self.theta, Mapping):
            cfg["arc_theta"] = [[i, j, float(self.theta[(i, j)])] for i, j in self._arcs]
        else:
            cfg["theta"] = float(self.theta)
        return cfg


@dataclass(frozen=True)
class AcyclicRestrictedProcess(ArcIndependentProcess):
    """Arc-independent draws whose support is an acyclic quasi-strongly
    connected basic graph, so the union over any horizon stays acyclic."""

    kind = "acyclic_restricted"

    def __post_init__(self):
        super().__post_init__()
        if not is_acyclic(self.basic_graph):
            raise ValueError("acyclic_restricted process requires an acyclic basic graph")
        if not is_quasi_strongly_connected(self.basic_graph):
            raise ValueError("acyclic_restricted process requires a quasi-strongly connected basic graph")


@dataclass(frozen=True)
class ConnectivityIndependentProcess(GraphProcess):
    """Independent per-step mixture: with probability q a rooted draw
    (guaranteed quasi-strongly connected), otherwise a filler draw.

    Custom samplers must be module-level callables if the process is to
    cross a process-pool boundary.
    """

    q: float
    rooted_sampler: GraphSampler | None = None
    filler_sampler: GraphSampler | None = None
    kind = "connectivity_independent"

    def __post_init__(self):
        if not 0 < self.q < 1:
            raise ValueError(f"q must be in (0, 1), got {self.q}")

    def sample(self, k: int, rng: RngStream) -> Digraph:
        gen = rng.child(k).generator()
        if gen.random() < self.q:
            sampler = self.rooted_sampler or random_arborescence
        else:
            sampler = self.filler_sampler or _empty_filler
        return sampler(self.n, gen)

    def to_config(self) -> dict:
        return {"kind": self.kind, "q": self.q}


def _scatter_arcs_over_window(n: int, length: int, q: float, gen: np.random.Generator) -> list[list[Arc]]:
    """Per-step arc lists for one window: with probability q a random
    arborescence's arcs land on uniformly random steps, else all empty."""
    per_step: list[list[Arc]] = [[] for _ in range(length)]
    if gen.random() < q:
        arb = random_arborescence(n, gen)
        for arc in sorted(arb.arcs):
            per_step[int(gen.integers(0, length))].append(arc)
    return per_step


@dataclass(frozen=True)
class UniformlyJointProcess(GraphProcess):
    """Blocks [mB, (m+1)B) are independent; with probability q the block's
    joint graph is a random arborescence (its arcs spread uniformly over
    the block's steps), otherwise the whole block is empty."""

    B: int
    q: float
    kind = "uniformly_joint"

    def __post_init__(self):
        if self.B < 1:
            raise ValueError(f"block length B must be >= 1, got {self.B}")
        if not 0 < self.q <= 1:
            raise ValueError(f"q must be in (0, 1], got {self.q}")

    def window(self, m: int) -> tuple[int, int]:
        return m * self.B, self.B

    def sample(self, k: int, rng: RngStream) -> Digraph:
        m, offset = divmod(k, self.B)
        gen = rng.child(m).generator()
        per_step = _scatter_arcs_over_window(self.n, self.B, self.q, gen)
        return Digraph(self.n, per_step[offset])

    def to_config(self) -> dict:
        return {"kind": self.kind, "B": self.B, "q": self.q}


@dataclass(frozen=True)
class InfinitelyJointProcess(GraphProcess):
    """Like the block process but over intervals [C_m, C_{m+1}) of varying
    length given by a strictly increasing sequence starting at 0.

    Beyond the last listed endpoint the final interval length repeats, so
    trials can run past the explicitly described horizon.
    """

    interval_ends: tuple[int, ...]
    q: float
    kind = "infinitely_joint"

    def __post_init__(self):
        ends = tuple(int(c) for c in self.interval_ends)
        if len(ends) < 2 or ends[0] != 0:
            raise ValueError("interval_ends must start at 0 and list at least one interval")
        if any(a >= b for a, b in zip(ends, ends[1:])):
            raise ValueError("interval_ends must be strictly increasing")
        if not 0 < self.q <= 1:
            raise ValueError(f"q must be in (0, 1], got {self.q}")
        object.__setattr__(self, "interval_ends", ends)

    def window(self, m: int) -> tuple[int, int]:
        """(start, length) of interval m, extending past the listed ends."""
        ends = self.interval_ends
        listed = len(ends) - 1
        if m < listed:
            return ends[m], ends[m + 1] - ends[m]
        tail_len = ends[-1] - ends[-2]
        return ends[-1] + (m - listed) * tail_len, tail_len

    def _interval_index(self, k: int) -> int:
        ends = self.interval_ends
        if k < ends[-1]:
            return bisect.bisect_right(ends, k) - 1
        tail_len = ends[-1] - ends[-2]
        return (len(ends) - 1) + (k - ends[-1]) // tail_len

    def sample(self, k: int, rng: RngStream) -> Digraph:
        m = self._interval_index(k)
        start, length = self.window(m)
        gen = rng.child(m).generator()
        per_step = _scatter_arcs_over_window(self.n, length, self.q, gen)
        return Digraph(self.n, per_step[k - start])

    def to_config(self) -> dict:
        return {"kind": self.kind, "interval_ends": list(self.interval_ends), "q": self.q}


@dataclass(frozen=True)
class BidirectionalProcess(GraphProcess):
    """Wrapper symmetrizing every draw of an inner process."""

    inner: GraphProcess
    kind = "bidirectional"

    def __post_init__(self):
        if self.inner.n != self.n:
            raise ValueError("inner process node count disagrees with wrapper n")

    def sample(self, k: int, rng: RngStream) -> Digraph:
        g = self.inner.sample(k, rng)
        return union([g, g.reverse()])

    def to_config(self) -> dict:
        return {"kind": self.kind, "inner": self.inner.to_config()}


# ---------------------------------------------------------------------------
# empirical class diagnostics


@dataclass(frozen=True)
class ProcessDiagnostics:
    """Empirical check that a process matches its declared class constants."""

    kind: str
    draws: int
    unit: str  # "step" or "interval"
    qsc_frequency: float
    qsc_ci: tuple[float, float]
    declared_q: float | None
    qsc_lag1_corr: float
    arc_frequencies: tuple[tuple[Arc, float, float], ...]  # (arc, observed, declared)
    max_arc_freq_error: float
    max_arc_lag1_corr: float

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "draws": self.draws,
            "unit": self.unit,
            "qsc_frequency": self.qsc_frequency,
            "qsc_ci": list(self.qsc_ci),
            "declared_q": self.declared_q,
            "qsc_lag1_corr": self.qsc_lag1_corr,
            "arc_frequencies": [[list(a), obs, dec] for a, obs, dec in self.arc_frequencies],
            "max_arc_freq_error": self.max_arc_freq_error,
            "max_arc_lag1_corr": self.max_arc_lag1_corr,
        }


def verify_class(process: GraphProcess, draws: int, rng: RngStream) -> ProcessDiagnostics:
    """Sample the process and report how well the class hypotheses hold.

    Per-step classes are checked on the quasi-strong-connectivity frequency
    (with a 95% interval), per-arc frequencies against declared probabilities
    where applicable, and lag-1 autocorrelation of the relevant indicator
    series, which should be near zero under the declared independence.
    Joint classes are checked per window using the window's joint graph.
    """
    if draws < 1000:
        raise ValueError(f"need at least 1000 draws for a meaningful check, got {draws}")

    declared_q = getattr(process, "q", None)
    graphs: list[Digraph] | None = None
    if isinstance(process, (UniformlyJointProcess, InfinitelyJointProcess)):
        unit = "interval"
        qsc = np.empty(draws, dtype=bool)
        for m in range(draws):
            start, length = process.window(m)
            block = [process.sample(k, rng) for k in range(start, start + length)]
            qsc[m] = is_quasi_strongly_connected(union(block, n=process.n))
    else:
        unit = "step"
        graphs = [process.sample(k, rng) for k in range(draws)]
        qsc = np.fromiter((is_quasi_strongly_connected(g) for g in graphs), dtype=bool, count=draws)

    arc_rows: list[tuple[Arc, float, float]] = []
    max_err = 0.0
    max_arc_corr = 0.0
    if isinstance(process, ArcIndependentProcess) and process.arc_count and graphs is not None:
        indicators = np.empty((draws, process.arc_count), dtype=bool)
        for k, g in enumerate(graphs):
            indicators[k] = [a in g.arcs for a in process._arcs]
        freqs = indicators.mean(axis=0)
        for a, obs, dec in zip(process._arcs, freqs, process._thetas):
            arc_rows.append((a, float(obs), float(dec)))
            max_err = max(max_err, abs(float(obs) - float(dec)))
        max_arc_corr = max(abs(lag1_autocorrelation(indicators[:, c])) for c in range(process.arc_count))

    return ProcessDiagnostics(
        kind=process.kind,
        draws=draws,
        unit=unit,
        qsc_frequency=float(qsc.mean()),
        qsc_ci=wilson_interval(int(qsc.sum()), draws),
        declared_q=declared_q,
        qsc_lag1_corr=lag1_autocorrelation(qsc.astype(float)),
        arc_frequencies=tuple(arc_rows),
        max_arc_freq_error=max_err,
        max_arc_lag1_corr=float(max_arc_corr),
    )


_PROCESS_KINDS = {
    "arc_independent": ArcIndependentProcess,
    "acyclic_restricted": AcyclicRestrictedProcess,
    "connectivity_independent": ConnectivityIndependentProcess,
    "uniformly_joint": UniformlyJointProcess,
    "infinitely_joint": InfinitelyJointProcess,
    "bidirectional": BidirectionalProcess,
}


def from_config(obj: dict, n: int) -> GraphProcess:
    """Build a process from its JSON config fragment."""
    cfg = dict(obj)
    kind = cfg.pop("kind", None)
    try:
        proc = _from_config_kind(kind, cfg, n)
    except KeyError as exc:
        raise ValueError(f"process kind {kind!r} is missing required key {exc.args[0]!r}") from None
    if cfg:
        raise ValueError(f"unknown process key {sorted(cfg)[0]!r} for kind {kind!r}")
    return proc


def _from_config_kind(kind, cfg: dict, n: int) -> GraphProcess:
    if kind in ("arc_independent", "acyclic_restricted"):
        cls = _PROCESS_KINDS[kind]
        basic = cfg.pop("basic_graph", None)
        if basic == "complete":
            basic_graph = Digraph.complete(n)
        elif isinstance(basic, dict):
            basic_graph = Digraph.from_json(basic)
        else:
            raise ValueError('basic_graph must be "complete" or a graph object')
        if "arc_theta" in cfg:
            theta = {(int(i), int(j)): float(t) for i, j, t in cfg.pop("arc_theta")}
        else:
            theta = float(cfg.pop("theta", 1.0))
        return cls(n=n, basic_graph=basic_graph, theta=theta, theta_floor=cfg.pop("theta_floor", None))
    if kind == "connectivity_independent":
        return ConnectivityIndependentProcess(n=n, q=float(cfg.pop("q")))
    if kind == "uniformly_joint":
        return UniformlyJointProcess(n=n, B=int(cfg.pop("B")), q=float(cfg.pop("q")))
    if kind == "infinitely_joint":
        return InfinitelyJointProcess(n=n, interval_ends=tuple(cfg.pop("interval_ends")), q=float(cfg.pop("q")))
    if kind == "bidirectional":
        return BidirectionalProcess(n=n, inner=from_config(cfg.pop("inner"), n))
    raise ValueError(f"unknown process kind {kind!r}; expected one of {sorted(_PROCESS_KINDS)}")
