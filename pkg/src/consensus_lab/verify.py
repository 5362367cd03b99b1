"""Randomized self-check suites behind the ``verify`` subcommand.

Each suite draws seeded random instances and checks the library's core
guarantees against independent oracles (reachability closure for roots,
subset enumeration where feasible, a direct re-simulation for the engine).
A violation is reported with the case index and seed so it can be replayed
exactly.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import engine, graphs, matrices, processes, schedules
from .rng import RngStream


@dataclass
class SuiteReport:
    suite: str
    cases: int
    seed: int
    violations: list[str]

    @property
    def passed(self) -> bool:
        return not self.violations

    def to_json(self) -> dict:
        return {
            "suite": self.suite,
            "cases": self.cases,
            "seed": self.seed,
            "passed": self.passed,
            "violations": list(self.violations),
        }


def _closure_roots(g: graphs.Digraph) -> set[int]:
    """Roots via boolean reachability closure; independent of the BFS path."""
    n = g.n
    reach = np.eye(n, dtype=bool)
    for i, j in g.arcs:
        reach[i - 1, j - 1] = True
    for _ in range(n):
        reach = reach | (reach @ reach)
    return {i + 1 for i in range(n) if reach[i].all()}


def _random_stochastic(n: int, gen: np.random.Generator, *, positive_diagonal: bool = False) -> matrices.StochasticMatrix:
    a = gen.random((n, n)) ** 2
    if positive_diagonal:
        a[np.diag_indices(n)] += 0.5
    a /= a.sum(axis=1, keepdims=True)
    return matrices.StochasticMatrix(a, tol=1e-9)


def _rooted_matrix(n: int, root: int, gen: np.random.Generator) -> matrices.StochasticMatrix:
    """Positive-diagonal stochastic matrix whose induced graph has the
    given root: realize a random arborescence re-rooted at ``root``."""
    g = processes.random_arborescence(n, gen)
    actual_root = next(iter(graphs.roots(g)))
    relabel = {actual_root: root, root: actual_root}
    g2 = graphs.Digraph(n, ((relabel.get(i, i), relabel.get(j, j)) for i, j in g.arcs))
    rule = engine.WeightRule("self_confident", a_star=0.5 + 0.49 * gen.random())
    return matrices.StochasticMatrix(engine.build_weights(g2, rule))


def run_matrix_suite(cases: int, seed: int) -> SuiteReport:
    """Product contraction, induced-graph containment, and scrambling."""
    violations = []
    root_stream = RngStream(seed)
    for case in range(cases):
        gen = root_stream.child(case).generator()
        n = int(gen.integers(2, 7))
        k = int(gen.integers(1, 6))

        ms = [_random_stochastic(n, gen) for _ in range(k)]
        prod = matrices.product(ms)
        lhs = matrices.delta(prod)
        rhs = float(np.prod([matrices.lambda_coeff(m) for m in ms]))
        if lhs > rhs + 1e-9:
            violations.append(f"case {case} seed {seed}: delta(product)={lhs} > prod lambda={rhs}")

        pos = [_random_stochastic(n, gen, positive_diagonal=True) for _ in range(k)]
        prod_graph, _ = matrices.induced_graph(matrices.product(list(reversed(pos))))
        union_graph = graphs.union([matrices.induced_graph(m)[0] for m in pos])
        if not union_graph.arcs <= prod_graph.arcs:
            violations.append(f"case {case} seed {seed}: induced-graph union not contained in product")

        root = int(gen.integers(1, n + 1))
        rooted = [_rooted_matrix(n, root, gen) for _ in range(n - 1)]
        lam = matrices.lambda_coeff(matrices.product(list(reversed(rooted))))
        if not lam < 1.0:
            violations.append(f"case {case} seed {seed}: rooted product not scrambling (lambda={lam})")

        for m in ms:
            d, lam = matrices.delta(m), matrices.lambda_coeff(m)
            if not (0 <= d <= 1 and 0 <= lam <= 1):
                violations.append(f"case {case} seed {seed}: coefficient outside [0,1]")
            if (d < 1e-12) != (lam < 1e-12):
                violations.append(f"case {case} seed {seed}: delta/lambda zero-sets disagree")
    return SuiteReport("matrix", cases, seed, violations)


def run_graph_suite(cases: int, seed: int) -> SuiteReport:
    """Connectivity predicates against the closure oracle; level function."""
    violations = []
    root_stream = RngStream(seed)
    for case in range(cases):
        gen = root_stream.child(case).generator()
        n = int(gen.integers(1, 8))
        g = processes.random_digraph(n, float(gen.random()), gen)

        rs = graphs.roots(g)
        if rs != _closure_roots(g):
            violations.append(f"case {case} seed {seed}: roots disagree with closure oracle")
        if bool(rs) != graphs.is_quasi_strongly_connected(g):
            violations.append(f"case {case} seed {seed}: roots nonempty vs QSC mismatch")

        h = processes.random_digraph(n, float(gen.random()), gen)
        u1 = graphs.union([g, h])
        if u1 != graphs.union([h, g]) or graphs.union([g, g]) != g:
            violations.append(f"case {case} seed {seed}: union not commutative/idempotent")
        if not graphs.is_bidirectional(graphs.union([g, g.reverse()])):
            violations.append(f"case {case} seed {seed}: union with reverse not bidirectional")

        if n >= 2:
            acyc = processes.random_acyclic_rooted_digraph(n, gen)
            lf = graphs.hbar_levels(acyc)
            sets = graphs.level_sets(lf)
            if any(not sets[m] for m in range(lf.d_star + 1)):
                violations.append(f"case {case} seed {seed}: empty level in [0, d_star]")
            if lf.levels[lf.root] != 0:
                violations.append(f"case {case} seed {seed}: root level not 0")
    return SuiteReport("graph", cases, seed, violations)


def run_engine_suite(cases: int, seed: int) -> SuiteReport:
    """Short checked runs plus translation/scale equivariance."""
    violations = []
    root_stream = RngStream(seed)
    for case in range(cases):
        gen = root_stream.child(case, 0).generator()
        n = int(gen.integers(2, 6))
        process = processes.ArcIndependentProcess(
            n=n, basic_graph=graphs.Digraph.complete(n), theta=0.3 + 0.7 * float(gen.random())
        )
        schedule = schedules.ConstantSchedule(0.2 + 0.7 * float(gen.random()))
        if gen.random() < 0.5:
            rule = engine.EQUAL_WEIGHTS
        else:
            rule = engine.WeightRule("self_confident", a_star=0.55 + 0.4 * float(gen.random()))
        x0 = gen.normal(size=n)

        trial_rng = root_stream.child(case, 1)
        try:
            rec = engine.run_trial(process, schedule, rule, x0, 60, 1e-9, trial_rng,
                                   check_invariants=True)
        except engine.EngineInvariantError as exc:
            violations.append(f"case {case} seed {seed}: {exc}")
            continue

        shift = engine.run_trial(process, schedule, rule, x0 + 5.0, 60, 1e-9, trial_rng)
        if np.abs(shift.h_seq - rec.h_seq).max() > 1e-9:
            violations.append(f"case {case} seed {seed}: translation changed the spread sequence")
        scaled = engine.run_trial(process, schedule, rule, 3.0 * x0, 60, 1e-9, trial_rng)
        if np.abs(scaled.h_seq - 3.0 * rec.h_seq).max() > 1e-9 * max(1.0, np.abs(rec.h_seq).max()):
            violations.append(f"case {case} seed {seed}: scaling did not scale the spread sequence")
        if np.any(np.diff(rec.h_seq) > 0):
            violations.append(f"case {case} seed {seed}: recorded spread not non-increasing")
    return SuiteReport("engine", cases, seed, violations)


SUITES = {
    "matrix": run_matrix_suite,
    "graph": run_graph_suite,
    "engine": run_engine_suite,
}


def run_suite(name: str, cases: int, seed: int) -> SuiteReport:
    if name not in SUITES:
        raise ValueError(f"unknown suite {name!r}; expected one of {sorted(SUITES)}")
    if cases < 1:
        raise ValueError("cases must be >= 1")
    return SUITES[name](cases, seed)
