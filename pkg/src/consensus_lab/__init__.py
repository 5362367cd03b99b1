"""Randomized consensus over random graph processes.

Nodes hold scalar states and, at every step, independently flip a coin
with a scheduled success probability: on success a node averages over its
current in-neighbors (plus itself), otherwise it keeps its state.  The
package provides the dynamics, the random graph process classes the
convergence guarantees are stated for, exact evaluators of the
convergence-time bounds, a stochastic-matrix ergodicity kit, and a
reproducible parallel Monte Carlo harness that exhibits the zero-one
consensus threshold.
"""

__version__ = "0.1.0"

from .bounds import (
    BoundQuery,
    BoundResult,
    WindowTooLargeError,
    conditions_report,
    interval_min_product,
    interval_min_value,
    sufficient_condition,
    tcom_lower_bound,
    tcom_upper_arc_independent,
    tcom_upper_bidirectional_joint,
    tcom_upper_connectivity_independent,
    tcom_upper_uniform_joint,
    window_min_product,
)
from .engine import (
    EQUAL_WEIGHTS,
    EngineInvariantError,
    TrialRecord,
    WeightRule,
    build_weights,
    consensus_measure,
    record_grid,
    run_trial,
    step,
)
from .graphs import (
    Digraph,
    LevelFunction,
    hbar_levels,
    is_acyclic,
    is_bidirectional,
    is_quasi_strongly_connected,
    level_sets,
    roots,
    union,
)
from .matrices import (
    StochasticMatrix,
    delta,
    induced_graph,
    is_scrambling,
    lambda_coeff,
    product,
)
from .montecarlo import (
    ConsensusEstimate,
    ExperimentSpec,
    SweepPoint,
    TcomEstimate,
    estimate_consensus_probability,
    estimate_tcom,
    run_experiment,
    standard_initial_conditions,
    sweep_parameter,
    threshold_sweep,
)
from .processes import (
    AcyclicRestrictedProcess,
    ArcIndependentProcess,
    BidirectionalProcess,
    ConnectivityIndependentProcess,
    GraphProcess,
    InfinitelyJointProcess,
    ProcessDiagnostics,
    UniformlyJointProcess,
    random_acyclic_rooted_digraph,
    random_arborescence,
    random_digraph,
    random_rooted_digraph,
    verify_class,
)
from .rng import RngStream
from .schedules import (
    ConstantSchedule,
    ExplicitSchedule,
    GeometricSchedule,
    PowerDecaySchedule,
    Schedule,
    UnsupportedQueryError,
)
from .stats import wilson_interval
