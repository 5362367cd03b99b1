"""Closed-form convergence-time bounds and the divergence conditions they
hinge on.

Every evaluator returns a ``BoundResult`` carrying the bound (or an
unbounded-within-cap marker when a convergent schedule makes the defining
infimum empty inside the search budget) plus an audit block with the
partial sums at termination, so a reported number can always be
cross-checked by direct recomputation.

Natural logarithms throughout; every formula only compares sums of logs to
log thresholds, so the base cancels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .schedules import Schedule, UnsupportedQueryError

DEFAULT_SEARCH_CAP = 10_000_000
MAX_WINDOW = 10_000

_CHUNK = 1 << 14


class WindowTooLargeError(RuntimeError):
    """A window infimum would need to scan more indices than allowed."""


@dataclass(frozen=True)
class BoundQuery:
    """Inputs shared by the bound evaluators.

    Only the fields a given evaluator needs must be set; evaluators raise
    ValueError naming the missing field otherwise.  ``search_cap`` limits
    how many schedule indices a search may examine before giving up.
    """

    n: int
    epsilon: float
    schedule: Schedule
    eta: float
    q: float | None = None
    B: int | None = None
    interval_ends: tuple[int, ...] | None = None
    theta0: float | None = None
    basic_arc_count: int | None = None
    search_cap: int = DEFAULT_SEARCH_CAP

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if not 0 < self.epsilon < 1:
            raise ValueError(f"epsilon must be in (0, 1), got {self.epsilon}")
        if not 0 < self.eta <= 1:
            raise ValueError(f"eta must be in (0, 1], got {self.eta}")
        if self.q is not None and not 0 < self.q < 1:
            raise ValueError(f"q must be in (0, 1), got {self.q}")
        if self.B is not None and self.B < 1:
            raise ValueError(f"B must be >= 1, got {self.B}")
        if self.theta0 is not None and not 0 < self.theta0 <= 1:
            raise ValueError(f"theta0 must be in (0, 1], got {self.theta0}")
        if self.basic_arc_count is not None and self.basic_arc_count < 1:
            raise ValueError(f"basic_arc_count must be >= 1, got {self.basic_arc_count}")
        if self.search_cap < 1:
            raise ValueError("search_cap must be >= 1")
        if self.interval_ends is not None:
            ends = tuple(int(c) for c in self.interval_ends)
            if len(ends) < 2 or ends[0] != 0 or any(a >= b for a, b in zip(ends, ends[1:])):
                raise ValueError("interval_ends must be strictly increasing from 0")
            object.__setattr__(self, "interval_ends", ends)

    def _need(self, *names: str) -> None:
        for name in names:
            if getattr(self, name) is None:
                raise ValueError(f"this bound requires the {name!r} parameter")


@dataclass(frozen=True)
class BoundResult:
    """A bound value (None = unbounded within the search cap) plus audit."""

    value: int | None
    audit: dict

    @property
    def unbounded(self) -> bool:
        return self.value is None

    def to_json(self) -> dict:
        return {
            "bound": self.value if self.value is not None else "unbounded-within-cap",
            "audit": dict(self.audit),
        }


def _chunks(start: int, stop: int, size: int = _CHUNK) -> Iterable[np.ndarray]:
    for lo in range(start, stop, size):
        yield np.arange(lo, min(lo + size, stop), dtype=np.int64)


def tcom_lower_bound(qy: BoundQuery) -> BoundResult:
    """Universal lower bound from the all-nodes-idle event: the largest k
    such that sum_{i<k} log(1/(1-P_i)) still fits under log(1/eps)/n."""
    threshold = math.log(1.0 / qy.epsilon) / qy.n
    total = 0.0
    k = 0
    for ks in _chunks(0, qy.search_cap):
        terms = -np.log1p(-qy.schedule.values(ks))
        cum = total + np.cumsum(terms)
        over = np.flatnonzero(cum > threshold)
        if len(over):
            j = int(over[0])
            k = int(ks[j])
            total = float(cum[j - 1]) if j > 0 else total
            return BoundResult(k, _audit(total, threshold, k))
        total = float(cum[-1])
        k = int(ks[-1]) + 1
    return BoundResult(None, _audit(total, threshold, k, capped=True))


def _audit(partial_sum: float, threshold: float, indices: int, *, capped: bool = False, **extra) -> dict:
    out = {"partial_sum": partial_sum, "threshold": threshold, "indices_examined": indices}
    if capped:
        out["capped"] = True
    out.update(extra)
    return out


def _smallest_count_reaching(terms_at, threshold: float, m_cap: int) -> tuple[int | None, float, int]:
    """Smallest M with sum_{i<M} term_i >= threshold, scanning at most
    m_cap terms.  ``terms_at(ks)`` maps an int64 array of i to term values.
    Returns (M or None, sum through the examined terms, terms examined)."""
    total = 0.0
    seen = 0
    for ks in _chunks(0, m_cap):
        terms = terms_at(ks)
        cum = total + np.cumsum(terms)
        reach = np.flatnonzero(cum >= threshold)
        if len(reach):
            j = int(reach[0])
            return int(ks[j]) + 1, float(cum[j]), int(ks[j]) + 1
        total = float(cum[-1])
        seen = int(ks[-1]) + 1
    return None, total, seen


def tcom_upper_connectivity_independent(qy: BoundQuery) -> BoundResult:
    """Upper bound for per-step connectivity-independent processes with
    rooted-draw probability at least q and a non-increasing schedule."""
    qy._need("q")
    if not qy.schedule.is_non_increasing():
        raise ValueError("this bound requires a non-increasing schedule")
    n = qy.n
    span = (n - 1) ** 2
    coef = (qy.q * qy.eta) ** span / 2.0
    threshold = 2.0 * math.log(1.0 / qy.epsilon)

    def terms_at(ms: np.ndarray) -> np.ndarray:
        p = qy.schedule.values((ms + 1) * span)
        return -np.log1p(-coef * p ** (n - 1))

    m_cap = max(1, qy.search_cap // max(span, 1))
    m, below, seen = _smallest_count_reaching(terms_at, threshold, m_cap)
    if m is None:
        return BoundResult(None, _audit(below, threshold, seen, capped=True, coefficient=coef))
    return BoundResult(m * span, _audit(below, threshold, m, coefficient=coef, window_count=m))


def window_min_product(schedule: Schedule, n: int, B: int, s: int) -> float:
    """Minimum over all (n-1)-subsets of the window
    [s (n-1)^2 B, (s+1) (n-1)^2 B) of the product of schedule values.

    Since all values are nonnegative, the minimizing subset is just the
    n-1 smallest values in the window.
    """
    if n < 2:
        raise ValueError("window products need n >= 2")
    if B < 1 or s < 0:
        raise ValueError("need B >= 1 and s >= 0")
    span = (n - 1) ** 2 * B
    vals = schedule.values(np.arange(s * span, (s + 1) * span, dtype=np.int64))
    smallest = np.sort(vals)[: n - 1]
    return float(np.prod(smallest))


def tcom_upper_uniform_joint(qy: BoundQuery) -> BoundResult:
    """Upper bound for block-jointly connected processes: like the per-step
    bound but with the window infimum product in each term."""
    qy._need("q", "B")
    n, B = qy.n, qy.B
    if n < 2:
        raise ValueError("this bound requires n >= 2")
    span = (n - 1) ** 2 * B
    coef = (qy.q * qy.eta) ** ((n - 1) ** 2) / 2.0
    threshold = 2.0 * math.log(1.0 / qy.epsilon)

    m_cap = max(1, qy.search_cap // span)
    total = 0.0
    for m in range(m_cap):
        term = -math.log1p(-coef * window_min_product(qy.schedule, n, B, m))
        if total + term >= threshold:
            return BoundResult(
                (m + 1) * span,
                _audit(total + term, threshold, m + 1, coefficient=coef, window_count=m + 1),
            )
        total += term
    return BoundResult(None, _audit(total, threshold, m_cap, capped=True, coefficient=coef))


def interval_min_product(schedule: Schedule, n: int, interval_ends: tuple[int, ...], s: int,
                         *, max_window: int = MAX_WINDOW) -> float:
    """Minimum (n-1)-subset product over [C_{s(n-1)}, C_{(s+1)(n-1)})."""
    if n < 2:
        raise ValueError("interval products need n >= 2")
    lo_idx = s * (n - 1)
    hi_idx = (s + 1) * (n - 1)
    if hi_idx >= len(interval_ends):
        raise IndexError(f"interval_ends lists only {len(interval_ends)} endpoints; window {s} needs index {hi_idx}")
    lo, hi = interval_ends[lo_idx], interval_ends[hi_idx]
    if hi - lo > max_window:
        raise WindowTooLargeError(
            f"window [{lo}, {hi}) has {hi - lo} indices, above the {max_window}-index limit"
        )
    vals = schedule.values(np.arange(lo, hi, dtype=np.int64))
    smallest = np.sort(vals)[: n - 1]
    return float(np.prod(smallest))


def tcom_upper_bidirectional_joint(qy: BoundQuery) -> BoundResult:
    """Upper bound for bidirectional, infinitely jointly connected
    processes; the answer is an interval endpoint C_{s(n-1)}."""
    qy._need("q", "interval_ends")
    n = qy.n
    if n < 2:
        raise ValueError("this bound requires n >= 2")
    ends = qy.interval_ends
    coef = (qy.q * qy.eta) ** (n - 1)
    threshold = 2.0 * math.log(1.0 / qy.epsilon)
    max_s = (len(ends) - 1) // (n - 1)
    total = 0.0
    windows = 0
    for s in range(1, max_s + 1):
        if ends[s * (n - 1)] > qy.search_cap:
            return BoundResult(None, _audit(total, threshold, windows, capped=True, coefficient=coef))
        term = -math.log1p(-coef * interval_min_product(qy.schedule, n, ends, s - 1))
        windows = s
        if total + term >= threshold:
            return BoundResult(
                int(ends[s * (n - 1)]),
                _audit(total + term, threshold, windows, coefficient=coef, window_count=s),
            )
        total += term
    return BoundResult(
        None,
        _audit(total, threshold, windows, capped=True, coefficient=coef, interval_ends_exhausted=True),
    )


def interval_min_value(schedule: Schedule, interval_ends: tuple[int, ...], s: int,
                       *, max_window: int = MAX_WINDOW) -> float:
    """Minimum schedule value over the interval [C_s, C_{s+1})."""
    if s < 0 or s + 1 >= len(interval_ends):
        raise IndexError(f"interval index {s} outside the listed endpoints")
    lo, hi = interval_ends[s], interval_ends[s + 1]
    if hi - lo > max_window:
        raise WindowTooLargeError(
            f"interval [{lo}, {hi}) has {hi - lo} indices, above the {max_window}-index limit"
        )
    return float(schedule.values(np.arange(lo, hi, dtype=np.int64)).min())


def tcom_upper_arc_independent(qy: BoundQuery) -> BoundResult:
    """Upper bound for arc-independent processes over a rooted basic graph
    with per-arc presence probability at least theta0.

    With E0 = (n-1) |E*| and A = 1 - (eta theta0 / n)^E0, the bound is the
    first k at which sum_{i<k} (1 - (1-P_i)^n) reaches
    (E0 / log A) log(A eps^2 / n); both logs are negative, so the target is
    positive.
    """
    qy._need("theta0", "basic_arc_count")
    n = qy.n
    if n < 2:
        raise ValueError("this bound requires n >= 2")
    e0 = (n - 1) * qy.basic_arc_count
    base = qy.eta * qy.theta0 / n
    a_const = 1.0 - base ** e0
    if not 0.0 < a_const < 1.0:
        raise ValueError(f"contraction constant A={a_const} outside (0, 1)")
    inner = a_const * qy.epsilon**2 / n
    if inner >= 1.0:
        raise ValueError("epsilon too large for this bound to bind")
    threshold = e0 / math.log(a_const) * math.log(inner)

    def terms_at(ks: np.ndarray) -> np.ndarray:
        p = qy.schedule.values(ks)
        return 1.0 - (1.0 - p) ** n

    k, below, seen = _smallest_count_reaching(terms_at, threshold, qy.search_cap)
    extra = {"A": a_const, "E0": e0}
    if k is None:
        return BoundResult(None, _audit(below, threshold, seen, capped=True, **extra))
    return BoundResult(k, _audit(below, threshold, k, **extra))


# ---------------------------------------------------------------------------
# divergence conditions


def _arithmetic_stride(interval_ends: tuple[int, ...]) -> int:
    diffs = {b - a for a, b in zip(interval_ends, interval_ends[1:])}
    if len(diffs) != 1:
        raise UnsupportedQueryError(
            "divergence over subsampled indices is only decidable for "
            "arithmetic interval_ends; got varying interval lengths"
        )
    return diffs.pop()


def sufficient_condition(which: str, schedule: Schedule, *, n: int | None = None,
                         interval_ends: tuple[int, ...] | None = None) -> bool:
    """Analytic divergence conditions backing the convergence guarantees.

    * ``arc_independent``: sum_k P_k diverges (also the sharp threshold
      condition and the acyclic B=1 case).
    * ``connectivity_independent``: sum_k P_k^{n-1} diverges.
    * ``bidirectional_joint``: sum_s P_{C_{s(n-1)}}^{n-1} diverges; needs
      arithmetic interval ends (subsampling an arithmetic progression does
      not change divergence for the analytic families).
    * ``acyclic_joint``: sum_s inf_{[C_s, C_{s+1})} P diverges; same
      arithmetic-ends requirement.
    """
    if which == "arc_independent":
        return schedule.sum_of_powers_diverges(1)
    if which == "connectivity_independent":
        if n is None:
            raise ValueError("condition requires n")
        return schedule.sum_of_powers_diverges(max(n - 1, 1))
    if which == "bidirectional_joint":
        if n is None or interval_ends is None:
            raise ValueError("condition requires n and interval_ends")
        _arithmetic_stride(interval_ends)
        return schedule.sum_of_powers_diverges(max(n - 1, 1))
    if which == "acyclic_joint":
        if interval_ends is None:
            raise ValueError("condition requires interval_ends")
        _arithmetic_stride(interval_ends)
        return schedule.sum_of_powers_diverges(1)
    raise ValueError(f"unknown condition {which!r}")


def conditions_report(qy: BoundQuery) -> dict:
    """Every divergence condition evaluable from the query's fields."""
    out: dict[str, bool] = {
        "thm4_sufficient": sufficient_condition("arc_independent", qy.schedule),
        "coro3ii_sufficient": sufficient_condition("arc_independent", qy.schedule),
        "coro1_sufficient": sufficient_condition("connectivity_independent", qy.schedule, n=qy.n),
    }
    if qy.interval_ends is not None:
        try:
            out["coro2_sufficient"] = sufficient_condition(
                "bidirectional_joint", qy.schedule, n=qy.n, interval_ends=qy.interval_ends
            )
            out["prop3_sufficient"] = sufficient_condition(
                "acyclic_joint", qy.schedule, interval_ends=qy.interval_ends
            )
        except UnsupportedQueryError:
            pass
    return out
