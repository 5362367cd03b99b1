"""Deterministic success-probability sequences {P_k} with 0 <= P_k < 1.

Four families cover every experiment and every analytic condition:

* ``constant``      P_k = p
* ``power_decay``   P_k = min(c * (k+1)**(-beta), cap)
* ``geometric``     P_k = min(c * rho**k, cap)
* ``explicit_list`` a finite prefix followed by a constant tail value

A cap strictly below 1 keeps families whose formula could reach 1 inside
the required open interval.  Divergence of sum_k P_k**r is decided
analytically per family (p-series / geometric-series criteria), never by
numeric truncation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

DEFAULT_CAP = 0.99

_CHUNK = 1 << 14


class UnsupportedQueryError(ValueError):
    """An analytic question this schedule kind cannot answer."""


@dataclass(frozen=True)
class Schedule:
    """Base class; concrete families implement ``values``."""

    kind = "abstract"

    def values(self, ks: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def value(self, k: int) -> float:
        """P_k for a single time index k >= 0."""
        if k < 0:
            raise ValueError(f"time index must be >= 0, got {k}")
        # route through the vectorized path so scalar and array evaluation
        # can never disagree in the last ulp
        return float(self.values(np.asarray([k], dtype=np.int64))[0])

    def is_non_increasing(self) -> bool:
        return True

    def sum_of_powers_diverges(self, r: int) -> bool:
        """Whether sum_k P_k**r diverges, decided analytically."""
        raise NotImplementedError

    def partial_sum(self, r: int, k: int) -> float:
        """sum_{i=0}^{k-1} P_i**r with compensated (Kahan) accumulation.

        Chunks are reduced with numpy's pairwise summation and combined
        with a Kahan accumulator, so the error stays O(eps) regardless of
        how many terms are requested.
        """
        if r < 1:
            raise ValueError(f"power must be a positive integer, got {r}")
        if k < 0:
            raise ValueError(f"horizon must be >= 0, got {k}")
        total = 0.0
        comp = 0.0
        for start in range(0, k, _CHUNK):
            ks = np.arange(start, min(start + _CHUNK, k), dtype=np.int64)
            chunk = float(np.sum(self.values(ks) ** r))
            y = chunk - comp
            t = total + y
            comp = (t - total) - y
            total = t
        return total

    def to_config(self) -> dict:
        raise NotImplementedError


def _check_unit_interval(name: str, x: float, *, allow_zero: bool) -> None:
    lo_ok = x >= 0 if allow_zero else x > 0
    if not (lo_ok and x < 1):
        lo = "0 <=" if allow_zero else "0 <"
        raise ValueError(f"{name} must satisfy {lo} {name} < 1, got {x}")


@dataclass(frozen=True)
class ConstantSchedule(Schedule):
    p: float
    kind = "constant"

    def __post_init__(self):
        _check_unit_interval("p", self.p, allow_zero=True)

    def values(self, ks: np.ndarray) -> np.ndarray:
        return np.full(len(ks), self.p)

    def sum_of_powers_diverges(self, r: int) -> bool:
        return self.p > 0

    def to_config(self) -> dict:
        return {"kind": "constant", "p": self.p}


@dataclass(frozen=True)
class PowerDecaySchedule(Schedule):
    """P_k = min(c * (k+1)**(-beta), cap)."""

    c: float
    beta: float
    cap: float = DEFAULT_CAP
    kind = "power_decay"

    def __post_init__(self):
        if self.c < 0:
            raise ValueError(f"c must be >= 0, got {self.c}")
        if self.beta < 0:
            raise ValueError(f"beta must be >= 0, got {self.beta}")
        _check_unit_interval("cap", self.cap, allow_zero=False)

    def values(self, ks: np.ndarray) -> np.ndarray:
        return np.minimum(self.c * (ks + 1.0) ** (-self.beta), self.cap)

    def sum_of_powers_diverges(self, r: int) -> bool:
        # p-series: sum (k+1)**(-r*beta) diverges iff r*beta <= 1
        return self.c > 0 and r * self.beta <= 1.0

    def to_config(self) -> dict:
        return {"kind": "power_decay", "c": self.c, "beta": self.beta, "cap": self.cap}


@dataclass(frozen=True)
class GeometricSchedule(Schedule):
    """P_k = min(c * rho**k, cap)."""

    c: float
    rho: float
    cap: float = DEFAULT_CAP
    kind = "geometric"

    def __post_init__(self):
        if self.c < 0:
            raise ValueError(f"c must be >= 0, got {self.c}")
        if not (0 < self.rho <= 1):
            raise ValueError(f"rho must be in (0, 1], got {self.rho}")
        _check_unit_interval("cap", self.cap, allow_zero=False)

    def values(self, ks: np.ndarray) -> np.ndarray:
        return np.minimum(self.c * self.rho ** ks.astype(float), self.cap)

    def sum_of_powers_diverges(self, r: int) -> bool:
        # rho < 1 sums geometrically; rho == 1 degenerates to a constant
        return self.rho == 1.0 and self.c > 0

    def to_config(self) -> dict:
        return {"kind": "geometric", "c": self.c, "rho": self.rho, "cap": self.cap}


@dataclass(frozen=True)
class ExplicitSchedule(Schedule):
    """A finite list of probabilities, then a constant tail value."""

    probs: tuple[float, ...]
    tail: float = 0.0
    kind = "explicit_list"

    def __post_init__(self):
        object.__setattr__(self, "probs", tuple(float(p) for p in self.probs))
        for i, p in enumerate(self.probs):
            _check_unit_interval(f"probs[{i}]", p, allow_zero=True)
        _check_unit_interval("tail", self.tail, allow_zero=True)

    def values(self, ks: np.ndarray) -> np.ndarray:
        table = np.asarray(self.probs + (self.tail,))
        return table[np.minimum(ks, len(self.probs))]

    def is_non_increasing(self) -> bool:
        seq = self.probs + (self.tail,)
        return all(a >= b for a, b in zip(seq, seq[1:]))

    def sum_of_powers_diverges(self, r: int) -> bool:
        # the finite prefix never decides divergence; only the tail does
        return self.tail > 0

    def to_config(self) -> dict:
        return {"kind": "explicit_list", "probs": list(self.probs), "tail": self.tail}


_KINDS = {
    "constant": ConstantSchedule,
    "power_decay": PowerDecaySchedule,
    "geometric": GeometricSchedule,
    "explicit_list": ExplicitSchedule,
}


def from_config(obj: dict) -> Schedule:
    """Build a schedule from its JSON config fragment {"kind": ..., params}."""
    cfg = dict(obj)
    kind = cfg.pop("kind", None)
    try:
        if kind == "constant":
            sched = ConstantSchedule(p=cfg.pop("p"))
        elif kind == "power_decay":
            sched = PowerDecaySchedule(c=cfg.pop("c"), beta=cfg.pop("beta"), cap=cfg.pop("cap", DEFAULT_CAP))
        elif kind == "geometric":
            sched = GeometricSchedule(c=cfg.pop("c"), rho=cfg.pop("rho"), cap=cfg.pop("cap", DEFAULT_CAP))
        elif kind == "explicit_list":
            sched = ExplicitSchedule(probs=tuple(cfg.pop("probs")), tail=cfg.pop("tail", 0.0))
        else:
            raise ValueError(f"unknown schedule kind {kind!r}; expected one of {sorted(_KINDS)}")
    except KeyError as exc:
        raise ValueError(f"schedule kind {kind!r} is missing required key {exc.args[0]!r}") from None
    if cfg:
        raise ValueError(f"unknown schedule key {sorted(cfg)[0]!r} for kind {kind!r}")
    return sched
