"""Row-stochastic matrices, their ergodicity coefficients, and induced graphs.

Two scalar coefficients drive all contraction arguments:

* ``delta(M)``  -- the largest oscillation within a column,
  ``max_j max_{a,b} |m_aj - m_bj|``; zero exactly when all rows are equal.
* ``lambda_coeff(M)`` -- one minus the least shared row mass,
  ``1 - min_{a,b} sum_j min(m_aj, m_bj)``; a matrix with
  ``lambda_coeff(M) < 1`` is called scrambling.

The key product fact: ``delta`` of a product is bounded by the product of
the factors' ``lambda_coeff`` values.  Matrices here are dense, tiny
(``n <= 64``), and immutable.
"""

from __future__ import annotations

from typing import Iterable, Mapping, Sequence

import numpy as np

from .graphs import Digraph

ROW_SUM_TOL = 1e-12
# entries below the row-sum tolerance are numerically indistinguishable
# from zero, so positivity tests use the same threshold
POSITIVITY_TOL = 1e-12


class StochasticMatrix:
    """Immutable nonnegative square matrix whose rows sum to 1.

    Row sums are validated to absolute tolerance ``tol`` (default 1e-12);
    products of k matrices are validated at the looser ``1e-10 * k`` since
    they are never renormalized.
    """

    __slots__ = ("n", "entries")

    def __init__(self, entries, *, tol: float = ROW_SUM_TOL):
        a = np.array(entries, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {a.shape}")
        if a.shape[0] < 1:
            raise ValueError("matrix dimension must be >= 1")
        if not np.all(np.isfinite(a)):
            raise ValueError("matrix entries must be finite")
        if np.any(a < 0):
            raise ValueError("matrix entries must be nonnegative")
        row_err = np.abs(a.sum(axis=1) - 1.0).max()
        if row_err > tol:
            raise ValueError(f"row sums deviate from 1 by {row_err:.3e} (tol {tol:.1e})")
        a.setflags(write=False)
        self.n = a.shape[0]
        self.entries = a

    @classmethod
    def identity(cls, n: int) -> "StochasticMatrix":
        return cls(np.eye(n))

    def to_json(self) -> dict:
        return {"n": self.n, "rows": [list(row) for row in self.entries]}

    @classmethod
    def from_json(cls, obj: Mapping) -> "StochasticMatrix":
        return cls(obj["rows"])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, StochasticMatrix):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.entries, other.entries)

    def __repr__(self) -> str:
        return f"StochasticMatrix({self.entries.tolist()})"


def delta(m: StochasticMatrix) -> float:
    """Maximum column oscillation, in [0, 1]; 0 iff all rows are equal."""
    a = m.entries
    return float((a.max(axis=0) - a.min(axis=0)).max())


def lambda_coeff(m: StochasticMatrix) -> float:
    """One minus the minimum pairwise shared row mass, in [0, 1].

    Strictly below 1 exactly when every pair of rows has overlapping
    support (a scrambling matrix).
    """
    a = m.entries
    if m.n == 1:
        return 0.0
    # pairwise sum_j min(row_a, row_b); diagonal pairs give 1 and never win
    overlap = np.minimum(a[:, None, :], a[None, :, :]).sum(axis=2)
    return float(1.0 - overlap.min())


def is_scrambling(m: StochasticMatrix) -> bool:
    return lambda_coeff(m) < 1.0


def induced_graph(m: StochasticMatrix, *, tol: float = POSITIVITY_TOL) -> tuple[Digraph, tuple[bool, ...]]:
    """Graph induced by positive entries, plus per-node diagonal positivity.

    Entry ``m_ij > tol`` with ``i != j`` contributes the arc ``(j, i)``:
    a positive weight on row i, column j means information flows from j
    to i.  Diagonal positivity is returned separately as a boolean per
    node because graphs store no self-arcs.
    """
    a = m.entries
    arcs = [(j + 1, i + 1) for i in range(m.n) for j in range(m.n) if i != j and a[i, j] > tol]
    flags = tuple(bool(a[i, i] > tol) for i in range(m.n))
    return Digraph(m.n, arcs), flags


def product(ms: Sequence[StochasticMatrix]) -> StochasticMatrix:
    """Left-to-right product ``ms[0] @ ms[1] @ ... @ ms[-1]``.

    No renormalization is applied; the result is validated at the
    accumulated row-sum tolerance ``1e-10 * len(ms)``.
    """
    ms = list(ms)
    if not ms:
        raise ValueError("product of an empty sequence is undefined")
    n = ms[0].n
    for m in ms:
        if m.n != n:
            raise ValueError(f"dimension mismatch in product: {m.n} != {n}")
    acc = ms[0].entries
    for m in ms[1:]:
        acc = acc @ m.entries
    return StochasticMatrix(acc, tol=1e-10 * len(ms))
