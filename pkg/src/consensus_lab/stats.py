"""Small statistical helpers shared by the harness and the diagnostics."""

from __future__ import annotations

import numpy as np

# two-sided 95%
_Z95 = 1.959963984540054


def wilson_interval(successes: int, trials: int, z: float = _Z95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion.

    Behaves sensibly at proportions of exactly 0 or 1, which is where the
    zero-one experiments put the data; a Wald interval would collapse there.
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    if not 0 <= successes <= trials:
        raise ValueError(f"successes {successes} outside [0, {trials}]")
    p = successes / trials
    denom = 1.0 + z * z / trials
    center = (p + z * z / (2 * trials)) / denom
    half = (z / denom) * np.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials))
    return max(0.0, center - half), min(1.0, center + half)


def lag1_autocorrelation(x: np.ndarray) -> float:
    """Sample lag-1 autocorrelation; 0 for degenerate (constant) series."""
    x = np.asarray(x, dtype=float)
    if len(x) < 3:
        return 0.0
    a = x[:-1]
    b = x[1:]
    sa, sb = a.std(), b.std()
    if sa == 0 or sb == 0:
        return 0.0
    return float(((a - a.mean()) * (b - b.mean())).mean() / (sa * sb))
