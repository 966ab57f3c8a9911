"""Shared parameters, tolerances and error types."""

from __future__ import annotations

import math
from dataclasses import dataclass

# absolute tolerance for simplex and running-sum comparisons
TOL = 1e-9


class OracleStarvedError(RuntimeError):
    """Raised when a deactivation would leave no active expert."""


class InfeasibleStreamError(ValueError):
    """Raised when an adversary construction needs losses outside [0, 1]."""


def ceil_pow(T: int, exponent: float) -> int:
    """ceil(T**exponent), robust to floating error around integers.

    ``10000 ** 0.75`` evaluates to 999.9999999999998; a plain ceil would give
    1000 there but 1001 for values a hair above an integer, so values within
    1e-9 (relative) of an integer snap to it first.
    """
    if T < 1:
        raise ValueError(f"T must be >= 1, got {T}")
    x = float(T) ** float(exponent)
    r = round(x)
    if abs(x - r) <= 1e-9 * max(1.0, x):
        return max(1, int(r))
    return max(1, math.ceil(x))


@dataclass(frozen=True)
class AssumptionParams:
    """Bounded-variance parameters (c, delta, alpha), all in [0, 1]."""

    c: float
    delta: float
    alpha: float

    def __post_init__(self):
        for name in ("c", "delta", "alpha"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0) or math.isnan(v):
                raise ValueError(f"{name} must lie in [0, 1], got {v}")

    def threshold(self, T: int) -> float:
        """Interval excess budget delta * ceil(T^alpha)."""
        return self.delta * ceil_pow(T, self.alpha)
