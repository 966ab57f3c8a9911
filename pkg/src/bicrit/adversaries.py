"""Loss-stream constructions behind each lower bound, plus a bounded-variance fixture generator.

Lengths derived from non-integral powers of T use ceil, counts use floor.
"""

from __future__ import annotations

import math

import numpy as np

from .params import AssumptionParams, InfeasibleStreamError, ceil_pow
from .streams import AdaptiveStream, History, LossStream

# keeps generated interval excess strictly inside the budget despite float summation order
_BUDGET_MARGIN = 1e-7


def _floor_pow(T: int, exponent: float) -> int:
    x = float(T) ** exponent
    r = round(x)
    if abs(x - r) <= 1e-9 * max(1.0, x):
        return int(r)
    return math.floor(x)


def threshold_losses(a, b):
    """Losses of the expert that predicts '-' with probability b when P(label = '-') = a.

    Primary is the error probability, secondary the false-negative probability.
    Works with floats or ``fractions.Fraction``.
    """
    if not (0 <= a <= 1 and 0 <= b <= 1):
        raise ValueError(f"a and b must lie in [0, 1], got a={a}, b={b}")
    return (1 - a) * b + a * (1 - b), (1 - a) * b


# (a, b_h1, b_h2) per phase
_THM1_PHASE1 = (5 / 8, 1 / 6, 0.0)
_THM1_PHASE2 = {1: (3 / 4, 0.0, 1 / 2), 2: (5 / 8, 1 / 6, 0.0)}
THEOREM1_C = 1 / 16


def _phase_row(a, b1, b2):
    (p1, s1), (p2, s2) = threshold_losses(a, b1), threshold_losses(a, b2)
    return np.array([p1, p2]), np.array([s1, s2])


def build_theorem1(T: int, seed=None, world=None):
    """Two experts, two equal phases, world I or II drawn uniformly.

    Expected per-round losses are used directly as loss values.  Odd T is
    rounded down.  Returns ``(stream, c)`` with c = 1/16; the world (1 or 2)
    is in ``stream.meta["world"]``.
    """
    if T < 2:
        raise ValueError(f"T must be >= 2, got {T}")
    T -= T % 2
    if world is None:
        world = 1 if np.random.default_rng(seed).random() < 0.5 else 2
    if world not in (1, 2):
        raise ValueError(f"world must be 1 (I) or 2 (II), got {world}")
    half = T // 2
    P = np.empty((T, 2))
    S = np.empty((T, 2))
    P[:half], S[:half] = _phase_row(*_THM1_PHASE1)
    P[half:], S[half:] = _phase_row(*_THM1_PHASE2[world])
    stream = LossStream(P, S, c=THEOREM1_C, meta={"world": world})
    return stream, THEOREM1_C


def build_theorem2(T: int, alpha: float):
    """Three phases of lengths m, m, T - 2m with m = ceil(T^alpha); c = 0.

    Expert 1 plays b = 1, 0, 0 and expert 2 plays b = 0, 1, 0 with a = 3/4, so
    each spends one phase at (1/4, 1/4) and the rest at (3/4, 0).  Returns
    ``(stream, params)``; delta = 1/4 is the smallest budget the construction
    satisfies.
    """
    m = ceil_pow(T, alpha)
    if T <= 2 * m:
        raise ValueError(f"T={T} too small: need T > 2*ceil(T^alpha) = {2 * m}")
    low, high = threshold_losses(0.75, 0.0), threshold_losses(0.75, 1.0)
    P = np.full((T, 2), low[0])
    S = np.full((T, 2), low[1])
    P[:m, 0], S[:m, 0] = high
    P[m:2 * m, 1], S[m:2 * m, 1] = high
    params = AssumptionParams(c=0.0, delta=0.25, alpha=alpha)
    return LossStream(P, S, c=0.0, delta=0.25, alpha=alpha, meta={"phase_length": m}), params


class AdaptiveLowerBound(AdaptiveStream):
    """Epoch coin-flip primaries; secondary c only for an expert held for the last m rounds.

    Primary: each expert's loss is a fair coin per epoch of m = ceil(T^alpha)
    rounds, constant within the epoch.  Secondary at round t is c for h iff
    A_{t-1} = ... = A_{t-m} = h, otherwise c + delta; the first m rounds are
    all c + delta.
    """

    def __init__(self, T, alpha, c, delta, K, seed=None):
        if c + delta > 1.0 + 1e-12:
            raise InfeasibleStreamError(f"c + delta = {c + delta} exceeds 1")
        super().__init__(T, K, meta={"seed": seed})
        self.c, self.delta, self.alpha = c, delta, alpha
        self.m = ceil_pow(T, alpha)
        epochs = -(-T // self.m)
        coins = np.random.default_rng(seed).integers(0, 2, size=(epochs, K)).astype(np.float64)
        self.primary = np.repeat(coins, self.m, axis=0)[:T]
        self.primary.setflags(write=False)
        high = min(c + delta, 1.0)
        self._high = np.full(K, high)
        self._held = []
        for h in range(K):
            row = self._high.copy()
            row[h] = c
            self._held.append(row)
        self._high.setflags(write=False)
        for row in self._held:
            row.setflags(write=False)

    def losses(self, t: int, history: History):
        if len(history) != t:
            raise ValueError(f"round {t} needs the {t} earlier selections, got {len(history)}")
        if t >= self.m and history.streak >= self.m:
            return self.primary[t], self._held[history.last]
        return self.primary[t], self._high


def adaptive_lb(T, alpha, c, delta, K, seed=None) -> AdaptiveLowerBound:
    return AdaptiveLowerBound(T, alpha, c, delta, K, seed)


def build_appendixB(T: int, alpha: float, seed=None, world=None, c: float = 0.5):
    """Two-expert family of worlds that defeats algorithms driven only by cumulative losses.

    beta = (1 + alpha)/2, delta = 1/2.  Intervals have even length
    L = 2*ceil(ceil(T^beta)/2); the alternating pattern repeats to the end of
    the horizon and worlds w = 1..floor(T^(1-beta)) exist.  World 0 has
    probability 1/2, each other world 1/(2 floor(T^(1-beta))).

    Returns ``(stream, world)``.
    """
    beta = (1.0 + alpha) / 2.0
    delta = 0.5
    half = -(-ceil_pow(T, beta) // 2)
    L = 2 * half
    n_worlds = max(1, _floor_pow(T, 1.0 - beta))
    dev = delta * float(T) ** (alpha - beta)
    if c - dev < -1e-12 or c + dev > 1 + 1e-12:
        raise InfeasibleStreamError(f"c +- delta*T^(alpha-beta) = {c} +- {dev} leaves [0, 1]")
    rng = np.random.default_rng(seed)
    if world is None:
        world = 0 if rng.random() < 0.5 else int(rng.integers(1, n_worlds + 1))
    if not 0 <= world <= n_worlds:
        raise ValueError(f"world must lie in [0, {n_worlds}], got {world}")

    t = np.arange(T)
    odd = (t // L) % 2 == 0          # 1-based interval number is odd
    first = (t % L) < half
    h1 = np.where(first, ~odd, odd).astype(np.float64)
    P = np.column_stack([h1, 1.0 - h1])
    s1 = np.where(first, np.where(odd, c + dev, c - dev), c)
    s2 = np.where(first, np.where(odd, c - dev, c + dev), c)
    S = np.column_stack([s1, s2])

    meta = {"world": world, "beta": beta, "interval": L, "worlds": n_worlds}
    if world >= 1:
        end_prev = min((world - 1) * L, T)
        t_raw = end_prev - 2.0 * math.sqrt(end_prev * math.log(T)) if end_prev else 0.0
        meta["t_prime_clamped"] = t_raw < 0
        tp = min(max(0, math.floor(t_raw)), end_prev)
        P[:tp] = rng.integers(0, 2, size=(tp, 2))
        sums = P[:tp].sum(axis=0)
        bound = math.sqrt(end_prev * math.log(T)) if end_prev else 0.0
        events = bool(np.all(np.abs(sums - tp / 2.0) <= bound))
        meta["events_hold"] = events
        comp = end_prev - tp
        for h in range(2):
            if events:
                ones = int(min(max(round(end_prev / 2.0 - sums[h]), 0), comp))
                block = np.zeros(comp)
                block[:ones] = 1.0
                P[tp:end_prev, h] = rng.permutation(block)
            else:
                P[tp:end_prev, h] = 1.0
        mid = min(end_prev + half, T)
        P[mid:] = 1.0
    stream = LossStream(P, S, c=c, delta=delta, alpha=alpha, meta=meta)
    return stream, world


def lin_k_boundaries(T: int, K: int, alpha: float):
    """[T_0 = 0, T_1, ..., T_K] with T_k = ceil(T^(alpha + (k-1)(1-alpha)/(K-1)))."""
    if K < 2:
        raise ValueError(f"K must be >= 2, got {K}")
    return [0] + [ceil_pow(T, alpha + (k - 1) * (1.0 - alpha) / (K - 1)) for k in range(1, K + 1)]


def build_linK(T: int, K: int, alpha: float, c: float, delta: float) -> LossStream:
    """Experts that become best one after another and then burn their variance budget.

    Expert k (1-based) has losses (1, c) up to round T_{k-1} and
    (0, c + delta*ceil(T^alpha)/(T_k - T_{k-1})) afterwards, so its interval
    excess reaches the budget at T_k.
    """
    bounds = lin_k_boundaries(T, K, alpha)
    budget = delta * ceil_pow(T, alpha)
    P = np.zeros((T, K))
    S = np.empty((T, K))
    for k in range(1, K + 1):
        lo, hi = bounds[k - 1], bounds[k]
        if hi <= lo:
            raise InfeasibleStreamError(f"expert {k}: empty window T_{k - 1}={lo} >= T_{k}={hi}")
        rate = budget / (hi - lo)
        if c + rate > 1.0 + 1e-12:
            raise InfeasibleStreamError(f"expert {k}: secondary c + {rate:.6g} exceeds 1")
        P[:lo, k - 1] = 1.0
        S[:lo, k - 1] = c
        S[lo:, k - 1] = c + rate
    return LossStream(P, S, c=c, delta=delta, alpha=alpha, meta={"boundaries": bounds})


def random_bounded_variance(T: int, K: int, params: AssumptionParams, seed=None, amplitude=None) -> LossStream:
    """Random stream whose every expert satisfies the interval excess budget.

    Primary losses are i.i.d. uniform.  Secondary losses are c plus uniform
    steps in [-amplitude, amplitude], clipped from above whenever the running
    max-suffix excess would pass delta*ceil(T^alpha).
    """
    c = params.c
    if amplitude is None:
        amplitude = min(c, 1.0 - c, 0.25)
    if amplitude < 0 or c - amplitude < 0 or c + amplitude > 1:
        raise ValueError(f"c +- amplitude = {c} +- {amplitude} leaves [0, 1]")
    rng = np.random.default_rng(seed)
    primary = rng.random((T, K))
    steps = rng.uniform(-amplitude, amplitude, size=(T, K))
    cap = max(0.0, params.threshold(T) - _BUDGET_MARGIN)
    secondary = np.empty((T, K))
    run = np.zeros(K)
    for t in range(T):
        base = np.maximum(run, 0.0)
        x = np.minimum(steps[t], cap - base)
        secondary[t] = c + x
        run = base + x
    return LossStream(primary, secondary, c=c, delta=params.delta, alpha=params.alpha,
                      meta={"amplitude": amplitude})
