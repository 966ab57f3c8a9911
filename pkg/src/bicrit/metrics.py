"""Regret metrics, switch counting and bounded-variance checks."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .params import TOL, AssumptionParams
from .trace import RunTrace


def _check_c(c):
    if not 0.0 <= c <= 1.0:
        raise ValueError(f"c must lie in [0, 1], got {c}")


def _nonempty(trace):
    if trace is None or trace.T == 0:
        raise ValueError("empty trace")


def regret_primary_raw(trace: RunTrace, expected: bool = True) -> float:
    _nonempty(trace)
    alg = trace.alg_primary_expected[-1] if expected else trace.alg_primary_realized[-1]
    return float(alg - trace.cum_primary[-1].min())


def regret_primary(trace: RunTrace, expected: bool = True) -> float:
    """max(L^1_{T,A} - min_h L^1_{T,h}, 1).

    ``expected=True`` charges the algorithm p_t . l^1_t per round, otherwise
    the loss of the realized selection.
    """
    return max(regret_primary_raw(trace, expected), 1.0)


def regret_secondary_raw(trace: RunTrace, c: float, expected: bool = True) -> float:
    _check_c(c)
    _nonempty(trace)
    alg = trace.alg_secondary_expected[-1] if expected else trace.alg_secondary_realized[-1]
    return float(alg - c * trace.T)


def regret_secondary(trace: RunTrace, c: float, expected: bool = True) -> float:
    """max(L^2_{T,A} - cT, 1)."""
    return max(regret_secondary_raw(trace, c, expected), 1.0)


def sleeping_regret_raw(trace: RunTrace, target: int) -> float:
    if not 0 <= target < trace.K:
        raise ValueError(f"target expert {target} outside [0, {trace.K})")
    on = trace.active[:, target]
    alg = np.einsum("tk,tk->t", trace.dist[on], trace.primary[on]).sum()
    return float(alg - trace.primary[on, target].sum())


def sleeping_regret(trace: RunTrace, target: int) -> float:
    """Primary regret against ``target`` over the rounds where it is active, floored at 1."""
    return max(sleeping_regret_raw(trace, target), 1.0)


def count_switches(trace_or_sel) -> int:
    sel = trace_or_sel.sel if isinstance(trace_or_sel, RunTrace) else np.asarray(trace_or_sel)
    if sel.size < 2:
        return 0
    return int(np.count_nonzero(sel[1:] != sel[:-1]))


def max_interval_excess(secondary, c: float):
    """Largest sum of (l_t - c) over a contiguous interval, with one interval attaining it.

    Returns ``(value, (T1, T2))`` with 1-based inclusive rounds.  Among
    maximisers the leftmost start wins, then the shortest.  Linear time: the
    best interval ending at T2 starts right after the smallest prefix sum
    before T2.
    """
    x = np.asarray(secondary, dtype=np.float64) - c
    if x.size == 0:
        raise ValueError("empty sequence")
    prefix = np.concatenate([[0.0], np.cumsum(x)])
    head = prefix[:-1]
    run_min = np.minimum.accumulate(head)
    # leftmost position of the running minimum: only strict new minima move it
    new_min = np.concatenate([[True], head[1:] < run_min[:-1]])
    argmin_pos = np.maximum.accumulate(np.where(new_min, np.arange(head.size), 0))
    gains = prefix[1:] - run_min
    best = gains.max()
    ends = np.flatnonzero(gains == best)
    # np.argmin takes the first (shortest) end among the leftmost starts
    i = int(np.argmin(argmin_pos[ends]))
    return float(best), (int(argmin_pos[ends[i]]) + 1, int(ends[i]) + 1)


@dataclass
class Assumption2Result:
    passed: np.ndarray            # per-expert bool
    excess: np.ndarray            # per-expert max interval excess
    worst: list                   # per-expert (T1, T2)
    threshold: float

    @property
    def all_pass(self) -> bool:
        return bool(self.passed.all())


def check_assumption2(stream, params: AssumptionParams, tol: float = TOL) -> Assumption2Result:
    """Per expert: does every interval's secondary excess over c stay within delta*ceil(T^alpha)?"""
    if stream.adaptive:
        raise TypeError("bounded-variance check needs an oblivious (materialized) stream")
    thr = params.threshold(stream.T)
    values, worst = [], []
    for h in range(stream.K):
        v, iv = max_interval_excess(stream.secondary[:, h], params.c)
        values.append(v)
        worst.append(iv)
    values = np.array(values)
    return Assumption2Result(values <= thr + tol, values, worst, thr)


@dataclass
class Assumption2PrimeResult:
    passed: bool
    worst_value: float
    worst_segment: tuple          # (T1, T2), 1-based inclusive
    threshold: float
    segments: int


def segment_excess(trace: RunTrace, c: float):
    """(starts, sums): excess of each maximal constant-selection segment."""
    sel = trace.sel
    starts = np.concatenate([[0], np.flatnonzero(sel[1:] != sel[:-1]) + 1])
    _, l2 = trace.incurred()
    return starts, np.add.reduceat(l2 - c, starts)


def check_assumption2_prime(trace: RunTrace, params: AssumptionParams, tol: float = TOL) -> Assumption2PrimeResult:
    """Secondary excess of every segment between two switches stays within delta*ceil(T^alpha)."""
    thr = params.threshold(trace.T)
    starts, sums = segment_excess(trace, params.c)
    i = int(np.argmax(sums))
    stop = starts[i + 1] if i + 1 < len(starts) else trace.T
    return Assumption2PrimeResult(bool(sums[i] <= thr + tol), float(sums[i]),
                                  (int(starts[i]) + 1, int(stop)), thr, len(starts))


@dataclass
class RegretReport:
    reg1_expected: float
    reg1_realized: float
    reg2c_expected: float
    reg2c_realized: float
    raw: dict
    sleeping: dict
    sleeping_raw: dict
    switches: int
    active_rounds: dict
    best_expert: int

    @property
    def reg1(self):
        return self.reg1_expected

    @property
    def reg2c(self):
        return self.reg2c_expected


def report(trace: RunTrace, c: float) -> RegretReport:
    """All regret quantities of one trace, floored and raw."""
    raw = {
        "reg1_expected": regret_primary_raw(trace, True),
        "reg1_realized": regret_primary_raw(trace, False),
        "reg2c_expected": regret_secondary_raw(trace, c, True),
        "reg2c_realized": regret_secondary_raw(trace, c, False),
    }
    sraw = {h: sleeping_regret_raw(trace, h) for h in range(trace.K)}
    return RegretReport(
        reg1_expected=max(raw["reg1_expected"], 1.0),
        reg1_realized=max(raw["reg1_realized"], 1.0),
        reg2c_expected=max(raw["reg2c_expected"], 1.0),
        reg2c_realized=max(raw["reg2c_realized"], 1.0),
        raw=raw,
        sleeping={h: max(v, 1.0) for h, v in sraw.items()},
        sleeping_raw=sraw,
        switches=count_switches(trace),
        active_rounds={h: int(trace.active[:, h].sum()) for h in range(trace.K)},
        # np.argmin returns the lowest index among ties
        best_expert=int(np.argmin(trace.cum_primary[-1])),
    )
