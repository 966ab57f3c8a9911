"""Run traces: everything one algorithm run produced, round by round."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .params import TOL
from .streams import LossStream, _parse_header


def _frozen(a):
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


class RunTrace:
    """Record of one run over T rounds and K experts.

    Per round t: ``dist[t]`` (law of the selection), ``sel[t]`` (realized
    expert A_t), the full loss vectors ``primary[t]`` / ``secondary[t]`` and the
    active mask ``active[t]``.  ``base_sel`` holds the inner learner's pick
    before any expert remapping (equal to ``sel`` for plain runs).

    Prefix sums are built once at construction: ``cum_primary[t, h]`` is
    L^1_{t+1,h}; ``alg_primary_expected[t]`` is sum_{s<=t} p_s . l^1_s, and so on.
    """

    def __init__(self, dist, sel, primary, secondary, active=None, base_sel=None, meta=None):
        dist = np.asarray(dist, dtype=np.float64)
        sel = np.asarray(sel, dtype=np.int64)
        primary = np.asarray(primary, dtype=np.float64)
        secondary = np.asarray(secondary, dtype=np.float64)
        T, K = primary.shape
        if T < 1:
            raise ValueError("empty trace")
        if dist.shape != (T, K) or secondary.shape != (T, K) or sel.shape != (T,):
            raise ValueError("inconsistent trace array shapes")
        if active is None:
            active = np.ones((T, K), dtype=bool)
        self.dist = _frozen(dist)
        self.sel = _frozen(sel)
        self.primary = _frozen(primary)
        self.secondary = _frozen(secondary)
        self.active = _frozen(np.asarray(active, dtype=bool))
        self.base_sel = _frozen(np.asarray(base_sel if base_sel is not None else sel, dtype=np.int64))
        self.meta = dict(meta or {})

        rows = np.arange(T)
        self.cum_primary = _frozen(np.cumsum(primary, axis=0))
        self.cum_secondary = _frozen(np.cumsum(secondary, axis=0))
        self.alg_primary_expected = _frozen(np.cumsum(np.einsum("tk,tk->t", dist, primary)))
        self.alg_secondary_expected = _frozen(np.cumsum(np.einsum("tk,tk->t", dist, secondary)))
        self.alg_primary_realized = _frozen(np.cumsum(primary[rows, sel]))
        self.alg_secondary_realized = _frozen(np.cumsum(secondary[rows, sel]))

    @property
    def T(self) -> int:
        return self.primary.shape[0]

    @property
    def K(self) -> int:
        return self.primary.shape[1]

    def incurred(self):
        """(l^1_{t,A_t}, l^2_{t,A_t}) for every round."""
        rows = np.arange(self.T)
        return self.primary[rows, self.sel], self.secondary[rows, self.sel]

    def validate(self, tol: float = TOL) -> None:
        """Check A_t in H_t, p_t supported on H_t, and p_t on the simplex."""
        rows = np.arange(self.T)
        if self.sel.min() < 0 or self.sel.max() >= self.K:
            raise AssertionError("selection outside [0, K)")
        if not self.active[rows, self.sel].all():
            t = int(np.flatnonzero(~self.active[rows, self.sel])[0])
            raise AssertionError(f"round {t + 1}: selected expert {self.sel[t]} is inactive")
        if (self.dist < -tol).any():
            raise AssertionError("negative probability")
        if np.abs(self.dist.sum(axis=1) - 1.0).max() > tol:
            raise AssertionError("distribution does not sum to 1")
        if np.abs(np.where(self.active, 0.0, self.dist)).max() > tol:
            raise AssertionError("probability mass on an inactive expert")

    def realized_stream(self) -> LossStream:
        """The loss vectors this run actually faced, as an oblivious stream."""
        return LossStream(self.primary, self.secondary, meta={"source": "realized"})


class TraceRecorder:
    """Fills a :class:`RunTrace` block by block during a single run."""

    def __init__(self, stream):
        T, K = stream.T, stream.K
        self.T, self.K = T, K
        self.dist = np.zeros((T, K))
        self.sel = np.zeros(T, dtype=np.int64)
        self.base_sel = np.zeros(T, dtype=np.int64)
        self.active = np.ones((T, K), dtype=bool)
        if stream.adaptive:
            self.primary = np.zeros((T, K))
            self.secondary = np.zeros((T, K))
            self._own_losses = True
        else:
            self.primary = stream.primary
            self.secondary = stream.secondary
            self._own_losses = False

    def put(self, start, stop, sel, dist, base_sel=None, active=None):
        self.dist[start:stop] = dist
        self.sel[start:stop] = sel
        self.base_sel[start:stop] = sel if base_sel is None else base_sel
        if active is not None:
            self.active[start:stop] = active

    def put_losses(self, t, primary, secondary):
        self.primary[t] = primary
        self.secondary[t] = secondary

    def finish(self, meta=None) -> RunTrace:
        return RunTrace(self.dist, self.sel, self.primary, self.secondary,
                        active=self.active, base_sel=self.base_sel, meta=meta)


def concat_traces(traces, meta=None) -> RunTrace:
    return RunTrace(
        np.concatenate([tr.dist for tr in traces]),
        np.concatenate([tr.sel for tr in traces]),
        np.concatenate([tr.primary for tr in traces]),
        np.concatenate([tr.secondary for tr in traces]),
        active=np.concatenate([tr.active for tr in traces]),
        base_sel=np.concatenate([tr.base_sel for tr in traces]),
        meta=meta,
    )


# ---------------------------------------------------------------- text format

def format_trace(trace: RunTrace) -> str:
    """Line-oriented export: ``t, A_t, active bitmask (hex), l1_{t,A_t}, l2_{t,A_t}``."""
    l1, l2 = trace.incurred()
    weights = 1 << np.arange(trace.K, dtype=object)
    out = [f"#bicrit-trace v1 K={trace.K} T={trace.T}"]
    for t in range(trace.T):
        mask = int(np.dot(trace.active[t].astype(object), weights))
        out.append(f"{t + 1}\t{trace.sel[t]}\t{mask:x}\t{float(l1[t])!r}\t{float(l2[t])!r}")
    return "\n".join(out) + "\n"


def write_trace(trace: RunTrace, path) -> None:
    Path(path).write_text(format_trace(trace))


@dataclass
class TraceFile:
    """Parsed contents of a trace file (the per-round realized quantities only)."""

    K: int
    T: int
    sel: np.ndarray
    active: np.ndarray
    incurred_primary: np.ndarray
    incurred_secondary: np.ndarray
    rounds: np.ndarray = field(repr=False)


def parse_trace(text: str) -> TraceFile:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty trace text")
    head = _parse_header(lines[0], "#bicrit-trace")
    K, T = int(head["K"]), int(head["T"])
    body = [ln.split("\t") for ln in lines[1:]]
    if len(body) != T:
        raise ValueError(f"header says T={T} but found {len(body)} rounds")
    rounds = np.array([int(r[0]) for r in body])
    sel = np.array([int(r[1]) for r in body])
    masks = [int(r[2], 16) for r in body]
    active = np.array([[(m >> h) & 1 == 1 for h in range(K)] for m in masks], dtype=bool).reshape(T, K)
    l1 = np.array([float(r[3]) for r in body])
    l2 = np.array([float(r[4]) for r in body])
    return TraceFile(K, T, sel, active, l1, l2, rounds)


def read_trace(path) -> TraceFile:
    return parse_trace(Path(path).read_text())
