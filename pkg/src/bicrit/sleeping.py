"""Deactivation oracles and the two algorithms that play against a shrinking expert set.

``a1_run`` keeps the epoch meta-algorithm over per-round pseudo losses
(1 for inactive experts) and maps its pick through a repair map onto an
active expert.  ``a2_run`` is a sleeping-experts learner with K x K weights
whose active set is refreshed once per epoch and which may reactivate
everything at given rounds.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .learners import make_learner
from .meta import EpochSchedule, epoch_schedule
from .params import TOL, AssumptionParams, OracleStarvedError, ceil_pow
from .sampling import Sampler
from .streams import LossStream
from .trace import RunTrace, concat_traces

ETA_MIN = 1.0 / math.sqrt(2.0)
ETA_MAX = 1.0 - 1e-6
UNDERFLOW = 1e-150
ALGO_LOSS_MODES = ("expected", "realized")


# ----------------------------------------------------------------- oracles

@dataclass(frozen=True)
class ActiveSetTimeline:
    """Per-round active sets produced by a deactivation oracle.

    ``active[t]`` is H_t; ``removed[t]`` is the set detected at the end of
    round t, absent from H_{t+1}.  ``resets`` are 0-based rounds at which
    everything was reactivated (always contains 0).
    """

    active: np.ndarray
    removed: np.ndarray
    resets: tuple

    @property
    def T(self) -> int:
        return self.active.shape[0]

    @property
    def K(self) -> int:
        return self.active.shape[1]

    def deactivations(self):
        """Sorted (round, expert) pairs, both 1-based and 0-based respectively."""
        t, h = np.nonzero(self.removed)
        return [(int(a) + 1, int(b)) for a, b in zip(t, h)]

    def window(self, start: int, stop: int) -> "ActiveSetTimeline":
        resets = tuple(r - start for r in self.resets if start <= r < stop)
        return ActiveSetTimeline(self.active[start:stop], self.removed[start:stop], resets or (0,))


class DeactivationOracle:
    """Online detector of experts whose secondary excess outgrows the budget.

    Each active expert keeps s <- max(s, 0) + l2 - c, the largest excess of
    an interval ending now; it is reported once s > delta*ceil(T^alpha).
    Rounds listed in ``reactivations`` (1-based) restore every expert and
    clear the accumulators.  No expert is reported on the last round of a
    block, so the final block always reaches round T intact.
    """

    def __init__(self, K: int, T: int, params: AssumptionParams, reactivations=()):
        self.K, self.T = K, T
        self.c = params.c
        self.threshold = params.threshold(T)
        resets = sorted({int(r) - 1 for r in reactivations} | {0})
        if resets[0] < 0 or resets[-1] >= T:
            raise ValueError(f"reactivation rounds must lie in [1, {T}]")
        self.resets = tuple(resets)
        self._reset_set = set(resets)
        self.active = np.ones(K, dtype=bool)
        self.excess = np.zeros(K)
        self.t = 0

    def step(self, secondary_row):
        """Consume round t's secondary losses; returns ``(H_t, removed_t)``."""
        t = self.t
        if t >= self.T:
            raise RuntimeError("oracle already consumed T rounds")
        if t in self._reset_set:
            self.active[:] = True
            self.excess[:] = 0.0
        current = self.active.copy()
        row = np.asarray(secondary_row, dtype=np.float64)
        self.excess = np.where(current, np.maximum(self.excess, 0.0) + row - self.c, 0.0)
        block_end = t == self.T - 1 or (t + 1) in self._reset_set
        if block_end:
            removed = np.zeros(self.K, dtype=bool)
        else:
            removed = current & (self.excess > self.threshold + TOL)
        if removed.any():
            self.active &= ~removed
            if not self.active.any():
                raise OracleStarvedError(f"round {t + 1}: every expert exceeded the variance budget")
        self.t += 1
        return current, removed


def oracle2_timeline(secondary, params: AssumptionParams, reactivations=(1,)) -> ActiveSetTimeline:
    """Replay the oracle over a full secondary loss matrix with the given reactivation rounds."""
    S = np.asarray(secondary, dtype=np.float64)
    T, K = S.shape
    oracle = DeactivationOracle(K, T, params, reactivations)
    gaps = np.diff(list(oracle.resets) + [T])
    if (gaps < ceil_pow(T, params.alpha)).any():
        warnings.warn("a reactivation gap is shorter than one epoch", stacklevel=2)
    active = np.empty((T, K), dtype=bool)
    removed = np.empty((T, K), dtype=bool)
    for t in range(T):
        active[t], removed[t] = oracle.step(S[t])
    active.setflags(write=False)
    removed.setflags(write=False)
    return ActiveSetTimeline(active, removed, oracle.resets)


def oracle1_timeline(secondary, params: AssumptionParams) -> ActiveSetTimeline:
    """Oracle without reactivations: experts stay removed for good."""
    return oracle2_timeline(secondary, params, reactivations=(1,))


def reactivation_rounds(schedule, T: int):
    """1-based reactivation rounds from ``"every G"``, an int list, or None (start only)."""
    if schedule is None or schedule == "" or schedule == "none":
        return (1,)
    if isinstance(schedule, str):
        s = schedule.strip()
        if s.startswith("every"):
            gap = int(s.split()[1])
            if gap < 1:
                raise ValueError(f"reactivation gap must be positive, got {gap}")
            return tuple(range(1, T + 1, gap))
        schedule = [int(x) for x in s.replace(",", " ").split()]
    rounds = sorted({int(r) for r in schedule} | {1})
    if rounds[-1] > T:
        raise ValueError(f"reactivation round {rounds[-1]} exceeds T={T}")
    return tuple(rounds)


# ----------------------------------------------------------- shared helpers

def pseudo_primary(losses, active) -> np.ndarray:
    """Primary losses with inactive experts charged 1."""
    return np.where(active, losses, 1.0)


def remap_repair(f, removed, active_next) -> np.ndarray:
    """Redirect every base expert currently mapped into ``removed`` to the lowest-index active expert."""
    f = np.asarray(f, dtype=np.int64)
    if not np.asarray(active_next).any():
        raise OracleStarvedError("no active expert left to repair onto")
    target = int(np.flatnonzero(active_next)[0])
    out = f.copy()
    out[np.asarray(removed, dtype=bool)[f]] = target
    return out


def pushforward(q, f) -> np.ndarray:
    """Law of f(h) for h ~ q."""
    return np.bincount(f, weights=q, minlength=len(q))


# ---------------------------------------------------------------------- A1

def a1_run(stream: LossStream, params: AssumptionParams, base: str = "sd", seed=None, sampler=None,
           timeline: ActiveSetTimeline | None = None, epoch_length: int | None = None, **options) -> RunTrace:
    """Epoch meta-algorithm under permanent deactivations.

    The base learner observes epoch averages of pseudo losses.  Its pick h
    is played as f(h), where f starts as the identity and sends any base
    expert whose image is deactivated to the lowest-index active expert.
    The trace stores the law of f(h) as p_t and h itself as ``base_sel``.
    """
    if stream.adaptive:
        raise TypeError("A1 needs an oblivious stream")
    T, K = stream.T, stream.K
    if timeline is None:
        timeline = oracle1_timeline(stream.secondary, params)
    m = epoch_length if epoch_length is not None else ceil_pow(T, params.alpha)
    schedule = EpochSchedule.with_length(T, m)
    if sampler is None:
        sampler = Sampler(seed)
    learner = make_learner(base, K, schedule.count, sampler=sampler, **options)
    pseudo = pseudo_primary(stream.primary, timeline.active)
    cuts = np.flatnonzero(timeline.removed.any(axis=1))

    dist = np.empty((T, K))
    sel = np.empty(T, dtype=np.int64)
    base_sel = np.empty(T, dtype=np.int64)
    f = np.arange(K)
    for start, stop in schedule.bounds:
        h, q = learner.step()
        t = start
        while t < stop:
            i = np.searchsorted(cuts, t)
            seg_end = min(int(cuts[i]) + 1, stop) if i < cuts.size else stop
            dist[t:seg_end] = pushforward(q, f)
            sel[t:seg_end] = f[h]
            base_sel[t:seg_end] = h
            last = seg_end - 1
            if timeline.removed[last].any():
                f = remap_repair(f, timeline.removed[last], timeline.active[last + 1])
            t = seg_end
        block = pseudo[start:stop]
        learner.observe(block[0] if stop - start == 1 else block.mean(axis=0), validate=False)

    meta = {"algorithm": f"a1:{base}", "epoch_length": m, "epochs": schedule.count,
            "deactivations": int(timeline.removed.sum())}
    return RunTrace(dist, sel, stream.primary, stream.secondary, active=timeline.active,
                    base_sel=base_sel, meta=meta)


def restart_a1_run(stream: LossStream, params: AssumptionParams, reactivations=(1,), base: str = "sd",
                   seed=None, sampler=None, **options) -> RunTrace:
    """A1 restarted from scratch at every reactivation round.

    Epoch length and variance budget stay those of the full horizon; each
    block's learner is tuned for that block's number of epochs.
    Experimental comparison baseline; it carries no regret guarantee.
    """
    if stream.adaptive:
        raise TypeError("restarted A1 needs an oblivious stream")
    T = stream.T
    timeline = oracle2_timeline(stream.secondary, params, reactivations)
    if sampler is None:
        sampler = Sampler(seed)
    m = ceil_pow(T, params.alpha)
    edges = list(timeline.resets) + [T]
    parts = []
    for a, b in zip(edges[:-1], edges[1:]):
        sub = LossStream(stream.primary[a:b], stream.secondary[a:b])
        parts.append(a1_run(sub, params, base=base, sampler=sampler, timeline=timeline.window(a, b),
                            epoch_length=m, **options))
    meta = {"algorithm": f"restart-a1:{base}", "epoch_length": m,
            "epochs": sum(p.meta["epochs"] for p in parts), "blocks": len(parts),
            "deactivations": int(timeline.removed.sum())}
    return concat_traces(parts, meta=meta)


# ---------------------------------------------------------------------- A2

def default_eta(K: int, epochs: int) -> float:
    """1 - sqrt(2 ln K / E), kept inside [1/sqrt(2), 1)."""
    eta = 1.0 - math.sqrt(2.0 * math.log(K) / epochs) if K > 1 else ETA_MAX
    return min(max(eta, ETA_MIN), ETA_MAX)


def _check_eta(eta):
    if not (ETA_MIN - 1e-15 <= eta < 1.0):
        raise ValueError(f"eta must lie in [1/sqrt(2), 1), got {eta}")


def a2_weight_update(weights, active, pseudo, algo_loss, eta) -> np.ndarray:
    """w[h*, h] * eta^(1 + I(h*) (l_h - eta l_A)), with rows indexed by h*."""
    _check_eta(eta)
    ind = np.asarray(active, dtype=np.float64)[:, None]
    expo = 1.0 + ind * (np.asarray(pseudo, dtype=np.float64)[None, :] - eta * algo_loss)
    return np.asarray(weights, dtype=np.float64) * eta ** expo


def a2_run(stream: LossStream, params: AssumptionParams, reactivations=(1,), eta=None, seed=None,
           sampler=None, algo_loss: str = "expected") -> RunTrace:
    """Sleeping-experts learner with lazy resampling, one pick per epoch.

    The active set H_e of epoch e is the oracle's set at the epoch's first
    round, so an expert detected mid-epoch still finishes the epoch.
    Reactivation rounds are moved to the start of their epoch.  At epoch
    start the previous pick is kept with probability w_e(h)/w_{e-1}(h),
    otherwise a fresh pick is drawn from p_e; reactivation epochs always draw
    afresh and reset the repair map.

    ``algo_loss="expected"`` charges the algorithm p_e . l_e in the weight
    update; ``"realized"`` charges the pseudo loss of the played expert.
    Only the former keeps the weight sum shrinking by eta every epoch.

    ``meta`` carries per-epoch ``epoch_dist`` (p_e over base experts),
    ``keep_prob``, and ``weight_ratio`` (sum w_{e+1} / sum w_e).
    """
    if stream.adaptive:
        raise TypeError("A2 needs an oblivious stream")
    if algo_loss not in ALGO_LOSS_MODES:
        raise ValueError(f"algo_loss must be one of {ALGO_LOSS_MODES}, got {algo_loss!r}")
    T, K = stream.T, stream.K
    schedule = epoch_schedule(T, params.alpha)
    m, E = schedule.length, schedule.count
    reset_epochs = sorted({(int(r) - 1) // m for r in reactivations} | {0})
    resets = set(reset_epochs)
    timeline = oracle2_timeline(stream.secondary, params, [e * m + 1 for e in reset_epochs])
    if eta is None:
        eta = default_eta(K, E)
    _check_eta(eta)
    if sampler is None:
        sampler = Sampler(seed)

    W = np.full((K, K), 1.0 / K)
    f = np.arange(K)
    dist = np.empty((T, K))
    sel = np.empty(T, dtype=np.int64)
    base_sel = np.empty(T, dtype=np.int64)
    active = np.empty((T, K), dtype=bool)
    epoch_dist = np.empty((E, K))
    keep_prob = np.full(E, np.nan)
    weight_ratio = np.empty(E)
    prev_w = None
    held = -1
    for e, (start, stop) in enumerate(schedule.bounds):
        H = timeline.active[start]
        if e in resets:
            f = np.arange(K)
        w = W[H].sum(axis=0)
        p = w / w.sum()
        if e in resets:
            h = sampler.categorical(p)
        else:
            keep = w[held] / prev_w[held]
            if keep > 1.0 + 1e-9:
                raise AssertionError(f"epoch {e + 1}: keep probability {keep} exceeds 1")
            keep_prob[e] = keep
            h = held if sampler.bernoulli(keep) else sampler.categorical(p)
        a = int(f[h])
        dist[start:stop] = pushforward(p, f)
        sel[start:stop] = a
        base_sel[start:stop] = h
        active[start:stop] = H
        epoch_dist[e] = p

        ell = pseudo_primary(stream.primary[start:stop].mean(axis=0), H)
        la = float(p @ ell) if algo_loss == "expected" else float(ell[a])
        W_next = a2_weight_update(W, H, ell, la, eta)
        ratio = W_next.sum() / W.sum()
        weight_ratio[e] = ratio
        if algo_loss == "expected" and ratio > eta * (1.0 + 1e-12):
            raise AssertionError(f"epoch {e + 1}: weight sum grew by {ratio} > eta = {eta}")
        prev_w, held, W = w, h, W_next
        top = W.max()
        if top < UNDERFLOW:
            W = W / top
            prev_w = prev_w / top

        if e + 1 < E and (e + 1) not in resets:
            H_next = timeline.active[schedule.bounds[e + 1][0]]
            gone = H & ~H_next
            if gone.any():
                f = remap_repair(f, gone, H_next)

    meta = {"algorithm": "a2", "epoch_length": m, "epochs": E, "eta": eta, "algo_loss": algo_loss,
            "reset_epochs": tuple(reset_epochs), "epoch_dist": epoch_dist, "keep_prob": keep_prob,
            "weight_ratio": weight_ratio, "deactivations": int(timeline.removed.sum())}
    return RunTrace(dist, sel, stream.primary, stream.secondary, active=active, base_sel=base_sel, meta=meta)
