"""Epoch-batched play: hold one expert per epoch, feed epoch averages to a base learner."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .learners import make_learner
from .params import ceil_pow
from .streams import History
from .trace import RunTrace, TraceRecorder


@dataclass(frozen=True)
class EpochSchedule:
    """Partition of rounds 0..T-1 into half-open blocks ``[start, stop)``.

    Every block has ``length`` rounds except possibly the last.
    """

    T: int
    length: int
    bounds: tuple

    @classmethod
    def with_length(cls, T: int, length: int) -> "EpochSchedule":
        if T < 1 or length < 1:
            raise ValueError("T and epoch length must be positive")
        bounds = tuple((s, min(s + length, T)) for s in range(0, T, length))
        return cls(T, length, bounds)

    @property
    def count(self) -> int:
        return len(self.bounds)

    def lengths(self):
        return [stop - start for start, stop in self.bounds]

    def epoch_of(self, t: int) -> int:
        return t // self.length


def epoch_schedule(T: int, alpha: float) -> EpochSchedule:
    """Epochs of length ceil(T^alpha); ceil(T / length) of them."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    return EpochSchedule.with_length(T, ceil_pow(T, alpha))


def epoch_average(losses) -> np.ndarray:
    """Componentwise mean of the per-round loss vectors of one epoch."""
    a = np.asarray(losses, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] == 0:
        raise ValueError("epoch must contain at least one round of loss vectors")
    return a.mean(axis=0)


def play(learner, stream, schedule: EpochSchedule, meta=None) -> RunTrace:
    """Run ``learner`` over ``stream``, one learner round per block of ``schedule``."""
    if schedule.length == 1 and not stream.adaptive:
        return _play_rounds(learner, stream, meta)
    rec = TraceRecorder(stream)
    hist = History() if stream.adaptive else None
    for start, stop in schedule.bounds:
        sel, dist = learner.step()
        rec.put(start, stop, sel, dist)
        if hist is None:
            block = stream.primary[start:stop]
        else:
            for t in range(start, stop):
                rec.put_losses(t, *stream.losses(t, hist))
                hist.append(sel)
            block = rec.primary[start:stop]
        learner.observe(block[0] if stop - start == 1 else epoch_average(block), validate=False)
    return rec.finish(meta)


def _play_rounds(learner, stream, meta):
    # unit epochs on an oblivious stream: same draws as play(), less bookkeeping
    sels, dists = learner.run_oblivious(stream.primary)
    return RunTrace(dists, sels, stream.primary, stream.secondary, meta=meta)


def run_learner(kind: str, stream, seed=None, sampler=None, **options) -> RunTrace:
    """Plain per-round run of a base learner over the whole horizon."""
    learner = make_learner(kind, stream.K, stream.T, seed=seed, sampler=sampler, **options)
    schedule = EpochSchedule.with_length(stream.T, 1)
    return play(learner, stream, schedule, meta={"algorithm": kind, "epoch_length": 1, "epochs": stream.T})


def asl_run(base: str, stream, alpha: float, seed=None, sampler=None, **options) -> RunTrace:
    """Epoch meta-algorithm over base learner ``base``.

    The learner is tuned for E = ceil(T / ceil(T^alpha)) rounds and sees one
    averaged primary loss vector per epoch; the trace stores its epoch
    distribution as p_t for every round of the epoch.
    """
    schedule = epoch_schedule(stream.T, alpha)
    learner = make_learner(base, stream.K, schedule.count, seed=seed, sampler=sampler, **options)
    meta = {"algorithm": f"asl:{base}", "epoch_length": schedule.length, "epochs": schedule.count}
    return play(learner, stream, schedule, meta=meta)
