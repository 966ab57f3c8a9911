"""Seeded source of the discrete random decisions made by the learners.

Every random choice an algorithm makes goes through one of three calls:
``bernoulli``, ``categorical`` and ``exponential``.  Keeping the surface
this small lets a test harness substitute a scripted sampler and enumerate
every outcome of the discrete calls exactly.
"""

from __future__ import annotations

import numpy as np

_BUFFER = 4096


class Sampler:
    """Buffered wrapper around ``numpy.random.Generator``."""

    def __init__(self, seed=None):
        if isinstance(seed, np.random.Generator):
            self.rng = seed
        else:
            self.rng = np.random.default_rng(seed)
        self._buf = np.empty(0)
        self._pos = 0

    def uniform(self) -> float:
        if self._pos >= self._buf.size:
            self._buf = self.rng.random(_BUFFER)
            self._pos = 0
        u = self._buf[self._pos]
        self._pos += 1
        return float(u)

    def uniforms(self, n: int) -> np.ndarray:
        """The next ``n`` values of the same stream ``uniform()`` walks through."""
        out = np.empty(n)
        filled = 0
        while filled < n:
            if self._pos >= self._buf.size:
                self._buf = self.rng.random(_BUFFER)
                self._pos = 0
            take = min(n - filled, self._buf.size - self._pos)
            out[filled:filled + take] = self._buf[self._pos:self._pos + take]
            self._pos += take
            filled += take
        return out

    def bernoulli(self, p: float) -> bool:
        """True with probability ``p`` (p=1 is always True, p=0 never)."""
        return self.uniform() < p

    def categorical(self, probs) -> int:
        """Index drawn from ``probs`` (need not be normalised); zero entries are never drawn."""
        ps = probs.tolist() if isinstance(probs, np.ndarray) else list(probs)
        x = self.uniform() * sum(ps)
        acc = 0.0
        last = -1
        for i, v in enumerate(ps):
            if v > 0.0:
                acc += v
                last = i
                if x < acc:
                    return i
        # x rounded up onto the total
        return last

    def exponential(self, scale: float, size: int) -> np.ndarray:
        return self.rng.exponential(scale, size)


def categorical_rows(probs, u) -> np.ndarray:
    """Row-wise ``Sampler.categorical`` for given uniforms: same additions, same ties."""
    probs = np.asarray(probs, dtype=np.float64)
    cdf = np.cumsum(probs, axis=1)
    x = np.asarray(u)[:, None] * cdf[:, -1:]
    hit = (x < cdf) & (probs > 0.0)
    pos = probs > 0.0
    last = probs.shape[1] - 1 - np.argmax(pos[:, ::-1], axis=1)
    return np.where(hit.any(axis=1), np.argmax(hit, axis=1), last)
