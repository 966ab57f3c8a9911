"""Independent reference implementations used by the tests.

Everything here is written the slow, obvious way (quadratic scans, exact
fractions, explicit path enumeration) and shares no code with the package.
"""

from fractions import Fraction

import numpy as np


def brute_interval_excess(seq, c):
    """O(T^2) max over [T1, T2] of sum(seq[T1..T2] - c); leftmost start, then shortest."""
    best, arg = None, None
    n = len(seq)
    for i in range(n):
        s = 0.0
        for j in range(i, n):
            s += seq[j] - c
            if best is None or s > best:
                best, arg = s, (i + 1, j + 1)
    return best, arg


def exact_ceil_pow(T, num, den):
    """ceil(T^(num/den)) in integer arithmetic."""
    k = 0
    target = T ** num
    while k ** den < target:
        k += 1
    return k


def replay_deactivations(secondary_columns, c, threshold, resets=(0,), tol=Fraction(1, 10 ** 9)):
    """Exact deactivation rounds (1-based) via prefix sums of exact fractions.

    An expert leaves after round t when the largest excess of an interval
    inside the current block and ending at t passes ``threshold`` (+ tol);
    detection is suppressed on the last round of each block.
    """
    T = len(secondary_columns[0])
    starts = sorted(set(resets) | {0})
    ends = starts[1:] + [T]
    out = []
    c = Fraction(c)
    thr = Fraction(threshold) + tol
    for a, b in zip(starts, ends):
        for h, col in enumerate(secondary_columns):
            prefix = Fraction(0)
            lowest = Fraction(0)
            for t in range(a, b - 1):
                prefix += Fraction(col[t]) - c
                if prefix - lowest > thr:
                    out.append((t + 1, h))
                    break
                lowest = min(lowest, prefix)
    return sorted(out)


def interval_excess_frac(col, c):
    """Exact max interval excess by double loop over fractions (small inputs only)."""
    c = Fraction(c)
    vals = [Fraction(x) - c for x in col]
    best = None
    for i in range(len(vals)):
        s = Fraction(0)
        for j in range(i, len(vals)):
            s += vals[j]
            best = s if best is None or s > best else best
    return best


class ScriptedSampler:
    """Sampler whose discrete draws follow a script of branch indices.

    Unscripted draws take branch 0.  ``trail`` records (branch, n_branches)
    for each draw, and ``prob`` the probability of the path taken so far.
    """

    def __init__(self, prefix=()):
        self.prefix = list(prefix)
        self.trail = []
        self.prob = 1.0

    def _choose(self, options):
        i = len(self.trail)
        k = self.prefix[i] if i < len(self.prefix) else 0
        self.trail.append((k, len(options)))
        value, p = options[k]
        self.prob *= p
        return value

    def bernoulli(self, p):
        options = [(v, q) for v, q in ((True, p), (False, 1.0 - p)) if q > 0]
        return self._choose(options)

    def categorical(self, probs):
        probs = [float(x) for x in probs]
        total = sum(probs)
        return self._choose([(i, q / total) for i, q in enumerate(probs) if q > 0])

    def uniform(self):
        raise NotImplementedError("scripted sampler only enumerates discrete draws")

    def exponential(self, scale, size):
        raise NotImplementedError("scripted sampler only enumerates discrete draws")


def enumerate_paths(run):
    """Yield ``(probability, result)`` for every outcome of ``run(sampler)`` (depth-first)."""
    prefix = []
    while True:
        sampler = ScriptedSampler(prefix)
        result = run(sampler)
        yield sampler.prob, result
        trail = sampler.trail
        j = len(trail) - 1
        while j >= 0 and trail[j][0] + 1 >= trail[j][1]:
            j -= 1
        if j < 0:
            return
        prefix = [k for k, _ in trail[:j]] + [trail[j][0] + 1]


def all_pairs_interval_excess(seq, c):
    """O(T^2) table of every interval sum; first maximum in (start, end) order."""
    x = np.asarray(seq, dtype=np.float64) - c
    n = x.size
    prefix = np.concatenate([[0.0], np.cumsum(x)])
    table = prefix[None, 1:] - prefix[:-1, None]   # [start, end]
    table[np.tril_indices(n, -1)] = -np.inf
    k = int(np.argmax(table))
    i, j = divmod(k, n)
    return float(table[i, j]), (i + 1, j + 1)
