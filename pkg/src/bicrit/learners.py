"""Scalar-loss expert learners with a common step/observe interface.

* ``ExponentialWeights`` samples afresh from its weights every round.
* ``ShrinkingDartboard`` keeps its previous pick with probability
  w_t(h)/w_{t-1}(h) and otherwise resamples, so the pick's marginal law is
  still w_t / W_t while switches stay O(sqrt(E log K)).
* ``FollowLazyLeader`` follows the leader of cumulative loss minus an
  exponential perturbation that is held fixed between re-draws.
"""

from __future__ import annotations

import math

import numpy as np

from .sampling import Sampler, categorical_rows

UNDERFLOW = 1e-150
FLL_VARIANTS = ("grid", "coupled")


def _renormalize(w: np.ndarray) -> None:
    # ratios between entries are untouched, so p_t and SD keep-ratios are too
    top = w.max()
    if top < UNDERFLOW:
        w /= top


class Learner:
    """Base class: one ``step()`` then one ``observe(loss)`` per round."""

    kind = ""

    def __init__(self, K: int, rounds: int, seed=None, sampler: Sampler | None = None):
        if K < 1:
            raise ValueError(f"K must be >= 1, got {K}")
        if rounds < 1:
            raise ValueError(f"rounds must be >= 1, got {rounds}")
        self.K = K
        self.rounds = rounds
        self.sampler = sampler if sampler is not None else Sampler(seed)
        self.t = 0
        self.held: int | None = None
        self._awaiting_loss = False

    def step(self):
        """Pick this round's expert; returns ``(selection, distribution)``."""
        if self._awaiting_loss:
            raise RuntimeError("step() called twice without observe()")
        self._awaiting_loss = True
        if self.K == 1:
            self.held = 0
            return 0, np.ones(1)
        sel, dist = self._step()
        self.held = sel
        return sel, dist

    def observe(self, loss, validate: bool = True) -> None:
        """Feed this round's loss vector.

        ``validate=False`` skips the range check for rows of an already
        validated stream.
        """
        if validate:
            loss = np.asarray(loss, dtype=np.float64)
            if loss.shape != (self.K,):
                raise ValueError(f"expected a loss vector of length {self.K}, got shape {loss.shape}")
            if loss.min() < 0.0 or loss.max() > 1.0:
                raise ValueError("losses must lie in [0, 1]")
        if not self._awaiting_loss:
            raise RuntimeError("observe() called before step()")
        self._awaiting_loss = False
        self._observe(loss)
        self.t += 1

    def distribution(self) -> np.ndarray:
        raise NotImplementedError

    def _finish_bulk(self, losses, sels, log_factor):
        # leave the learner as if every round had gone through step/observe (up to scale)
        logw = log_factor * np.sum(losses, axis=0)
        self.weights = np.exp(logw - logw.max())
        self.held = int(sels[-1])
        self.t += len(losses)

    def run_oblivious(self, losses):
        """Play one round per row of a fixed loss matrix; returns ``(selections, distributions)``."""
        losses = np.asarray(losses, dtype=np.float64)
        sels = np.empty(losses.shape[0], dtype=np.int64)
        dists = np.empty(losses.shape)
        for t, row in enumerate(losses):
            sels[t], dists[t] = self.step()
            self.observe(row, validate=False)
        return sels, dists

    def _fresh(self):
        return self.t == 0 and not self._awaiting_loss and self.K > 1

    def _step(self):
        raise NotImplementedError

    def _observe(self, loss):
        raise NotImplementedError


class ExponentialWeights(Learner):
    kind = "ew"

    def __init__(self, K, rounds, seed=None, sampler=None, rate=None):
        super().__init__(K, rounds, seed, sampler)
        self.rate = rate if rate is not None else math.sqrt(8.0 * math.log(K) / rounds)
        self.weights = np.ones(K)

    def distribution(self):
        return self.weights / self.weights.sum()

    def _step(self):
        p = self.distribution()
        return self.sampler.categorical(p), p

    def _observe(self, loss):
        self.weights *= np.exp(-self.rate * loss)
        _renormalize(self.weights)

    def run_oblivious(self, losses):
        # the law is fixed in advance, so all rounds are drawn at once
        if not self._fresh():
            return super().run_oblivious(losses)
        dists = _weights_from_cumulative(losses, -self.rate)
        sels = categorical_rows(dists, self.sampler.uniforms(dists.shape[0]))
        self._finish_bulk(losses, sels, -self.rate)
        return sels, dists


class ShrinkingDartboard(Learner):
    kind = "sd"

    def __init__(self, K, rounds, seed=None, sampler=None, eps=None):
        super().__init__(K, rounds, seed, sampler)
        if eps is None:
            eps = min(0.5, math.sqrt(math.log(K) / rounds)) if K > 1 else 0.5
        if not 0.0 < eps < 1.0:
            raise ValueError(f"eps must lie in (0, 1), got {eps}")
        self.eps = eps
        self.weights = np.ones(K)
        # w_t(h) / w_{t-1}(h) from the latest update
        self.keep_ratio = np.ones(K)

    def distribution(self):
        return self.weights / self.weights.sum()

    def _step(self):
        p = self.distribution()
        if self.held is not None and self.sampler.bernoulli(self.keep_ratio[self.held]):
            return self.held, p
        return self.sampler.categorical(p), p

    def _observe(self, loss):
        factor = (1.0 - self.eps) ** loss
        self.weights *= factor
        self.keep_ratio = factor
        _renormalize(self.weights)

    def run_oblivious(self, losses):
        if not self._fresh():
            return super().run_oblivious(losses)
        losses = np.asarray(losses, dtype=np.float64)
        dists = _weights_from_cumulative(losses, math.log1p(-self.eps))
        ratios = ((1.0 - self.eps) ** losses).tolist()
        rows = dists.tolist()
        draw = self.sampler
        held = draw.categorical(rows[0])
        sels = [held] * len(rows)
        for t in range(1, len(rows)):
            if not draw.bernoulli(ratios[t - 1][held]):
                held = draw.categorical(rows[t])
            sels[t] = held
        self.keep_ratio = np.array(ratios[-1])
        self._finish_bulk(losses, sels, math.log1p(-self.eps))
        return np.array(sels, dtype=np.int64), dists


def _weights_from_cumulative(losses, log_factor):
    # row t: normalized exp(log_factor * cumulative loss before round t)
    losses = np.asarray(losses, dtype=np.float64)
    cum = np.zeros_like(losses)
    np.cumsum(losses[:-1], axis=0, out=cum[1:])
    logw = log_factor * cum
    logw -= logw.max(axis=1, keepdims=True)
    w = np.exp(logw)
    return w / w.sum(axis=1, keepdims=True)


def leader_law(cum_loss, rate: float) -> np.ndarray:
    """Law of argmin_h (L_h - X_h) for i.i.d. X_h ~ Exp(rate).

    With c_g = exp(-rate (L_g - min L)), expert h leads with probability
    c_h * int_0^1 prod_{g != h} (1 - c_g u) du; the polynomial is expanded
    and integrated exactly.
    """
    cum_loss = np.asarray(cum_loss, dtype=np.float64)
    K = cum_loss.size
    c = np.exp(-rate * (cum_loss - cum_loss.min()))
    out = np.empty(K)
    for h in range(K):
        poly = np.ones(1)
        for g in range(K):
            if g != h:
                poly = np.convolve(poly, [1.0, -c[g]])
        out[h] = c[h] * np.sum(poly / np.arange(1, poly.size + 1))
    out = np.clip(out, 0.0, None)
    return out / out.sum()


class FollowLazyLeader(Learner):
    """Perturbed leader with a perturbation held fixed between re-draws.

    ``variant="grid"`` re-draws the exponential perturbation at the start of
    every time cell of ceil(scale) rounds; ``variant="coupled"`` draws it once.
    Within a cell the leader only moves when cumulative losses overtake it.
    Against oblivious losses the per-round law of the pick is
    :func:`leader_law` in both variants.
    """

    kind = "fll"

    def __init__(self, K, rounds, seed=None, sampler=None, scale=None, variant="grid"):
        super().__init__(K, rounds, seed, sampler)
        if variant not in FLL_VARIANTS:
            raise ValueError(f"unknown FLL variant {variant!r}; choose from {FLL_VARIANTS}")
        if scale is None:
            scale = math.sqrt(rounds / math.log(K)) if K > 1 else 1.0
        self.scale = scale
        self.variant = variant
        self.cell = max(1, math.ceil(scale))
        self.cum = np.zeros(K)
        self.perturbation = None

    def distribution(self):
        return leader_law(self.cum, 1.0 / self.scale)

    def _step(self):
        if self.perturbation is None or (self.variant == "grid" and self.t % self.cell == 0):
            self.perturbation = self.sampler.exponential(self.scale, self.K)
        sel = int(np.argmin(self.cum - self.perturbation))
        return sel, self.distribution()

    def _observe(self, loss):
        self.cum += loss


LEARNERS = {"ew": ExponentialWeights, "sd": ShrinkingDartboard, "fll": FollowLazyLeader}


def make_learner(kind: str, K: int, rounds: int, seed=None, sampler=None, **options) -> Learner:
    """Build a learner tuned for ``rounds`` rounds over ``K`` experts."""
    try:
        cls = LEARNERS[kind]
    except KeyError:
        raise ValueError(f"unknown learner {kind!r}; choose from {sorted(LEARNERS)}") from None
    return cls(K, rounds, seed=seed, sampler=sampler, **options)
