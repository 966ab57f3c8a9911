"""Loss streams: per-round (primary, secondary) loss vectors over K experts.

Rounds are 0-indexed in memory.  The text formats written by
:func:`write_stream` and :mod:`bicrit.trace` number rounds from 1.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from .params import InfeasibleStreamError

_CLIP_SLACK = 1e-12


def as_loss_matrix(x, name="losses") -> np.ndarray:
    """Float64 copy of ``x`` with entries checked to lie in [0, 1].

    Entries within 1e-12 of the box are clipped onto it (rounding noise from
    constructions such as ``c + delta * T**alpha / gap``); anything further
    out raises :class:`InfeasibleStreamError`.
    """
    a = np.array(x, dtype=np.float64)
    if a.size and (np.isnan(a).any() or a.min() < -_CLIP_SLACK or a.max() > 1 + _CLIP_SLACK):
        raise InfeasibleStreamError(f"{name} must lie in [0, 1]")
    return np.clip(a, 0.0, 1.0)


class History:
    """Realized selections A_1..A_{t-1}, with the length of the trailing run."""

    __slots__ = ("selections", "last", "streak")

    def __init__(self):
        self.selections: list[int] = []
        self.last = -1
        self.streak = 0

    def append(self, a: int) -> None:
        if a == self.last:
            self.streak += 1
        else:
            self.last = a
            self.streak = 1
        self.selections.append(a)

    def __len__(self):
        return len(self.selections)


class LossStream:
    """Oblivious stream: a fixed T x K primary matrix and T x K secondary matrix.

    ``c``, ``delta`` and ``alpha`` are optional metadata carried into the file
    header; ``meta`` holds construction details (world index, clamps, ...).
    """

    adaptive = False

    def __init__(self, primary, secondary, *, c=None, delta=None, alpha=None, meta=None):
        P = as_loss_matrix(primary, "primary")
        S = as_loss_matrix(secondary, "secondary")
        if P.ndim != 2 or P.shape != S.shape or P.shape[0] < 1 or P.shape[1] < 1:
            raise ValueError(f"primary/secondary must be matching T x K arrays, got {P.shape} and {S.shape}")
        P.setflags(write=False)
        S.setflags(write=False)
        self.primary = P
        self.secondary = S
        self.c = c
        self.delta = delta
        self.alpha = alpha
        self.meta = dict(meta or {})

    @property
    def T(self) -> int:
        return self.primary.shape[0]

    @property
    def K(self) -> int:
        return self.primary.shape[1]

    def losses(self, t: int, history=None):
        return self.primary[t], self.secondary[t]

    def rows(self, start: int, stop: int):
        return self.primary[start:stop], self.secondary[start:stop]

    def __repr__(self):
        return f"LossStream(T={self.T}, K={self.K})"


class AdaptiveStream:
    """Stream whose losses at round t may depend on the realized selections before t.

    Subclasses implement :meth:`losses`; it must be a deterministic function of
    ``(t, history)`` and whatever seed the subclass was built with.
    """

    adaptive = True
    c = delta = alpha = None

    def __init__(self, T: int, K: int, meta=None):
        if T < 1 or K < 1:
            raise ValueError("T and K must be positive")
        self.T = T
        self.K = K
        self.meta = dict(meta or {})

    def losses(self, t: int, history: History):
        raise NotImplementedError


def _fmt(x) -> str:
    if x is None:
        return "nan"
    return repr(float(x))


def write_stream(stream: LossStream, path) -> None:
    """Tab-separated export: header then one line of 2K losses per round.

    Each line holds the K primary losses followed by the K secondary losses.
    """
    if stream.adaptive:
        raise TypeError("adaptive streams export only realized trajectories; use RunTrace.realized_stream()")
    lines = [
        f"#bicrit-stream v1 K={stream.K} T={stream.T} c={_fmt(stream.c)} "
        f"delta={_fmt(stream.delta)} alpha={_fmt(stream.alpha)}"
    ]
    for p, s in zip(stream.primary, stream.secondary):
        lines.append("\t".join(repr(float(v)) for v in np.concatenate([p, s])))
    Path(path).write_text("\n".join(lines) + "\n")


def _parse_header(line: str, magic: str) -> dict:
    parts = line.split()
    if len(parts) < 2 or parts[0] != magic or parts[1] != "v1":
        raise ValueError(f"expected '{magic} v1' header, got {line!r}")
    fields = {}
    for tok in parts[2:]:
        k, _, v = tok.partition("=")
        fields[k] = v
    return fields


def read_stream(path) -> LossStream:
    text = Path(path).read_text().splitlines()
    if not text:
        raise ValueError(f"{path}: empty stream file")
    head = _parse_header(text[0], "#bicrit-stream")
    K, T = int(head["K"]), int(head["T"])
    rows = [ln.split("\t") for ln in text[1:] if ln.strip()]
    if len(rows) != T:
        raise ValueError(f"{path}: header says T={T} but found {len(rows)} rows")
    data = np.array(rows, dtype=np.float64)
    if data.shape[1] != 2 * K:
        raise ValueError(f"{path}: expected {2 * K} columns, found {data.shape[1]}")

    def meta(key):
        v = float(head.get(key, "nan"))
        return None if math.isnan(v) else v

    return LossStream(data[:, :K], data[:, K:], c=meta("c"), delta=meta("delta"), alpha=meta("alpha"))
