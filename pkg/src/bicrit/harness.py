"""Batch experiments: build streams, run algorithms, collect one CSV row per (seed, T)."""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .adversaries import AdaptiveLowerBound, build_appendixB, build_linK, build_theorem1, build_theorem2, \
    random_bounded_variance
from .meta import asl_run, run_learner
from .metrics import check_assumption2, check_assumption2_prime, report
from .params import AssumptionParams, InfeasibleStreamError, OracleStarvedError
from .sampling import Sampler
from .sleeping import a1_run, a2_run, reactivation_rounds, restart_a1_run
from .streams import read_stream

CSV_COLUMNS = (
    "seed", "T", "K", "alpha", "delta", "c", "algorithm", "adversary", "world", "status",
    "reg1_expected", "reg1_realized", "reg2c_expected", "reg2c_realized", "switches",
    "assumption2_pass", "assumption2prime_pass", "sreg_max", "active_rounds_min",
)
BASE_LEARNERS = ("ew", "sd", "fll")
ADVERSARIES = ("theorem1", "theorem2", "adaptive-lb", "appendixB", "linK", "random-good")
FLAVORS = ("expected", "realized")


@dataclass
class ExperimentConfig:
    algorithm: str = "asl:sd"
    adversary: str = "random-good"
    T: tuple = (4096,)
    alpha: float = 0.5
    delta: float = 0.5
    c: float = 0.5
    K: int = 2
    eta: float | None = None
    reactivations: str | None = None
    seeds: tuple = (0,)
    out: str | None = None
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        self.T = tuple(int(t) for t in np.atleast_1d(self.T))
        self.seeds = tuple(int(s) for s in np.atleast_1d(self.seeds))
        if not self.seeds:
            raise ValueError("seeds must be nonempty")
        if not self.T or min(self.T) < 1:
            raise ValueError("T values must be positive")
        if self.K < 1:
            raise ValueError(f"K must be >= 1, got {self.K}")
        check_algorithm(self.algorithm)
        if self.adversary not in ADVERSARIES and not self.adversary.startswith("file:"):
            raise ValueError(f"unknown adversary {self.adversary!r}; choose from {ADVERSARIES} or file:<path>")
        AssumptionParams(self.c, self.delta, self.alpha)


def check_algorithm(name: str) -> None:
    if name in BASE_LEARNERS or name in ("a2", "restart-a1"):
        return
    prefix, _, base = name.partition(":")
    if prefix in ("asl", "a1", "restart-a1") and base in BASE_LEARNERS:
        return
    raise ValueError(f"unknown algorithm {name!r}")


# ------------------------------------------------------------ config files

def _parse_int_list(text: str):
    out = []
    for tok in text.replace(",", " ").split():
        if "-" in tok[1:]:
            lo, hi = tok.split("-", 1)
            out.extend(range(int(lo), int(hi) + 1))
        elif "^" in tok:
            b, e = tok.split("^")
            out.append(int(b) ** int(e))
        else:
            out.append(int(tok))
    return tuple(out)


_CONVERTERS = {
    "algorithm": str, "adversary": str, "reactivations": str, "out": str,
    "alpha": float, "delta": float, "c": float, "eta": float, "K": int,
    "T": _parse_int_list, "seeds": _parse_int_list,
}


def parse_config_text(text: str) -> dict:
    """Flat ``key = value`` lines; ``#`` starts a comment.

    ``T`` and ``seeds`` take lists: ``1024 4096``, ``0-29`` or ``2^10``.
    Unknown keys are passed to the learner as options.
    """
    values = {}
    options = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {n}: expected 'key = value', got {line!r}")
        key, val = (s.strip() for s in line.split("=", 1))
        if key in _CONVERTERS:
            values[key] = _CONVERTERS[key](val)
        else:
            options[key] = _option_value(val)
    if options:
        values["options"] = options
    return values


def _option_value(val: str):
    for conv in (int, float):
        try:
            return conv(val)
        except ValueError:
            pass
    return val


def load_config(path=None, **overrides) -> ExperimentConfig:
    values = parse_config_text(Path(path).read_text()) if path else {}
    values.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig(**values)


# ------------------------------------------------------------------ runs

def build_stream(cfg: ExperimentConfig, T: int, seed: int):
    """(stream, params, world) for one row; adversary-fixed constants override the config."""
    stream_seed = [seed, 0]
    adv = cfg.adversary
    world = ""
    if adv == "theorem1":
        stream, c = build_theorem1(T, seed=stream_seed)
        params = AssumptionParams(c, cfg.delta, cfg.alpha)
        world = stream.meta["world"]
    elif adv == "theorem2":
        stream, params = build_theorem2(T, cfg.alpha)
    elif adv == "adaptive-lb":
        stream = AdaptiveLowerBound(T, cfg.alpha, cfg.c, cfg.delta, cfg.K, seed=stream_seed)
        params = AssumptionParams(cfg.c, cfg.delta, cfg.alpha)
    elif adv == "appendixB":
        stream, world = build_appendixB(T, cfg.alpha, seed=stream_seed, c=cfg.c)
        params = AssumptionParams(cfg.c, 0.5, cfg.alpha)
    elif adv == "linK":
        stream = build_linK(T, cfg.K, cfg.alpha, cfg.c, cfg.delta)
        params = AssumptionParams(cfg.c, cfg.delta, cfg.alpha)
    elif adv == "random-good":
        params = AssumptionParams(cfg.c, cfg.delta, cfg.alpha)
        stream = random_bounded_variance(T, cfg.K, params, seed=stream_seed)
    elif adv.startswith("file:"):
        stream = read_stream(adv[5:])
        params = AssumptionParams(*(cfg_val if v is None else v for v, cfg_val in
                                    ((stream.c, cfg.c), (stream.delta, cfg.delta), (stream.alpha, cfg.alpha))))
    else:
        raise ValueError(f"unknown adversary {adv!r}")
    return stream, params, world


def run_algorithm(cfg: ExperimentConfig, stream, params: AssumptionParams, seed: int):
    sampler = Sampler([seed, 1])
    name = cfg.algorithm
    opts = dict(cfg.options)
    if name in BASE_LEARNERS:
        return run_learner(name, stream, sampler=sampler, **opts)
    if name == "a2":
        return a2_run(stream, params, reactivation_rounds(cfg.reactivations, stream.T), eta=cfg.eta,
                      sampler=sampler, **opts)
    prefix, _, base = name.partition(":")
    base = base or "sd"
    if prefix == "asl":
        return asl_run(base, stream, params.alpha, sampler=sampler, **opts)
    if prefix == "a1":
        return a1_run(stream, params, base=base, sampler=sampler, **opts)
    if prefix == "restart-a1":
        return restart_a1_run(stream, params, reactivation_rounds(cfg.reactivations, stream.T), base=base,
                              sampler=sampler, **opts)
    raise ValueError(f"unknown algorithm {name!r}")


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def run_row(cfg: ExperimentConfig, T: int, seed: int) -> dict:
    row = dict.fromkeys(CSV_COLUMNS, "")
    row.update(seed=seed, T=T, K=cfg.K, alpha=cfg.alpha, delta=cfg.delta, c=cfg.c,
               algorithm=cfg.algorithm, adversary=cfg.adversary)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            stream, params, world = build_stream(cfg, T, seed)
            trace = run_algorithm(cfg, stream, params, seed)
    except OracleStarvedError:
        row["status"] = "starved"
        return row
    except InfeasibleStreamError:
        row["status"] = "infeasible"
        return row
    rep = report(trace, params.c)
    row.update(T=stream.T, K=stream.K, delta=params.delta, c=params.c, world=world, status="ok",
               reg1_expected=rep.reg1_expected, reg1_realized=rep.reg1_realized,
               reg2c_expected=rep.reg2c_expected, reg2c_realized=rep.reg2c_realized,
               switches=rep.switches, sreg_max=max(rep.sleeping.values()),
               active_rounds_min=min(rep.active_rounds.values()))
    if not stream.adaptive:
        row["assumption2_pass"] = check_assumption2(stream, params).all_pass
        row["assumption2prime_pass"] = check_assumption2_prime(trace, params).passed
    return row


def run_experiment(cfg: ExperimentConfig):
    """One row per (T, seed), ordered by T then seed."""
    return [run_row(cfg, T, seed) for T in cfg.T for seed in cfg.seeds]


def format_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for row in rows:
        w.writerow([_fmt(row[k]) for k in CSV_COLUMNS])
    return buf.getvalue()


def write_csv(rows, path) -> None:
    Path(path).write_text(format_csv(rows))


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


# ---------------------------------------------------------------- analysis

def _ok_rows(rows):
    return [r for r in rows if r["status"] == "ok"]


def _max_regret(row, flavor):
    return max(float(row[f"reg1_{flavor}"]), float(row[f"reg2c_{flavor}"]))


def aggregate(rows, flavor: str = "realized"):
    """{T: (mean, sample std, n)} of max(reg1, reg2c) over ok rows."""
    if flavor not in FLAVORS:
        raise ValueError(f"flavor must be one of {FLAVORS}")
    by_T = {}
    for r in _ok_rows(rows):
        by_T.setdefault(int(r["T"]), []).append(_max_regret(r, flavor))
    out = {}
    for T in sorted(by_T):
        v = np.array(by_T[T])
        out[T] = (float(v.mean()), float(v.std(ddof=1)) if v.size > 1 else 0.0, int(v.size))
    return out


def slope_fit(rows, flavor: str = "realized"):
    """Least-squares exponent of mean max(reg1, reg2c) against T on log-log axes.

    Returns ``(exponent, residual)`` where the residual is the RMS of the
    log-scale fit residuals.
    """
    agg = aggregate(rows, flavor)
    if len(agg) < 4:
        raise ValueError(f"slope fit needs at least 4 distinct T values, got {len(agg)}")
    x = np.log(np.array(list(agg), dtype=np.float64))
    y = np.log(np.array([m for m, _, _ in agg.values()]))
    (slope, icpt), *_ = np.linalg.lstsq(np.column_stack([x, np.ones_like(x)]), y, rcond=None)
    resid = y - (slope * x + icpt)
    return float(slope), float(math.sqrt(np.mean(resid ** 2)))


def with_overrides(cfg: ExperimentConfig, **kw) -> ExperimentConfig:
    return replace(cfg, **{k: v for k, v in kw.items() if v is not None})
