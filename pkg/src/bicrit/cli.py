"""Command-line entry point: ``bicrit run`` and ``bicrit slope``."""

from __future__ import annotations

import argparse
import sys

from .harness import _parse_int_list as _int_list
from .harness import format_csv, load_config, read_csv, run_experiment, slope_fit


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bicrit", description="Bicriteria expert-advice experiments.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment and write one CSV row per (T, seed)")
    run.add_argument("--config", help="flat 'key = value' config file")
    run.add_argument("--algorithm")
    run.add_argument("--adversary")
    run.add_argument("--T", type=_int_list, help="horizon(s), e.g. '1024 4096' or '2^10'")
    run.add_argument("--alpha", type=float)
    run.add_argument("--delta", type=float)
    run.add_argument("--c", type=float)
    run.add_argument("--K", type=int)
    run.add_argument("--eta", type=float)
    run.add_argument("--reactivations", help="'every G' or a list of 1-based rounds")
    run.add_argument("--seeds", type=_int_list, help="e.g. '0-29' or '1 2 3'")
    run.add_argument("--out", help="CSV path (stdout if omitted)")

    slope = sub.add_parser("slope", help="log-log slope of mean max(reg1, reg2c) against T")
    slope.add_argument("--in", dest="path", required=True)
    slope.add_argument("--flavor", choices=("expected", "realized"), default="realized")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "run":
        try:
            cfg = load_config(args.config, algorithm=args.algorithm, adversary=args.adversary, T=args.T,
                              alpha=args.alpha, delta=args.delta, c=args.c, K=args.K, eta=args.eta,
                              reactivations=args.reactivations, seeds=args.seeds, out=args.out)
        except (OSError, ValueError, TypeError) as exc:
            print(f"bicrit: {exc}", file=sys.stderr)
            return 2
        rows = run_experiment(cfg)
        text = format_csv(rows)
        if cfg.out:
            with open(cfg.out, "w") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
        return 0 if all(r["status"] == "ok" for r in rows) else 1

    try:
        exponent, residual = slope_fit(read_csv(args.path), flavor=args.flavor)
    except (OSError, ValueError) as exc:
        print(f"bicrit: {exc}", file=sys.stderr)
        return 2
    print(f"{exponent!r},{residual!r}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
