"""Command line entry point: ``decfilt run|skf-track|report|gen-model``."""

from __future__ import annotations

import argparse
import sys

from .decay import parse_decay
from .harness import ConfigError, compare_report, format_report, load_config, run_experiment
from .models import make_random_hmm, save_model, validate


def _decay_arg(text: str) -> str:
    try:
        parse_decay(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None
    return text


def _add_overrides(p: argparse.ArgumentParser) -> None:
    p.add_argument("config", help="experiment config (JSON)")
    p.add_argument("--decay", action="append", type=_decay_arg, metavar="SPEC",
                   help="uniform|window:W|exp:BETA|poly:DELTA; repeat to sweep (replaces the config's decays)")
    p.add_argument("--limit", type=int, metavar="L", help="evidence limit applied to every decay")
    p.add_argument("--pf", action="append", type=int, metavar="N", help="particle count; repeat to sweep")
    p.add_argument("--gap", type=int, metavar="G", help="tally x_T every G MCMC steps (skf-track)")
    p.add_argument("--seed", type=int, help="root seed")
    p.add_argument("--replications", type=int)
    p.add_argument("-o", "--output", help="CSV path (defaults to the config's output)")


def _run(args, scenario=None) -> int:
    try:
        cfg = load_config(args.config)
        if scenario is not None:
            cfg.scenario = scenario
        if args.decay:
            cfg.decays = args.decay
        for name in ("limit", "gap", "seed", "replications"):
            if getattr(args, name) is not None:
                setattr(cfg, name, getattr(args, name))
        if args.pf:
            cfg.particles = args.pf
        cfg.validate()
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    rows = run_experiment(cfg, args.output)
    print(format_report(compare_report(rows=rows)))
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="decfilt", description="Decayed MCMC filtering experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment config and write its CSV")
    _add_overrides(p_run)
    p_skf = sub.add_parser("skf-track", help="run switching Kalman filter tracking from a config")
    _add_overrides(p_skf)

    p_rep = sub.add_parser("report", help="summarize result CSVs (mean ± stderr)")
    p_rep.add_argument("csv", nargs="+")

    p_gen = sub.add_parser("gen-model", help="write a random HMM file")
    p_gen.add_argument("--states", type=int, required=True)
    p_gen.add_argument("--obs", type=int, required=True)
    p_gen.add_argument("--tsharp", type=float, required=True)
    p_gen.add_argument("--osharp", type=float, required=True)
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("-o", "--output", required=True)

    args = parser.parse_args(argv)
    if args.command == "run":
        return _run(args)
    if args.command == "skf-track":
        return _run(args, scenario="skf_track")
    if args.command == "report":
        try:
            print(format_report(compare_report(args.csv)))
        except (ValueError, OSError) as exc:
            print(f"report error: {exc}", file=sys.stderr)
            return 2
        return 0
    try:
        model = make_random_hmm(args.states, args.obs, args.tsharp, args.osharp, seed=args.seed)
    except ValueError as exc:
        print(f"gen-model error: {exc}", file=sys.stderr)
        return 2
    assert not validate(model)
    save_model(model, args.output)
    return 0


if __name__ == "__main__":
    sys.exit(main())
