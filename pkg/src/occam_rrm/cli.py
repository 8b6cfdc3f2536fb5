"""Command line front end: `run` an experiment config, `sweep` a parameter,
`advise` a technique, `plot` a figure. Exit codes: 0 success, 2 config
error, 3 runtime error."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import fields, replace

from .advisor import ProblemTraits, advise, usecase_traits
from .errors import ConfigError, OccamRrmError
from .experiments import load_config, run_experiment, sweep
from .plots import PLOT_KINDS, emit_plot

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3


def _common_flags() -> argparse.ArgumentParser:
    # SUPPRESS keeps values set before the subcommand from being clobbered
    # by subparser defaults, so the flags work in either position.
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=argparse.SUPPRESS,
                   help="replace the config's seed list with this single seed")
    p.add_argument("--out-dir", default=argparse.SUPPRESS,
                   help="override the config's outputs directory")
    p.add_argument("--quiet", action="store_true", default=argparse.SUPPRESS,
                   help="suppress progress text (files are still written)")
    p.add_argument("--jobs", type=int, default=argparse.SUPPRESS,
                   help="parallel (solver, seed) cells; default $OCCAM_RRM_JOBS or 1")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common_flags()
    parser = argparse.ArgumentParser(prog="occam-rrm", parents=[common])
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", parents=[common], help="run an experiment config")
    run_p.add_argument("config", help="experiment JSON config path")
    run_p.set_defaults(func=cmd_run)

    sweep_p = sub.add_parser("sweep", parents=[common], help="sweep one config parameter")
    sweep_p.add_argument("config")
    sweep_p.add_argument("--param", required=True,
                         help="dotted config path, e.g. env.hysteresis")
    sweep_p.add_argument("--values", required=True,
                         help="JSON list of values, e.g. '[0, 2, 4, 6]'")
    sweep_p.set_defaults(func=cmd_sweep)

    advise_p = sub.add_parser("advise", parents=[common], help="recommend a technique")
    advise_p.add_argument("--traits", help="JSON object of ProblemTraits booleans")
    advise_p.add_argument("--use-case", help="one of SC, BF, ES, PC, LA, HO, AC")
    advise_p.add_argument("--variant", default="default")
    advise_p.set_defaults(func=cmd_advise)

    plot_p = sub.add_parser("plot", parents=[common], help="emit an SVG figure")
    plot_p.add_argument("input", help="summary.json or sweep.csv path")
    plot_p.add_argument("--kind", required=True, choices=PLOT_KINDS)
    plot_p.add_argument("--out", required=True, help="output SVG path")
    plot_p.set_defaults(func=cmd_plot)
    return parser


def _load_with_overrides(args):
    cfg = load_config(args.config)
    out_dir = getattr(args, "out_dir", None)
    if out_dir is not None:
        cfg = replace(cfg, outputs=out_dir)
    seed = getattr(args, "seed", None)
    if seed is not None:
        cfg = replace(cfg, seeds=(int(seed),))
    return cfg


def cmd_run(args) -> int:
    cfg = _load_with_overrides(args)
    summary_path = run_experiment(cfg, jobs=getattr(args, "jobs", None))
    if not getattr(args, "quiet", False):
        summary = json.loads(summary_path.read_text())
        for label in sorted(summary["solvers"]):
            metrics = summary["solvers"][label]["metrics"]
            stats = " ".join(f"{k}={v:.6g}" for k, v in sorted(metrics.items()))
            print(f"{label}: {stats}")
        print(f"summary: {summary_path}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _load_with_overrides(args)
    try:
        values = json.loads(args.values)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"--values is not valid JSON: {exc}") from exc
    if not isinstance(values, list):
        raise ConfigError("--values must be a JSON list")
    sweep_path = sweep(cfg, args.param, values, jobs=getattr(args, "jobs", None))
    if not getattr(args, "quiet", False):
        print(f"sweep: {sweep_path}")
    return EXIT_OK


def cmd_advise(args) -> int:
    if args.traits is not None:
        try:
            data = json.loads(args.traits)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"--traits is not valid JSON: {exc}") from exc
        known = {f.name for f in fields(ProblemTraits)}
        extra = set(data) - known
        if extra:
            raise ConfigError(f"unknown trait keys {sorted(extra)}; known: {sorted(known)}")
        traits = ProblemTraits(**{k: bool(v) for k, v in data.items()})
    elif args.use_case is not None:
        traits = usecase_traits(args.use_case, args.variant)
    else:
        raise ConfigError("advise needs --traits or --use-case")
    rec = advise(traits)
    if not getattr(args, "quiet", False):
        print(rec.render())
    print(json.dumps({
        "technique": rec.technique,
        "solver_hint": rec.solver_hint,
        "path": [list(step) for step in rec.path],
    }))
    return EXIT_OK


def cmd_plot(args) -> int:
    out = getattr(args, "out_dir", None)
    out_path = args.out if out is None else f"{out.rstrip('/')}/{args.out}"
    written = emit_plot(args.input, args.kind, out_path)
    if not getattr(args, "quiet", False):
        print(f"plot: {written}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OccamRrmError, OSError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    raise SystemExit(main())
