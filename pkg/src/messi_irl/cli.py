"""Command line entry point: ``irl run``, ``irl sweep`` and ``irl export-env``."""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys

from .environments import BUILDERS, make_environment
from .harness import (
    SWEEP_AXES,
    ConfigError,
    ExperimentConfig,
    aggregate,
    final_rows,
    run_experiment,
    sweep,
    write_results,
)
from .mdp import save_mdp

log = logging.getLogger("messi_irl")


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="irl", description="Seeded MaxEnt / MESSI experiments.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", required=True, help="JSON experiment config")
        sp.add_argument("--out", help="output directory for runs.csv and summary.csv")
        sp.add_argument("--reps", type=int, help="number of seeds (overrides the config)")
        sp.add_argument("--seed-base", type=int, help="first seed (overrides the config)")
        sp.add_argument("--workers", type=int, help="parallel worker processes")

    common(sub.add_parser("run", help="run the configured algorithms"))
    sp = sub.add_parser("sweep", help="sweep one parameter with paired seeds")
    common(sp)
    sp.add_argument("--axis", required=True, choices=SWEEP_AXES)
    sp.add_argument("--values", type=float, nargs="+", help="axis values (overrides the config)")

    ex = sub.add_parser("export-env", help="write an environment's MDP as JSON")
    ex.add_argument("--name", required=True, choices=sorted(BUILDERS))
    ex.add_argument("--seed", type=int, default=0, help="grid-world reward seed")
    ex.add_argument("--out", required=True)
    return p


def _load(args) -> ExperimentConfig:
    cfg = ExperimentConfig.from_json(args.config)
    changes = {}
    if args.reps is not None:
        changes.update(reps=args.reps, seeds=None)
    if args.seed_base is not None:
        changes.update(seed_base=args.seed_base, seeds=None)
    if args.workers is not None:
        changes["workers"] = args.workers
    if args.out is not None:
        changes["output"] = args.out
    if changes:
        cfg = dataclasses.replace(cfg, **changes)
    if cfg.output is None:
        raise ConfigError("no output directory: set 'output' in the config or pass --out")
    return cfg


def _axis_values(axis, values):
    if values is None:
        return None
    if axis in ("u", "iterations"):
        if any(v != int(v) for v in values):
            raise ConfigError(f"{axis} values must be integers")
        return [int(v) for v in values]
    return list(values)


def _report(rows, out):
    for r in sorted(aggregate(final_rows(rows)), key=lambda r: (str(r["axis_value"]), r["algorithm"])):
        prefix = f"{r['axis_value']}\t" if r["axis_value"] != "" else ""
        print(f"{prefix}{r['algorithm']}\tmean={r['mean']:.6g}\tstderr={r['stderr']:.3g}\tn={r['n']}")
    runs, summary = write_results(rows, out)
    print(f"wrote {runs} and {summary}")


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        if args.command == "export-env":
            params = {"rng": args.seed} if args.name == "gridworld" else {}
            save_mdp(make_environment(args.name, **params).mdp, args.out)
            print(f"wrote {args.out}")
            return 0
        cfg = _load(args)
        if args.command == "run":
            rows = run_experiment(cfg)
        else:
            values = _axis_values(args.axis, args.values)
            if values is not None:
                cfg = dataclasses.replace(cfg, sweep_axis=args.axis, sweep_values=tuple(values))
            rows = sweep(cfg, args.axis)
    except ConfigError as exc:
        print(f"irl: config error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"irl: error: {exc}", file=sys.stderr)
        return 1
    _report(rows, cfg.output)
    return 0


if __name__ == "__main__":
    sys.exit(main())
