"""Command-line entry point: ``anonreach <command> <config.json> [options]``."""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys

from .harness.campaign import TRACE_COLUMNS
from .harness.config import ExperimentConfig, load_config
from .harness.experiments import (
    run_abcd,
    run_coverage,
    run_fig1,
    run_fig2,
    run_measure,
    run_simulate,
)
from .harness.io import emit_results
from .measurement import CURVE_COLUMNS
from .population import ConfigError, UnsupportedTopologyError

log = logging.getLogger("anonreach")


def _metadata(cfg: ExperimentConfig) -> dict:
    return {"trials": cfg.trials, "seed": cfg.seed, "scenario": cfg.scenario, "config": cfg.to_dict()}


def _measure(cfg):
    return {"curve": run_measure(cfg)}, {"curve": CURVE_COLUMNS}


def _simulate(cfg):
    trace, rec = run_simulate(cfg)
    return {"trace": trace, "records": [rec]}, {"trace": TRACE_COLUMNS}


def _sweep_k(cfg):
    return {"records": run_fig2(cfg)}, {}


def _coverage(cfg):
    return {"records": run_coverage(cfg)}, {}


def _abcd(cfg):
    return {"records": run_abcd(cfg)}, {}


def _mc(cfg):
    return run_fig1(cfg), {}


COMMANDS = {
    "measure": (_measure, "reach curve (expected reach, sigma, bounds) for a win sequence"),
    "simulate": (_simulate, "one paced campaign with a per-request trace"),
    "sweep-k": (_sweep_k, "relative ROAS across group sizes k"),
    "coverage": (_coverage, "ROAS across targeted-user coverage levels"),
    "abcd": (_abcd, "measurement error and ROAS of approaches A-D"),
    "mc": (_mc, "Monte Carlo reach distributions across impressions and k"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="anonreach", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("config", help="path to a JSON experiment config")
        p.add_argument("--seed", type=int, help="override the master seed")
        p.add_argument("--trials", type=int, help="override the number of trials")
        p.add_argument("--out", help="output directory (overrides config.output)")
        p.add_argument("--format", choices=("csv", "json"), default="csv", help="table format")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config)
        overrides = {k: v for k, v in (("seed", args.seed), ("trials", args.trials),
                                        ("output", args.out)) if v is not None}
        cfg = dataclasses.replace(cfg, **overrides)
        if cfg.trials < 1:
            raise ConfigError("trials must be >= 1")
        runner, columns = COMMANDS[args.command]
        log.info("running %s (%d trials, seed %d)", args.command, cfg.trials, cfg.seed)
        tables, cols = runner(cfg)
        paths = emit_results(tables, cfg.output, args.command.replace("-", "_"), args.format,
                             _metadata(cfg), cols)
    except (ConfigError, UnsupportedTopologyError, ValueError) as exc:
        print(f"anonreach: error: {exc}", file=sys.stderr)
        return 2
    for table, path in paths.items():
        print(f"{table}: {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
