"""Shared plumbing for the experiment scripts."""

import argparse
import dataclasses
from pathlib import Path

from anonreach.harness.config import load_config
from anonreach.harness.io import emit_results

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def parse(default_config: str, description: str):
    parser = argparse.ArgumentParser(description=description)
    parser.add_argument("--config", default=str(CONFIGS / default_config))
    parser.add_argument("--trials", type=int)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--out")
    args = parser.parse_args()
    cfg = load_config(args.config)
    overrides = {k: v for k, v in (("trials", args.trials), ("seed", args.seed), ("output", args.out))
                 if v is not None}
    return dataclasses.replace(cfg, **overrides)


def save(cfg, name, tables):
    paths = emit_results(tables, cfg.output, name, metadata={"trials": cfg.trials, "seed": cfg.seed,
                                                            "config": cfg.to_dict()})
    for table, path in paths.items():
        print(f"wrote {table}: {path}")


def show(rows, columns):
    print("  ".join(f"{c:>14}" for c in columns))
    for r in rows:
        cells = []
        for c in columns:
            v = getattr(r, c)
            cells.append(f"{v:>14.4f}" if isinstance(v, float) else f"{v!s:>14}")
        print("  ".join(cells))
