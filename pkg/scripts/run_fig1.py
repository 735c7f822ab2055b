"""Reach distributions: one impression level, an impression sweep, and a k sweep."""

from _common import parse, save, show

from anonreach.harness.experiments import run_fig1

if __name__ == "__main__":
    cfg = parse("fig1.json", __doc__)
    tables = run_fig1(cfg)
    show(tables["summary"], ["panel", "impressions", "k", "mc_mean", "expected_reach", "mc_var", "std_error"])
    save(cfg, "fig1", tables)
