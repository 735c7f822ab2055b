"""ROAS as a fixed set of targeted users is spread over more groups."""

from _common import parse, save, show

from anonreach.harness.experiments import run_coverage

if __name__ == "__main__":
    cfg = parse("coverage.json", __doc__)
    records = run_coverage(cfg)
    show(records, ["sweep_value", "coverage", "reach_mean", "spend_mean", "roas", "relative_roas"])
    save(cfg, "coverage", {"records": records})
