"""Relative ROAS of a paced campaign as the anonymity group size k grows."""

from _common import parse, save, show

from anonreach.harness.experiments import run_fig2

if __name__ == "__main__":
    cfg = parse("fig2.json", __doc__)
    records = run_fig2(cfg)
    show(records, ["sweep_value", "reach_mean", "spend_mean", "roas", "relative_roas", "within_2sigma"])
    save(cfg, "fig2", {"records": records})
