"""Measurement error and ROAS of the four discounting approaches under skewed visits."""

from _common import parse, save, show

from anonreach.harness.experiments import run_abcd

if __name__ == "__main__":
    cfg = parse("abcd.json", __doc__)
    records = run_abcd(cfg)
    show(records, ["sweep_value", "measured_reach_mean", "relative_error_mean", "overestimate_rate",
                   "relative_roas", "spend_mean"])
    save(cfg, "abcd", {"records": records})
