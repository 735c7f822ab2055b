"""Acceptance criteria, one test each.

Every test records a PASS/FAIL line through the ``criterion`` fixture; the
lines are printed together at the end of the pytest run.
"""

import time
from pathlib import Path

import numpy as np
from scipy import stats

from anonreach.harness.config import load_config
from anonreach.harness.experiments import run_abcd, run_coverage, run_fig1, run_fig2, spread_counts
from anonreach.measurement import (
    ReachEstimator,
    expected_reach,
    expected_reach_alt,
    expected_unique_reach,
    expected_unique_reach_nonuniform,
    mc_reach_distribution,
    unique_reach_variance,
)
from anonreach.population import PropertyVector, build_overlapping, build_partition
from exhaustive import all_errors, max_error

CONFIGS = Path(__file__).parents[1] / "configs"


def test_streaming_matches_batch(criterion):
    rng = np.random.default_rng(2024)
    start = time.perf_counter()
    worst = 0.0
    for s in range(100):
        k = int(rng.integers(1, 7))
        cap = int(rng.integers(1, 5))
        groups = int(rng.integers(1, 11))
        if s % 2:
            model = build_overlapping(k + int(rng.integers(0, 3 * k + 1)), k, groups, rng_seed=s)
        else:
            model = build_partition(k * groups, k, float(rng.choice([0.3, 1.0])), rng_seed=s)
        wins = rng.integers(0, model.num_groups, size=int(rng.integers(1, 501)))
        checkpoints = set(rng.choice(wins.size, size=min(5, wins.size), replace=False)) | {wins.size - 1}
        est = ReachEstimator(model, cap)
        counts = np.zeros(model.num_groups, dtype=np.int64)
        for t, j in enumerate(wins):
            r = est.add_win(int(j))
            counts[j] += 1
            if t in checkpoints:
                batch = np.array([expected_reach(model, counts, m) for m in range(1, cap + 1)])
                worst = max(worst, float(np.abs(r - batch).max()))
    elapsed = time.perf_counter() - start
    ok = criterion(
        "1 streaming == batch", worst <= 1e-9 and elapsed < 10,
        f"max|diff|={worst:.2e} (<=1e-9), {elapsed:.2f}s (<10s)",
    )
    assert ok


def test_exhaustive_oracle(criterion):
    start = time.perf_counter()
    err = max_error(all_errors())
    elapsed = time.perf_counter() - start
    ok = criterion(
        "2 exhaustive oracle", err <= 1e-12 and elapsed < 5,
        f"max error={err:.2e} (<=1e-12), {elapsed:.2f}s (<5s)",
    )
    assert ok


def test_fig1a_reproduction(criterion):
    start = time.perf_counter()
    counts = spread_counts(250, 20)
    model = build_partition(120, 6, 1.0, rng_seed=0)
    analytic = expected_reach(model, counts, 3)
    # the value depends only on the counts, never on the seed or the formula used
    others = [expected_reach(build_partition(120, 6, 1.0, rng_seed=s), counts, 3) for s in range(1, 6)]
    others.append(expected_reach_alt(model, counts, 3))
    spread = max(abs(v - analytic) for v in others)
    dist = mc_reach_distribution(model, counts, 3, 10_000, rng_seed=7)
    gap = abs(dist.mean - analytic)
    elapsed = time.perf_counter() - start
    ok = criterion(
        "3 fig1A MC vs expectation",
        gap <= 3 * dist.std_error and spread <= 1e-12 and elapsed < 30,
        f"|mean-E|={gap:.4f} vs 3SE={3 * dist.std_error:.4f}, E={analytic:.6f} spread={spread:.1e}, {elapsed:.1f}s",
    )
    assert ok


def test_fig1c_shape(criterion):
    cfg = load_config(CONFIGS / "fig1.json")
    rows = {r.k: r.mc_var for r in run_fig1(cfg)["summary"] if r.panel == "C"}
    ratio = rows[6] / rows[2]
    ok = criterion(
        "4 fig1C variance shape",
        rows[1] == 0.0 and rows[2] > rows[1] and ratio < 3.0,
        f"var(k=1)={rows[1]}, var(2)={rows[2]:.3f}, var(6)={rows[6]:.3f}, var6/var2={ratio:.3f} (<3)",
    )
    assert ok


def test_chebyshev_empirical(criterion):
    model = build_partition(120, 6, 1.0, rng_seed=0)
    counts = spread_counts(250, 20)
    mean = expected_unique_reach(model, counts)
    sigma = np.sqrt(unique_reach_variance(model, counts))
    dist = mc_reach_distribution(model, counts, 1, 100_000, rng_seed=5)
    frac = float(np.mean(np.abs(dist.samples - mean) >= 2 * sigma))
    ok = criterion("5 chebyshev at 2 sigma", frac <= 0.25, f"fraction={frac:.4f} (<=0.25), sigma={sigma:.3f}")
    assert ok


def test_fig2_reproduction(criterion):
    start = time.perf_counter()
    cfg = load_config(CONFIGS / "fig2.json")
    recs = {r.sweep_value: r.relative_roas for r in run_fig2(cfg)}
    ks = [1, 2, 3, 6, 12, 120]
    rho = stats.spearmanr(ks, [recs[k] for k in ks]).statistic
    drop2 = 1.0 - recs[2]
    elapsed = time.perf_counter() - start
    ok = criterion(
        "6 fig2 relative ROAS vs k",
        rho <= -0.9 and abs(drop2 - 0.33) <= 0.12 and abs(recs[120] - 0.62) <= 0.10
        and cfg.trials >= 200 and elapsed < 300,
        f"rho={rho:.3f} (<=-0.9), k=2 drop={drop2:.3f} (0.33+-0.12), k=120={recs[120]:.3f} (0.62+-0.10), "
        f"{cfg.trials} trials, {elapsed:.1f}s",
    )
    assert ok


def test_coverage_trend(criterion):
    cfg = load_config(CONFIGS / "coverage.json")
    recs = run_coverage(cfg)
    rho = stats.spearmanr([r.coverage for r in recs], [r.roas for r in recs]).statistic
    ok = criterion(
        "7 ROAS vs coverage",
        rho >= 0.9 and len(recs) >= 5 and cfg.trials >= 200,
        f"rho={rho:.3f} (>=0.9), {len(recs)} levels, {cfg.trials} trials/level",
    )
    assert ok


def test_approach_ordering(criterion):
    cfg = load_config(CONFIGS / "abcd.json")
    by = {r.sweep_value: r for r in run_abcd(cfg)}
    err = {a: by[a].relative_error_mean for a in "ABCD"}
    roas = {a: by[a].relative_roas for a in "ABCD"}
    err_ok = all(err["D"] < err[a] for a in "ABC")
    over_ok = by["C"].overestimate_rate >= 0.9
    roas_ok = all(roas["D"] > roas[a] for a in "ABC")
    ok = criterion(
        "8 approach A-D ordering",
        err_ok and over_ok and roas_ok,
        "err " + " ".join(f"{a}={v:.3f}" for a, v in err.items())
        + f"; C over={by['C'].overestimate_rate:.2f} (>=0.9); rel ROAS "
        + " ".join(f"{a}={v:.3f}" for a, v in roas.items()),
    )
    assert ok


def test_uniform_maximality(criterion):
    rng = np.random.default_rng(99)
    best = expected_unique_reach_nonuniform(PropertyVector.uniform(5), 10)
    points = rng.dirichlet(np.ones(5), size=1000)
    values = [expected_unique_reach_nonuniform(PropertyVector(tuple(p / p.sum())), 10) for p in points]
    ok = criterion(
        "9 uniform maximises unique reach",
        all(best >= v for v in values),
        f"uniform={best:.6f}, max sampled={max(values):.6f} over 1000 points",
    )
    assert ok


def _throughput_seconds(cap, model, wins, repeats=3):
    times = []
    for _ in range(repeats):
        est = ReachEstimator(model, cap)
        start = time.perf_counter()
        for j in wins:
            est.add_win(j)
        times.append(time.perf_counter() - start)
    return min(times)


def test_complexity_in_cap(criterion):
    model = build_overlapping(60, 6, 40, rng_seed=1)
    wins = np.random.default_rng(3).integers(0, 40, size=4000).tolist()
    t = {c: _throughput_seconds(c, model, wins) for c in (1, 2, 4, 8)}
    ratios = {c: t[c] / t[1] for c in t}
    ok = criterion(
        "10 per-win cost vs cap",
        all(ratios[c] <= c * c for c in t),
        " ".join(f"t({c})/t(1)={r:.2f}(<={c * c})" for c, r in ratios.items()),
    )
    assert ok
