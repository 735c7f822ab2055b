"""End-to-end experiments: reach distributions, privacy/coverage ROAS sweeps, approach comparison.

Every run is a pure function of its config: the master seed fans out to one
generator per trial, and inside a trial the same request stream and
competing prices are shared by all arms so that arm differences come from
the bidding alone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from ..auction import AuctionModel, generate_stream
from ..measurement import (
    ImpressionCounts,
    expected_reach,
    expected_reach_nonuniform_total,
    expected_unique_reach,
    mc_reach_distribution,
    reach_bounds,
    reach_curve,
    unique_reach_variance,
)
from ..optimization import BidderState
from ..population import ConfigError, PopulationModel, coverage
from .campaign import (
    IdentityDiscount,
    NonuniformDiscount,
    UniformDiscount,
    UniqueGroups,
    UniqueImpressions,
    run_campaign,
)
from .config import ExperimentConfig

APPROACHES = ("A", "B", "C", "D")


@dataclass
class RunRecord:
    experiment: str
    sweep_axis: str
    sweep_value: object
    trials: int
    reach_mean: float | None = None
    reach_var: float | None = None
    spend_mean: float | None = None
    roas: float | None = None
    relative_roas: float | None = None
    relative_roas_var: float | None = None
    coverage: float | None = None
    measured_reach_mean: float | None = None
    relative_error_mean: float | None = None
    relative_error_std: float | None = None
    overestimate_rate: float | None = None
    within_2sigma: float | None = None


@dataclass
class DistributionRecord:
    panel: str
    impressions: int
    k: int
    cap: int
    trials: int
    mc_mean: float
    mc_var: float
    std_error: float
    expected_reach: float


def trial_generators(seed: int, trials: int) -> list[np.random.Generator]:
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(trials)]


def _seeds(rng: np.random.Generator, n: int) -> list[int]:
    return [int(s) for s in rng.integers(0, 2**63 - 1, size=n)]


def spread_counts(total: int, num_groups: int) -> tuple[int, ...]:
    """Split ``total`` wins over groups as evenly as possible (first groups get the remainder)."""
    base, extra = divmod(total, num_groups)
    return tuple(base + (1 if j < extra else 0) for j in range(num_groups))


def _bidder(cfg: ExperimentConfig, T: int) -> BidderState:
    c = cfg.campaign
    return BidderState(
        budget=c.budget, total_requests=T, lam=c.lambda_init,
        learning_rate=c.learning_rate, bid_floor=c.bid_floor, bid_cap=c.bid_cap,
    )


def _auction(cfg: ExperimentConfig) -> AuctionModel:
    return AuctionModel(cfg.auction.mu, cfg.auction.sigma2)


def make_discount(name: str, model: PopulationModel, cap: int, props=None):
    """Discounting strategy by name: identity, A/B/C/D."""
    if name == "identity":
        return IdentityDiscount(model, cap)
    if name == "A":
        return UniqueImpressions(model)
    if name == "B":
        return UniqueGroups(model)
    if name == "C":
        return UniformDiscount(model, cap)
    if name == "D":
        if props is None:
            raise ConfigError("approach D needs property vectors")
        return NonuniformDiscount(model, props, cap)
    raise ConfigError(f"unknown approach {name!r}; use identity, A, B, C or D")


def _mean_var(xs) -> tuple[float, float]:
    arr = np.asarray(xs, dtype=float)
    return float(arr.mean()), float(arr.var(ddof=1)) if arr.size > 1 else 0.0


# -- reach distributions ---------------------------------------------------


def _distribution(panel, model, impressions, cap, trials, seed) -> tuple[DistributionRecord, list[dict]]:
    counts = spread_counts(impressions, model.num_groups)
    dist = mc_reach_distribution(model, counts, cap, trials, seed)
    rec = DistributionRecord(
        panel, impressions, model.group_size, cap, trials, dist.mean, dist.variance,
        dist.std_error, expected_reach(model, counts, cap),
    )
    hist = [
        dict(panel=panel, impressions=impressions, k=model.group_size, reach=int(v), frequency=int(f))
        for v, f in zip(dist.values, dist.frequencies)
    ]
    return rec, hist


def run_fig1(cfg: ExperimentConfig) -> dict[str, list]:
    """Reach distribution at one impression level (A), across impression levels (B), across k (C).

    Wins are split evenly over groups so the analytic expectation does not
    depend on the seed; only the within-group attribution is sampled.
    """
    pop = cfg.population
    cap = cfg.campaign.cap
    impressions = cfg.measure.impressions or 250
    summary, hist = [], []
    point = 0

    def seed_for():
        nonlocal point
        point += 1
        return [cfg.seed, point]

    model = pop.build(cfg.seed)
    rec, h = _distribution("A", model, impressions, cap, cfg.trials, seed_for())
    summary.append(rec)
    hist.extend(h)
    for n in cfg.sweep.impressions or []:
        rec, h = _distribution("B", model, n, cap, cfg.trials, seed_for())
        summary.append(rec)
        hist.extend(h)
    for k in cfg.sweep.k or []:
        m_k = replace(pop, group_size=k, num_groups=None).build(cfg.seed)
        rec, h = _distribution("C", m_k, impressions, cap, cfg.trials, seed_for())
        summary.append(rec)
        hist.extend(h)
    return {"summary": summary, "histogram": hist}


# -- privacy vs efficiency ------------------------------------------------


def run_fig2(cfg: ExperimentConfig) -> list[RunRecord]:
    """ROAS for each group size ``k``, normalised by the ``k = 1`` arm."""
    ks = list(cfg.sweep.k or [1, 2, 3, 6, 12, 120])
    if 1 not in ks:
        ks.insert(0, 1)
    cap, T = cfg.campaign.cap, cfg.stream.T
    auction = _auction(cfg)
    reach = {k: [] for k in ks}
    spend = {k: [] for k in ks}
    within = {k: [] for k in ks}
    for rng in trial_generators(cfg.seed, cfg.trials):
        pop_seed, stream_seed, price_seed = _seeds(rng, 3)
        prices = auction.sample_prices(np.random.default_rng(price_seed), T)
        for k in ks:
            model = replace(cfg.population, group_size=k, num_groups=None).build(pop_seed)
            stream = generate_stream(model, T, "uniform", stream_seed)
            res = run_campaign(model, stream, prices, UniformDiscount(model, cap), _bidder(cfg, T), cap, auction)
            reach[k].append(res.reach)
            spend[k].append(res.spend)
            if cap == 1:
                counts = ImpressionCounts.from_wins(stream.groups[res.won], model.num_groups)
                est = expected_unique_reach(model, counts)
                sigma = math.sqrt(unique_reach_variance(model, counts))
                within[k].append(abs(est - res.reach) <= 2 * sigma + 1e-9)
    return _roas_records("fig2", "k", ks, reach, spend, within, baseline=1, trials=cfg.trials)


def _roas_records(name, axis, values, reach, spend, within, baseline, trials, extra=None):
    roas = {v: float(np.mean(reach[v]) / np.mean(spend[v])) for v in values}
    out = []
    for v in values:
        r_mean, r_var = _mean_var(reach[v])
        rec = RunRecord(
            name, axis, v, trials, reach_mean=r_mean, reach_var=r_var,
            spend_mean=float(np.mean(spend[v])), roas=roas[v],
            relative_roas=roas[v] / roas[baseline],
            within_2sigma=float(np.mean(within[v])) if within.get(v) else None,
        )
        if extra:
            for key, val in extra[v].items():
                setattr(rec, key, val)
        out.append(rec)
    return out


# -- targeted-user coverage ---------------------------------------------------


def run_coverage(cfg: ExperimentConfig) -> list[RunRecord]:
    """ROAS as the targeted users move from one group to one per group."""
    pop = cfg.population
    if not isinstance(pop.targeted, dict) or "count" not in pop.targeted:
        raise ConfigError("coverage experiment needs population.targeted = {count, placement}")
    count = pop.targeted["count"]
    levels = list(cfg.sweep.placements or ["concentrated", "spread"])
    cap, T = cfg.campaign.cap, cfg.stream.T
    auction = _auction(cfg)
    reach = {lv: [] for lv in map(str, levels)}
    spend = {lv: [] for lv in map(str, levels)}
    covs = {lv: [] for lv in map(str, levels)}
    for rng in trial_generators(cfg.seed, cfg.trials):
        pop_seed, stream_seed, price_seed = _seeds(rng, 3)
        prices = auction.sample_prices(np.random.default_rng(price_seed), T)
        for lv in levels:
            spec = replace(pop, targeted={"count": count, "placement": lv})
            model = spec.build(pop_seed)
            stream = generate_stream(model, T, "uniform", stream_seed)
            res = run_campaign(model, stream, prices, UniformDiscount(model, cap), _bidder(cfg, T), cap, auction)
            reach[str(lv)].append(res.reach)
            spend[str(lv)].append(res.spend)
            covs[str(lv)].append(coverage(model))
    keys = list(map(str, levels))
    extra = {lv: {"coverage": float(np.mean(covs[lv]))} for lv in keys}
    best = max(keys, key=lambda lv: extra[lv]["coverage"])
    return _roas_records("coverage", "placement", keys, reach, spend, {}, best, cfg.trials, extra)


# -- approach comparison under non-uniform arrivals ------------------------------


def run_abcd(cfg: ExperimentConfig) -> list[RunRecord]:
    """Measurement error and relative ROAS of approaches A-D on skewed within-group arrivals.

    Each trial is one campaign.  Measurement is scored on a common delivery
    log (the wins of the undiscounted campaign, approach A); ROAS of every
    approach is relative to the identity-aware baseline on the same stream.
    """
    approaches = list(cfg.sweep.approaches or APPROACHES)
    cap, T = cfg.campaign.cap, cfg.stream.T
    if cap != 1:
        raise ConfigError("the approach comparison is defined for unique reach (campaign.cap = 1)")
    auction = _auction(cfg)
    err = {a: [] for a in approaches}
    measured = {a: [] for a in approaches}
    over = {a: [] for a in approaches}
    rel = {a: [] for a in approaches}
    reach = {a: [] for a in approaches}
    spend = {a: [] for a in approaches}
    for rng in trial_generators(cfg.seed, cfg.trials):
        pop_seed, stream_seed, price_seed, prop_seed = _seeds(rng, 4)
        model = cfg.population.build(pop_seed)
        props = cfg.population.property_vectors_for(model.num_groups, np.random.default_rng(prop_seed))
        stream = generate_stream(model, T, props, stream_seed)
        prices = auction.sample_prices(np.random.default_rng(price_seed), T)
        runs = {
            a: run_campaign(model, stream, prices, make_discount(a, model, cap, props), _bidder(cfg, T), cap, auction)
            for a in ["identity", *approaches] + ([] if "A" in approaches else ["A"])
        }
        ref = runs["A"]
        counts = ImpressionCounts.from_wins(stream.groups[ref.won], model.num_groups)
        truth = ref.reach
        estimates = {
            "A": float(ref.wins),
            "B": float(sum(1 for n in counts.wins_per_group if n)),
            "C": expected_unique_reach(model, counts),
            "D": expected_reach_nonuniform_total(model, counts, props, 1),
        }
        base_roas = runs["identity"].roas
        for a in approaches:
            measured[a].append(estimates[a])
            if truth > 0:
                err[a].append(abs(estimates[a] - truth) / truth)
            over[a].append(estimates[a] >= truth)
            rel[a].append(runs[a].roas / base_roas)
            reach[a].append(runs[a].reach)
            spend[a].append(runs[a].spend)
    out = []
    for a in approaches:
        r_mean, r_var = _mean_var(reach[a])
        rel_mean, rel_var = _mean_var(rel[a])
        e_mean, e_var = _mean_var(err[a]) if err[a] else (float("nan"), float("nan"))
        out.append(RunRecord(
            "abcd", "approach", a, cfg.trials, reach_mean=r_mean, reach_var=r_var,
            spend_mean=float(np.mean(spend[a])),
            roas=float(np.mean(reach[a]) / np.mean(spend[a])),
            relative_roas=rel_mean, relative_roas_var=rel_var,
            measured_reach_mean=float(np.mean(measured[a])),
            relative_error_mean=e_mean, relative_error_std=math.sqrt(e_var),
            overestimate_rate=float(np.mean(over[a])),
        ))
    return out


# -- single runs -------------------------------------------------------------


def run_measure(cfg: ExperimentConfig) -> list[dict]:
    """Reach curve rows: batch at the configured counts, or streaming over a sampled win sequence."""
    cap = cfg.campaign.cap
    model = cfg.population.build(cfg.seed)
    if cfg.measure.counts is not None:
        counts = ImpressionCounts(tuple(cfg.measure.counts))
        if len(counts.wins_per_group) != model.num_groups:
            raise ConfigError(f"measure.counts needs {model.num_groups} entries")
        rows = []
        sigma = math.sqrt(unique_reach_variance(model, counts))
        for m in range(1, cap + 1):
            lo, hi = reach_bounds(model, counts, m) if model.is_partition else (float("nan"),) * 2
            rows.append(dict(
                t=counts.total, cap=m, expected_reach=expected_reach(model, counts, m),
                sigma=sigma if m == 1 else float("nan"), lower_bound=lo, upper_bound=hi,
            ))
        return rows
    stream = generate_stream(model, cfg.stream.T, "uniform", cfg.seed)
    rng = np.random.default_rng([cfg.seed, 1])
    won = rng.random(len(stream)) < cfg.measure.win_rate
    times = np.flatnonzero(won) + 1
    return reach_curve(model, stream.groups[won], cap, times=times, every=cfg.measure.report_every)


def run_simulate(cfg: ExperimentConfig) -> tuple[list[dict], RunRecord]:
    """One campaign with a per-request trace."""
    cap, T = cfg.campaign.cap, cfg.stream.T
    approach = (cfg.sweep.approaches or ["C"])[0]
    model = cfg.population.build(cfg.seed)
    rng = np.random.default_rng([cfg.seed, 2])
    props = None
    arrival = "uniform"
    if cfg.stream.arrival == "property" or approach == "D":
        props = cfg.population.property_vectors_for(model.num_groups, rng)
        if cfg.stream.arrival == "property":
            arrival = props
    stream = generate_stream(model, T, arrival, cfg.seed)
    auction = _auction(cfg)
    prices = auction.sample_prices(np.random.default_rng([cfg.seed, 3]), T)
    res = run_campaign(
        model, stream, prices, make_discount(approach, model, cap, props), _bidder(cfg, T), cap,
        auction, trace=True,
    )
    rec = RunRecord(
        "simulate", "approach", approach, 1, reach_mean=float(res.reach),
        spend_mean=res.spend, roas=res.roas,
    )
    return res.trace, rec
