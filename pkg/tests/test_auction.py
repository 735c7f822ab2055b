import math

import numpy as np
import pytest
from scipy import stats

from anonreach.auction import (
    AuctionModel,
    eligible_users,
    generate_stream,
    run_auction,
    true_reach,
)
from anonreach.measurement import ReachEstimator, expected_reach, reach_bounds
from anonreach.population import (
    ConfigError,
    PopulationModel,
    PropertyVector,
    build_overlapping,
    build_partition,
)

AUCTION = AuctionModel()


def test_zero_bid_never_wins():
    rng = np.random.default_rng(0)
    assert all(run_auction(AUCTION, 0.0, rng) == (False, 0.0) for _ in range(200))


def test_huge_bid_pays_mean_price():
    rng = np.random.default_rng(1)
    bid = math.exp(10 * AUCTION.sigma)
    paid = [run_auction(AUCTION, bid, rng) for _ in range(20_000)]
    assert all(w for w, _ in paid)
    amounts = np.array([p for _, p in paid])
    assert AUCTION.mean_price == pytest.approx(math.exp(0.25))
    se = amounts.std() / math.sqrt(amounts.size)
    assert abs(amounts.mean() - AUCTION.mean_price) <= 3 * se


@pytest.mark.parametrize("bid", [0.5, 1.0, 1.8])
def test_win_rate_matches_cdf(bid):
    prices = AUCTION.sample_prices(np.random.default_rng(2), 1_000_000)
    rate = float((bid > prices).mean())
    expected = stats.norm.cdf(math.log(bid) / math.sqrt(0.5))
    assert AUCTION.win_probability(bid) == pytest.approx(expected)
    assert abs(rate - expected) <= 3 * math.sqrt(expected * (1 - expected) / prices.size)


def test_expected_cost_matches_mc():
    prices = AUCTION.sample_prices(np.random.default_rng(3), 400_000)
    paid = np.where(prices < 1.3, prices, 0.0)
    se = paid.std() / math.sqrt(paid.size)
    assert abs(paid.mean() - AUCTION.expected_cost(1.3)) <= 3 * se


def test_uniform_stream_user_counts():
    model = build_partition(120, 6, 1.0, rng_seed=0)
    stream = generate_stream(model, 2000, rng_seed=4)
    assert len(stream) == 2000
    counts = np.bincount(stream.users, minlength=120)
    # pooled chi-square against Binomial(2000, 1/120) per user
    chi2 = ((counts - 2000 / 120) ** 2 / (2000 / 120)).sum()
    assert stats.chi2.sf(chi2, 119) > 1e-3
    for g, u in zip(stream.groups, stream.users):
        assert u in model.groups[g]


def test_stream_only_hits_targeted_groups():
    model = build_partition(144, 12, 12 / 144, rng_seed=0, placement=3)
    stream = generate_stream(model, 500, rng_seed=0)
    assert all(model.targeted_in_group[g] for g in stream.groups)
    assert set(stream.users) <= set(eligible_users(model))


def test_overlapping_stream_consistent():
    model = build_overlapping(10, 3, 6, rng_seed=1)
    stream = generate_stream(model, 300, rng_seed=2)
    for g, u in zip(stream.groups, stream.users):
        assert u in model.groups[g]


def test_point_property_vector_single_visitor():
    model = build_partition(6, 3, 1.0, rng_seed=0)
    props = [PropertyVector((0.0, 0.0, 1.0)), PropertyVector.uniform(3)]
    stream = generate_stream(model, 400, arrival=props, rng_seed=5)
    assert len(set(stream.users[stream.groups == 0])) == 1
    assert len(set(stream.users[stream.groups == 1])) == 3


def test_stream_seeded():
    model = build_partition(20, 4, 1.0, rng_seed=0)
    a, b = generate_stream(model, 100, rng_seed=9), generate_stream(model, 100, rng_seed=9)
    assert np.array_equal(a.groups, b.groups) and np.array_equal(a.users, b.users)


def test_stream_errors():
    model = PopulationModel(4, 2, [[0, 1], [2, 3]], set())
    with pytest.raises(ConfigError):
        generate_stream(model, 10)
    with pytest.raises(ConfigError):
        generate_stream(build_partition(4, 2, rng_seed=0), -1)


def test_true_reach_examples():
    assert true_reach([1, 2, 3], [False, False, False], 1) == 0
    assert true_reach([0, 0, 1, 0], [True, True, True, True], 2) == 3
    assert true_reach([0, 0, 1], [True, True, True], 1, targeted={1}) == 1


def test_true_reach_k1_equals_estimator():
    model = PopulationModel(4, 1, [[0], [1], [2], [3]], {0, 1, 2, 3})
    stream = generate_stream(model, 50, rng_seed=1)
    est = ReachEstimator(model, 3)
    for j in stream.groups:
        est.add_win(int(j))
    assert true_reach(stream.users, np.ones(50, bool), 3) == est.reach[2]


def test_true_reach_within_bounds():
    model = build_partition(40, 4, 0.6, rng_seed=3)
    rng = np.random.default_rng(7)
    for trial in range(30):
        stream = generate_stream(model, 80, rng_seed=trial)
        won = rng.random(80) < 0.5
        counts = np.bincount(stream.groups[won], minlength=model.num_groups)
        for cap in (1, 2, 3):
            lo, hi = reach_bounds(model, counts, cap)
            assert lo <= true_reach(stream.users, won, cap, model.targeted) <= hi


def test_true_reach_mean_matches_theorem():
    # fix group counts, resample the hidden senders
    model = build_partition(30, 5, 1.0, rng_seed=1)
    counts = [4, 7, 0, 2, 9, 3]
    rng = np.random.default_rng(11)
    cap = 2
    vals = []
    for _ in range(10_000):
        users = np.concatenate([rng.choice(model.groups[j], size=n) for j, n in enumerate(counts)])
        vals.append(true_reach(users, np.ones(users.size, bool), cap))
    vals = np.asarray(vals, float)
    se = vals.std() / math.sqrt(vals.size)
    assert abs(vals.mean() - expected_reach(model, counts, cap)) <= 3 * se
