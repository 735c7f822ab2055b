import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from anonreach.auction import AuctionModel, generate_stream
from anonreach.harness.campaign import UniqueImpressions, run_campaign
from anonreach.optimization import (
    LAMBDA_FLOOR,
    BidderState,
    NonuniformReachProbabilityState,
    ReachProbabilityState,
    dual_update,
    optimal_bid,
    reach_probability,
    reach_probability_batch,
    reach_probability_nonuniform,
)
from anonreach.population import (
    PopulationModel,
    PropertyVector,
    UnsupportedTopologyError,
    build_overlapping,
    build_partition,
)

PAIR = PopulationModel(2, 2, [[0, 1]], {0, 1})
AUCTION = AuctionModel()


def test_reach_probability_examples():
    state = ReachProbabilityState(PAIR, 1)
    assert reach_probability(state, 0) == 1.0
    state.record_win(0)
    assert reach_probability(state, 0) == 0.5
    state.record_win(0)
    assert reach_probability(state, 0) == pytest.approx(0.5 * 2 * 0.25)


def test_unknown_group():
    with pytest.raises(ValueError):
        reach_probability(ReachProbabilityState(PAIR, 1), 1)


@pytest.mark.parametrize("k", [2, 3, 6, 12])
def test_exponential_decay(k):
    model = PopulationModel(k, k, [list(range(k))], set(range(k)))
    state = ReachProbabilityState(model, 1)
    logs = []
    for n in range(40):
        p = state.probability(0)
        assert p == pytest.approx((1 - 1 / k) ** n, rel=1e-12)
        logs.append(math.log(p))
        state.record_win(0)
    steps = np.diff(logs)
    assert np.allclose(steps, math.log(1 - 1 / k), rtol=1e-9)


def test_large_cap_gives_one():
    model = build_overlapping(8, 3, 5, rng_seed=0)
    rng = np.random.default_rng(0)
    wins = rng.integers(0, 5, size=30)
    state = ReachProbabilityState(model, len(wins) + 1)
    for j in wins:
        full = len(model.targeted_in_group[j]) / 3
        assert state.probability(int(j)) == pytest.approx(full)
        state.record_win(int(j))


@settings(max_examples=50, deadline=None)
@given(
    k=st.integers(1, 5), m=st.integers(1, 6), cap=st.integers(1, 4),
    overlap=st.booleans(), seed=st.integers(0, 10_000), length=st.integers(0, 60),
)
def test_streaming_matches_batch(k, m, cap, overlap, seed, length):
    if overlap:
        model = build_overlapping(k + 3, k, m, rng_seed=seed)
    else:
        model = build_partition(k * m, k, 0.7, rng_seed=seed)
    rng = np.random.default_rng(seed)
    state = ReachProbabilityState(model, cap)
    counts = np.zeros(m, dtype=int)
    last = {}
    for j in rng.integers(0, m, size=length):
        j = int(j)
        p = state.probability(j)
        assert 0.0 <= p <= 1.0
        assert abs(p - reach_probability_batch(model, counts, j, cap)) <= 1e-9
        # wins only add exposure, so p never rises
        assert p <= last.get(j, 1.0) + 1e-12
        last[j] = p
        if rng.random() < 0.6:
            state.record_win(j)
            counts[j] += 1


def test_nonuniform_examples():
    assert reach_probability_nonuniform(PropertyVector((0.0, 0.0, 1.0)), 3, 1) == 0.0
    assert reach_probability_nonuniform(PropertyVector((0.2, 0.8)), 1, 1) == pytest.approx(0.32)
    for n in range(8):
        uni = reach_probability_nonuniform(PropertyVector.uniform(4), n, 2)
        model = PopulationModel(4, 4, [[0, 1, 2, 3]], {0, 1, 2, 3})
        assert uni == pytest.approx(reach_probability_batch(model, [n], 0, 2), rel=1e-12)


def test_nonuniform_state_requires_partition():
    with pytest.raises(UnsupportedTopologyError):
        NonuniformReachProbabilityState(build_overlapping(5, 2, 3, rng_seed=0), [PropertyVector.uniform(2)] * 3, 1)
    model = build_partition(4, 2, rng_seed=0)
    props = [PropertyVector((0.2, 0.8)), PropertyVector.uniform(2)]
    state = NonuniformReachProbabilityState(model, props, 1)
    state.record_win(0)
    assert state.probability(0) == pytest.approx(0.32)
    assert state.probability(1) == 1.0


def test_optimal_bid_examples():
    assert optimal_bid(1.0, 2.0, AUCTION) == 0.5
    assert optimal_bid(0.0, 2.0, AUCTION) == 0.1
    assert optimal_bid(1.0, 0.05, AUCTION) == 10.0
    with pytest.raises(ValueError):
        optimal_bid(1.0, 0.0, AUCTION)


@pytest.mark.parametrize("b", [0.2, 0.7, 1.0, 2.5, 6.0])
def test_second_price_marginal_ratio(b):
    # numeric dH/dW from the log-normal cost and win-rate curves
    d = 1e-5 * b
    dh = AUCTION.expected_cost(b + d) - AUCTION.expected_cost(b - d)
    dw = AUCTION.win_probability(b + d) - AUCTION.win_probability(b - d)
    assert dh / dw == pytest.approx(b, rel=1e-6)
    assert AUCTION.inverse_marginal_ratio(AUCTION.marginal_ratio(b)) == b


@given(p=st.floats(0, 1), lam=st.floats(1e-6, 100))
def test_bid_within_bounds(p, lam):
    assert 0.1 <= optimal_bid(p, lam, AUCTION) <= 10.0


def test_dual_update_examples():
    s = BidderState(budget=200.0, total_requests=2000)
    assert dual_update(s, 0.0) == pytest.approx(9.9)
    s = BidderState(budget=200.0, total_requests=2000, lam=3.0)
    assert dual_update(s, 0.1) == pytest.approx(3.0)
    s = BidderState(budget=200.0, total_requests=2000, lam=1.0)
    assert dual_update(s, 0.2) == pytest.approx(1.1)


def test_lambda_floor():
    s = BidderState(budget=1.0, total_requests=10, lam=0.05, learning_rate=1.0)
    assert dual_update(s, 0.0) == LAMBDA_FLOOR


def test_bidder_validation():
    with pytest.raises(ValueError):
        BidderState(budget=0, total_requests=10)
    with pytest.raises(ValueError):
        BidderState(budget=1, total_requests=10, bid_floor=2, bid_cap=1)


def test_budget_pacing_and_feasibility():
    model = build_partition(120, 6, 1.0, rng_seed=0)
    T, B = 2000, 400.0
    stream = generate_stream(model, T, rng_seed=1)
    prices = AUCTION.sample_prices(np.random.default_rng(2), T)
    bidder = BidderState(B, T)
    res = run_campaign(model, stream, prices, UniqueImpressions(model), bidder, 1, trace=True)
    spends = np.array([row["price_paid"] for row in res.trace])
    assert res.spend <= B
    assert res.spend == pytest.approx(spends.sum())
    assert all((row["price_paid"] > 0) == bool(row["won"]) for row in res.trace)
    r_t = spends / (B / T)
    assert abs(r_t[T // 2 :].mean() - 1.0) <= 0.2
