"""Probabilistic discounting: reach probability, optimal bid and budget pacing.

A request from group ``j`` is worth ``p_t``, the chance that its (unknown)
sender has seen the ad fewer than ``c`` times.  Bids are ``p_t / lambda``
mapped through the auction's inverse marginal-cost ratio and clamped; the
dual variable ``lambda`` is paced online against the per-request budget.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .binomial import BinomialTable, pmf_matrix
from .population import PopulationModel, PropertyVector, UnsupportedTopologyError

LAMBDA_FLOOR = 1e-6


class ReachProbabilityState:
    """Streaming ``p_t`` for uniform arrivals inside each group.

    ``p_t = (1/k) * sum_{i in U_j} F(c-1; n_i, 1/k)`` where ``n_i`` counts
    earlier wins in groups containing user ``i``.  Only wins update state.
    """

    def __init__(self, model: PopulationModel, cap: int):
        if cap < 1:
            raise ValueError("frequency cap must be >= 1")
        self.model = model
        self.cap = int(cap)
        self.k = model.group_size
        self.table = BinomialTable(1.0 / self.k, self.cap - 1)
        self.exposure = np.zeros(model.num_users, dtype=np.int64)
        self.group_wins = np.zeros(model.num_groups, dtype=np.int64)
        self._members = [np.asarray(u, dtype=np.int64) for u in model.targeted_in_group]
        self._share = [len(u) / self.k for u in model.targeted_in_group]
        self._partition = model.is_partition
        # _cdf[n] = F(c-1; n, 1/k); exactly 1 while n <= c-1
        self._cdf: list[float] = []

    def _cdf_at(self, n: int) -> float:
        while len(self._cdf) <= n:
            m = len(self._cdf)
            if m <= self.cap - 1:
                self._cdf.append(1.0)
            else:
                self._cdf.append(min(float(self.table.row(m).sum()), 1.0))
        return self._cdf[n]

    def probability(self, group: int) -> float:
        if not 0 <= group < self.model.num_groups:
            raise ValueError(f"unknown group {group}")
        if self._partition:
            return self._share[group] * self._cdf_at(int(self.group_wins[group]))
        members = self._members[group]
        if members.size == 0:
            return 0.0
        return sum(self._cdf_at(int(n)) for n in self.exposure[members]) / self.k

    def record_win(self, group: int) -> None:
        if not 0 <= group < self.model.num_groups:
            raise ValueError(f"unknown group {group}")
        self.group_wins[group] += 1
        self.exposure[self._members[group]] += 1


def reach_probability(state: ReachProbabilityState, group: int) -> float:
    """Probability the next request from ``group`` comes from a user still under the cap."""
    return state.probability(group)


def reach_probability_batch(model: PopulationModel, prior_counts, group: int, cap: int) -> float:
    """Closed-form ``p_t`` from the group win counts observed before the request."""
    k = model.group_size
    members = model.targeted_in_group[group]
    if not members:
        return 0.0
    counts = np.asarray(prior_counts, dtype=np.int64)
    total = 0.0
    for i in members:
        n_i = int(counts[list(model.groups_of_user[i])].sum())
        if n_i <= cap - 1:
            total += 1.0
        else:
            total += min(float(pmf_matrix([n_i], cap - 1, 1.0 / k)[0].sum()), 1.0)
    return total / k


def reach_probability_nonuniform(prop: PropertyVector, n_tj: int, cap: int) -> float:
    """``sum_i q_i F(c-1; n_tj, q_i)`` for a group with visit probabilities ``prop``."""
    if cap < 1:
        raise ValueError("frequency cap must be >= 1")
    if n_tj < 0:
        raise ValueError("impression count must be non-negative")
    q = prop.as_array()
    if cap == 1:
        return float((q * (1.0 - q) ** n_tj).sum())
    if n_tj <= cap - 1:
        return 1.0
    cdf = np.array([min(pmf_matrix([n_tj], cap - 1, qi)[0].sum(), 1.0) for qi in q])
    return float((q * cdf).sum())


class NonuniformReachProbabilityState:
    """Streaming ``p_t`` when each disjoint group carries a property vector."""

    def __init__(self, model: PopulationModel, props: Sequence[PropertyVector], cap: int):
        if not model.is_partition:
            raise UnsupportedTopologyError("non-uniform reach probability needs disjoint groups")
        if len(props) != model.num_groups:
            raise ValueError("need one property vector per group")
        self.model = model
        self.props = list(props)
        self.cap = int(cap)
        self.group_wins = np.zeros(model.num_groups, dtype=np.int64)
        self._cache: dict[tuple[int, int], float] = {}

    def probability(self, group: int) -> float:
        n = int(self.group_wins[group])
        key = (group, n)
        if key not in self._cache:
            self._cache[key] = reach_probability_nonuniform(self.props[group], n, self.cap)
        return self._cache[key]

    def record_win(self, group: int) -> None:
        self.group_wins[group] += 1


def optimal_bid(
    p_t: float,
    lam: float,
    auction,
    bid_floor: float = 0.1,
    bid_cap: float = 10.0,
) -> float:
    """Bid ``(h/w)^{-1}(p_t / lam)`` clamped to ``[bid_floor, bid_cap]``.

    ``auction`` supplies ``inverse_marginal_ratio``; for a second-price auction
    the expected-cost/win-rate derivative ratio is the bid itself.
    """
    if lam <= 0:
        raise ValueError("lambda must be positive")
    raw = auction.inverse_marginal_ratio(p_t / lam)
    return float(min(max(raw, bid_floor), bid_cap))


@dataclass
class BidderState:
    budget: float
    total_requests: int
    lam: float = 10.0
    learning_rate: float = 0.1
    bid_floor: float = 0.1
    bid_cap: float = 10.0
    spent: float = 0.0
    lambda_floor: float = LAMBDA_FLOOR

    def __post_init__(self):
        if self.budget <= 0 or self.total_requests <= 0:
            raise ValueError("budget and total_requests must be positive")
        if not 0 < self.bid_floor <= self.bid_cap:
            raise ValueError("need 0 < bid_floor <= bid_cap")
        if self.lam <= 0:
            raise ValueError("initial lambda must be positive")

    @property
    def per_request_budget(self) -> float:
        return self.budget / self.total_requests

    @property
    def remaining(self) -> float:
        return self.budget - self.spent

    def bid(self, p_t: float, auction) -> float:
        return optimal_bid(p_t, self.lam, auction, self.bid_floor, self.bid_cap)

    def can_pay(self, price: float) -> bool:
        """The agent drops out of any auction whose payment would exceed the remaining budget."""
        return price <= self.remaining

    def observe(self, spend: float) -> float:
        self.spent += spend
        return dual_update(self, spend)


def dual_update(state: BidderState, spend_t: float) -> float:
    """``lam <- lam - eps (1 - spend_t / (B/T))``, floored at ``state.lambda_floor``."""
    ratio = spend_t / state.per_request_budget
    state.lam = max(state.lam - state.learning_rate * (1.0 - ratio), state.lambda_floor)
    return state.lam
