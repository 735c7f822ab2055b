"""Second-price auctions against log-normal competing prices, and request streams.

Only the group index of a request is visible to the bidder.  The sending
user is kept on the stream so that true reach can be scored afterwards.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.stats import norm

from .population import ConfigError, PopulationModel, PropertyVector


@dataclass(frozen=True)
class AuctionModel:
    """Highest competing bid ``d = exp(mu + sigma * Z)``; win iff bid > d, pay d."""

    mu: float = 0.0
    sigma2: float = 0.5

    def __post_init__(self):
        if self.sigma2 <= 0:
            raise ValueError("sigma2 must be positive")

    @property
    def sigma(self) -> float:
        return math.sqrt(self.sigma2)

    @property
    def mean_price(self) -> float:
        return math.exp(self.mu + self.sigma2 / 2)

    def win_probability(self, bid: float) -> float:
        if bid <= 0:
            return 0.0
        return float(norm.cdf((math.log(bid) - self.mu) / self.sigma))

    def expected_cost(self, bid: float) -> float:
        """``E[d; d < bid]``, the expected payment of a bid (partial log-normal mean)."""
        if bid <= 0:
            return 0.0
        z = (math.log(bid) - self.mu - self.sigma2) / self.sigma
        return self.mean_price * float(norm.cdf(z))

    def marginal_ratio(self, bid: float) -> float:
        # second price: dH/db = b * dW/db
        return bid

    def inverse_marginal_ratio(self, value: float) -> float:
        return value

    def sample_prices(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return np.exp(self.mu + self.sigma * rng.standard_normal(size))


def run_auction(model: AuctionModel, bid: float, rng: np.random.Generator) -> tuple[bool, float]:
    """One auction: draw the competing price, return ``(won, paid)``; ties lose."""
    if bid < 0:
        raise ValueError("bid must be non-negative")
    price = float(model.sample_prices(rng, 1)[0])
    won = bid > price
    return won, (price if won else 0.0)


@dataclass(frozen=True)
class RequestStream:
    groups: np.ndarray
    users: np.ndarray  # hidden sender of each request
    rng_seed: int | None = None

    def __len__(self) -> int:
        return int(self.groups.size)


def eligible_users(model: PopulationModel) -> np.ndarray:
    """Members of every group that holds at least one targeted user."""
    users = {u for g, t in zip(model.groups, model.targeted_in_group) if t for u in g}
    return np.array(sorted(users), dtype=np.int64)


def stream_from_users(model: PopulationModel, users: Sequence[int], rng: np.random.Generator) -> np.ndarray:
    """Group index exposed for each visiting user (uniform among its groups)."""
    users = np.asarray(users, dtype=np.int64)
    if model.is_partition:
        lookup = np.full(model.num_users, -1, dtype=np.int64)
        for j, g in enumerate(model.groups):
            lookup[list(g)] = j
        groups = lookup[users]
    else:
        groups = np.empty(users.size, dtype=np.int64)
        picks = rng.random(users.size)
        for t, u in enumerate(users):
            g_u = model.groups_of_user[u]
            groups[t] = g_u[int(picks[t] * len(g_u))]
    if np.any(groups < 0):
        raise ConfigError("a visiting user belongs to no group")
    return groups


def generate_stream(
    model: PopulationModel,
    T: int,
    arrival: str | Sequence[PropertyVector] = "uniform",
    rng_seed: int | None = 0,
) -> RequestStream:
    """Sample ``T`` requests.

    ``"uniform"`` picks a visitor uniformly among the members of groups with
    targeted users and exposes one of its groups.  A list of property vectors
    (one per disjoint group) instead picks a group uniformly among those with
    targeted users and the visitor from that group's vector; vector entries
    are matched to members by a seeded shuffle.
    """
    if T < 0:
        raise ConfigError("T must be non-negative")
    if not model.targeted:
        raise ConfigError("cannot generate requests: no targeted users")
    rng = np.random.default_rng(rng_seed)
    if isinstance(arrival, str):
        if arrival != "uniform":
            raise ConfigError(f"unknown arrival mode {arrival!r}")
        pool = eligible_users(model)
        users = pool[rng.integers(0, pool.size, size=T)]
        groups = stream_from_users(model, users, rng)
        return RequestStream(groups, users, rng_seed)
    props = list(arrival)
    model.require_partition()
    if len(props) != model.num_groups:
        raise ConfigError("need one property vector per group")
    active = np.array([j for j, t in enumerate(model.targeted_in_group) if t], dtype=np.int64)
    visitor_order = [rng.permutation(g) for g in model.groups]
    groups = active[rng.integers(0, active.size, size=T)]
    users = np.empty(T, dtype=np.int64)
    for j in np.unique(groups):
        idx = np.flatnonzero(groups == j)
        slot = rng.choice(model.group_size, size=idx.size, p=props[j].as_array())
        users[idx] = visitor_order[j][slot]
    return RequestStream(groups, users, rng_seed)


def true_reach(
    hidden_users: Sequence[int],
    wins: Sequence[bool],
    cap: int,
    targeted=None,
) -> int:
    """``sum_i min(X_i, cap)`` over targeted users, from the hidden senders of won requests."""
    users = np.asarray(hidden_users, dtype=np.int64)
    wins = np.asarray(wins, dtype=bool)
    if users.shape != wins.shape:
        raise ValueError("hidden_users and wins must align")
    won_users = users[wins]
    if won_users.size == 0:
        return 0
    counts = np.bincount(won_users)
    if targeted is not None:
        tgt = np.array(sorted(u for u in targeted if u < counts.size), dtype=np.int64)
        counts = counts[tgt]
    return int(np.minimum(counts, cap).sum())
