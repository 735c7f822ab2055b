"""One campaign run: discount, bid, auction, pace, repeat."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..auction import AuctionModel, RequestStream, true_reach
from ..measurement import ReachEstimator
from ..optimization import (
    BidderState,
    NonuniformReachProbabilityState,
    ReachProbabilityState,
)
from ..population import PopulationModel

TRACE_COLUMNS = (
    "t", "group", "p_t", "lambda", "bid", "won", "price_paid",
    "cumulative_spend", "cumulative_expected_reach",
)


class UniformDiscount:
    """Reach probability assuming every group member is equally likely to visit."""

    name = "uniform"

    def __init__(self, model: PopulationModel, cap: int):
        self.state = ReachProbabilityState(model, cap)

    def probability(self, group, user):
        return self.state.probability(group)

    def record_win(self, group, user):
        self.state.record_win(group)


class NonuniformDiscount:
    """Reach probability from per-group visit-probability vectors."""

    name = "nonuniform"

    def __init__(self, model, props, cap):
        self.state = NonuniformReachProbabilityState(model, props, cap)

    def probability(self, group, user):
        return self.state.probability(group)

    def record_win(self, group, user):
        self.state.record_win(group)


class UniqueImpressions:
    """Every impression counts as new reach."""

    name = "unique_impressions"

    def __init__(self, model: PopulationModel):
        self._has_target = [bool(u) for u in model.targeted_in_group]

    def probability(self, group, user):
        return 1.0 if self._has_target[group] else 0.0

    def record_win(self, group, user):
        pass


class UniqueGroups:
    """Only the first impression in a group counts as new reach."""

    name = "unique_groups"

    def __init__(self, model: PopulationModel):
        self._served = np.zeros(model.num_groups, dtype=bool)
        self._has_target = [bool(u) for u in model.targeted_in_group]

    def probability(self, group, user):
        return 0.0 if self._served[group] or not self._has_target[group] else 1.0

    def record_win(self, group, user):
        self._served[group] = True


class IdentityDiscount:
    """No privacy: the sender is known, so frequency capping is exact."""

    name = "identity"

    def __init__(self, model: PopulationModel, cap: int):
        self.cap = cap
        self._targeted = np.zeros(model.num_users, dtype=bool)
        self._targeted[list(model.targeted)] = True
        self._seen = np.zeros(model.num_users, dtype=np.int64)

    def probability(self, group, user):
        return 1.0 if self._targeted[user] and self._seen[user] < self.cap else 0.0

    def record_win(self, group, user):
        self._seen[user] += 1


@dataclass
class CampaignResult:
    won: np.ndarray
    spend: float
    reach: int
    final_lambda: float
    trace: list = field(default_factory=list, repr=False)

    @property
    def wins(self) -> int:
        return int(self.won.sum())

    @property
    def roas(self) -> float:
        return self.reach / self.spend if self.spend > 0 else float("nan")


def run_campaign(
    model: PopulationModel,
    stream: RequestStream,
    prices: np.ndarray,
    discount,
    bidder: BidderState,
    cap: int,
    auction: AuctionModel | None = None,
    trace: bool = False,
) -> CampaignResult:
    """Bid on every request of ``stream`` against pre-drawn competing ``prices``.

    With ``trace=True`` a row per request (``TRACE_COLUMNS``) is collected,
    including the streaming expected reach of the wins so far.
    """
    auction = auction or AuctionModel()
    inv = auction.inverse_marginal_ratio
    groups = stream.groups.tolist()
    users = stream.users.tolist()
    prices = np.asarray(prices, dtype=float).tolist()
    if len(prices) < len(groups):
        raise ValueError("need one competing price per request")
    won = np.zeros(len(groups), dtype=bool)
    floor, ceil = bidder.bid_floor, bidder.bid_cap
    est = ReachEstimator(model, cap) if trace else None
    rows = []
    for t, (j, u, price) in enumerate(zip(groups, users, prices)):
        p = discount.probability(j, u)
        lam = bidder.lam
        bid = min(max(inv(p / lam), floor), ceil)
        win = bid > price and bidder.can_pay(price)
        paid = price if win else 0.0
        if win:
            won[t] = True
            discount.record_win(j, u)
            if est is not None:
                est.add_win(j)
        bidder.observe(paid)
        if trace:
            rows.append(dict(
                t=t + 1, group=j, p_t=p, **{"lambda": lam}, bid=bid, won=int(win),
                price_paid=paid, cumulative_spend=bidder.spent,
                cumulative_expected_reach=float(est.reach[-1]),
            ))
    reach = true_reach(stream.users, won, cap, model.targeted)
    return CampaignResult(won, bidder.spent, reach, bidder.lam, rows)
