"""Reach measurement and bid optimisation when ad requests identify only a group of k users."""

from .auction import AuctionModel, RequestStream, generate_stream, run_auction, true_reach
from .binomial import BinomialTable, binom_cdf, binom_pmf, extend_table
from .measurement import (
    ImpressionCounts,
    ReachEstimator,
    chebyshev_bound,
    expected_overexposed,
    expected_reach,
    expected_reach_nonuniform,
    expected_unique_reach,
    expected_unique_reach_nonuniform,
    mc_reach_distribution,
    reach_bounds,
    stream_win,
    unique_reach_covariance,
    unique_reach_variance,
)
from .optimization import (
    BidderState,
    ReachProbabilityState,
    dual_update,
    optimal_bid,
    reach_probability,
    reach_probability_nonuniform,
)
from .population import (
    ConfigError,
    PopulationModel,
    PropertyVector,
    UnsupportedTopologyError,
    build_overlapping,
    build_partition,
    coverage,
)

__version__ = "0.1.0"
