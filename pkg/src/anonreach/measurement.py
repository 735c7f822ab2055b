"""Reach measurement from group-level impression counts.

Each win in group ``j`` is attributed to one of the group's ``k`` members
uniformly at random, so a targeted user's exposure is
``X_i ~ Binomial(s_i, 1/k)`` with ``s_i`` the wins summed over the user's
groups.  Reach at cap ``c`` is ``sum_i min(X_i, c)``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .binomial import BinomialTable, pmf_matrix
from .population import PopulationModel, PropertyVector, UnsupportedTopologyError

CURVE_COLUMNS = ("t", "cap", "expected_reach", "sigma", "lower_bound", "upper_bound")


@dataclass(frozen=True)
class ImpressionCounts:
    """Campaign wins per group, optionally restricted to a request window ``[start, end)``."""

    wins_per_group: tuple[int, ...]
    window: tuple[int, int] | None = None

    def __post_init__(self):
        counts = tuple(int(n) for n in self.wins_per_group)
        if any(n < 0 for n in counts):
            raise ValueError("impression counts must be non-negative")
        object.__setattr__(self, "wins_per_group", counts)

    @classmethod
    def from_wins(
        cls,
        win_groups: Sequence[int],
        num_groups: int,
        window: tuple[int, int] | None = None,
        times: Sequence[int] | None = None,
    ) -> "ImpressionCounts":
        """Tally won requests by group; ``times`` gives each win's request index for windowing."""
        win_groups = np.asarray(win_groups, dtype=np.int64)
        if window is not None:
            if times is None:
                times = np.arange(len(win_groups))
            times = np.asarray(times)
            start, end = window
            win_groups = win_groups[(times >= start) & (times < end)]
        counts = np.bincount(win_groups, minlength=num_groups)
        if counts.size > num_groups:
            raise ValueError("win references an unknown group")
        return cls(tuple(counts.tolist()), window)

    @property
    def total(self) -> int:
        return sum(self.wins_per_group)


def _counts(counts) -> tuple[int, ...]:
    if isinstance(counts, ImpressionCounts):
        return counts.wins_per_group
    return tuple(int(n) for n in counts)


def _check_cap(cap: int) -> None:
    if cap < 1 or int(cap) != cap:
        raise ValueError(f"frequency cap must be an integer >= 1, got {cap!r}")


def _capped_mean(trials: np.ndarray, cap: int, p: float) -> np.ndarray:
    """``E[min(X, cap)]`` for ``X ~ Binomial(trials, p)``, elementwise."""
    uniq, inv = np.unique(trials, return_inverse=True)
    f = pmf_matrix(uniq, cap, p)
    ls = np.arange(cap + 1)
    vals = (f[:, 1:] * ls[1:]).sum(axis=1) + cap - cap * f.sum(axis=1)
    return vals[inv]


def expected_reach(model: PopulationModel, counts, cap: int) -> float:
    """Expected number of impressions counted at most ``cap`` times per targeted user."""
    _check_cap(cap)
    s = model.exposure_trials(_counts(counts))
    if s.size == 0:
        return 0.0
    return math.fsum(_capped_mean(s, cap, 1.0 / model.group_size))


def expected_reach_alt(model: PopulationModel, counts, cap: int) -> float:
    """Same quantity as :func:`expected_reach` via ``c - sum_{l<c} (c-l) f(l)`` per user."""
    _check_cap(cap)
    s = model.exposure_trials(_counts(counts))
    if s.size == 0:
        return 0.0
    f = pmf_matrix(s, cap - 1, 1.0 / model.group_size)
    weights = cap - np.arange(cap)
    return math.fsum(cap - f @ weights)


def expected_unique_reach(model: PopulationModel, counts) -> float:
    s = model.exposure_trials(_counts(counts))
    miss = (1.0 - 1.0 / model.group_size) ** s
    return math.fsum(1.0 - miss)


def expected_overexposed(model: PopulationModel, counts, cap: int) -> float:
    """Expected count of targeted users served more than ``cap`` times."""
    _check_cap(cap)
    s = model.exposure_trials(_counts(counts))
    if s.size == 0:
        return 0.0
    cdf = pmf_matrix(s, cap, 1.0 / model.group_size).sum(axis=1)
    cdf = np.where(s <= cap, 1.0, np.minimum(cdf, 1.0))
    return float(len(s) - math.fsum(cdf))


def unique_reach_covariance(model: PopulationModel, counts) -> np.ndarray:
    """Covariance matrix of the per-user reached indicators (targeted users, ascending).

    Off-diagonal entries follow the inclusion-exclusion form
    ``((1-2/k)^s_shared - (1-1/k)^(2 s_shared)) * (1-1/k)^(s_i + s_i' - 2 s_shared)``;
    the diagonal is ``E[R_i](1 - E[R_i])``.
    """
    n = np.asarray(_counts(counts), dtype=float)
    k = model.group_size
    a = model.membership_matrix()
    s = a @ n
    shared = (a * n) @ a.T
    rest = s[:, None] + s[None, :] - 2.0 * shared
    miss1 = 1.0 - 1.0 / k
    miss2 = 1.0 - 2.0 / k
    cov = (miss2**shared - miss1 ** (2.0 * shared)) * miss1**rest
    hit = 1.0 - miss1**s
    np.fill_diagonal(cov, hit * (1.0 - hit))
    return cov


def unique_reach_variance(model: PopulationModel, counts) -> float:
    """Variance of unique reach (cap 1): per-user variances plus all pairwise covariances."""
    if not model.targeted:
        return 0.0
    cov = unique_reach_covariance(model, counts)
    return max(float(cov.sum()), 0.0)


def chebyshev_bound(sigma2: float, epsilon: float) -> tuple[float, float]:
    """Return ``(min(1, 1/eps^2), eps * sigma)``: a bound on P(|R - E R| >= eps*sigma) and the threshold."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if sigma2 < 0:
        raise ValueError("variance must be non-negative")
    return min(1.0, 1.0 / epsilon**2), epsilon * math.sqrt(sigma2)


def reach_bounds(model: PopulationModel, counts, cap: int) -> tuple[int, int]:
    """Deterministic (lower, upper) reach for disjoint groups.

    Lower is ``sum_j min(n_j, c)`` over fully targeted groups; a group with an
    untargeted member can waste every win, so it contributes 0.  Upper is
    ``sum_j min(n_j, c |U_j|)``.
    """
    _check_cap(cap)
    model.require_partition()
    n = _counts(counts)
    lower = upper = 0
    for n_j, u_j in zip(n, model.targeted_in_group):
        if len(u_j) == model.group_size:
            lower += min(n_j, cap)
        upper += min(n_j, cap * len(u_j))
    return lower, upper


def expected_reach_nonuniform(prop: PropertyVector, n: int, cap: int) -> float:
    """Expected capped reach of one group whose members visit with probabilities ``prop``."""
    _check_cap(cap)
    total = 0.0
    for q in prop.probs:
        f = pmf_matrix([n], cap, q)[0]
        total += float((f[1:] * np.arange(1, cap + 1)).sum()) + cap - cap * min(f.sum(), 1.0)
    return total


def expected_unique_reach_nonuniform(prop: PropertyVector, n: int) -> float:
    q = prop.as_array()
    return float(prop.k - ((1.0 - q) ** n).sum())


def expected_reach_nonuniform_total(
    model: PopulationModel, counts, props: Sequence[PropertyVector], cap: int
) -> float:
    """Campaign reach summed over disjoint groups, each with its own property vector."""
    if not model.is_partition:
        raise UnsupportedTopologyError("non-uniform estimators need non-overlapping groups")
    n = _counts(counts)
    if len(props) != model.num_groups:
        raise ValueError("need one property vector per group")
    return math.fsum(expected_reach_nonuniform(p, n_j, cap) for p, n_j in zip(props, n))


class ReachEstimator:
    """Streaming expected reach for every cap ``1..cap`` as wins arrive.

    Keeps one exposure counter per targeted user plus a shared
    :class:`BinomialTable`.  A win in group ``j`` moves each targeted member
    from ``n`` to ``n+1`` trials and adds ``(m-l) (f[l,n] - f[l,n+1])`` to
    ``R[m]`` for every ``l < m``.  On disjoint groups all targeted members of
    a group share one counter, so the update is done once and scaled.
    """

    def __init__(self, model: PopulationModel, cap: int):
        _check_cap(cap)
        self.model = model
        self.cap = int(cap)
        self.table = BinomialTable(1.0 / model.group_size, self.cap)
        self.exposure = np.zeros(model.num_users, dtype=np.int64)
        self.group_wins = np.zeros(model.num_groups, dtype=np.int64)
        self._reach = np.zeros(self.cap)
        ms = np.arange(1, self.cap + 1)[:, None]
        ls = np.arange(self.cap + 1)[None, :]
        self._weights = np.clip(ms - ls, 0, None).astype(float)
        self._members = [np.asarray(u, dtype=np.int64) for u in model.targeted_in_group]
        self._partition = model.is_partition

    @property
    def reach(self) -> np.ndarray:
        """Copy of ``[R(1), ..., R(cap)]``."""
        return self._reach.copy()

    def counts(self) -> ImpressionCounts:
        return ImpressionCounts(tuple(self.group_wins.tolist()))

    def add_win(self, group: int) -> np.ndarray:
        if not 0 <= group < self.model.num_groups:
            raise ValueError(f"unknown group {group}")
        self.group_wins[group] += 1
        members = self._members[group]
        if members.size == 0:
            return self.reach
        if self._partition:
            n = int(self.group_wins[group])
            self.table.ensure(n)
            diff = (self.table.row(n - 1) - self.table.row(n)) * members.size
            self.exposure[members] = n
        else:
            self.exposure[members] += 1
            new = self.exposure[members]
            rows = self.table.rows(np.concatenate([new - 1, new]))
            diff = rows[: new.size].sum(axis=0) - rows[new.size :].sum(axis=0)
        self._reach += self._weights @ diff
        return self.reach


def stream_win(estimator: ReachEstimator, group: int) -> np.ndarray:
    """Record one campaign win in ``group``; return the updated reach for caps ``1..c``."""
    return estimator.add_win(group)


@dataclass(frozen=True)
class ReachDistribution:
    mean: float
    variance: float
    values: np.ndarray
    frequencies: np.ndarray
    samples: np.ndarray

    @property
    def trials(self) -> int:
        return int(self.samples.size)

    @property
    def std_error(self) -> float:
        return math.sqrt(self.variance / self.trials)


def mc_reach_distribution(
    model: PopulationModel,
    counts,
    cap: int,
    trials: int,
    rng_seed: int | None = 0,
    chunk: int = 10_000,
) -> ReachDistribution:
    """Sample reach by assigning every group win to a uniformly random member.

    Trials run in chunks, each with its own generator spawned from ``rng_seed``.
    """
    _check_cap(cap)
    if trials < 1:
        raise ValueError("trials must be >= 1")
    n = _counts(counts)
    k = model.group_size
    tgt = np.asarray(model.targeted_users, dtype=np.int64)
    even = np.full(k, 1.0 / k)
    n_chunks = -(-trials // chunk)
    seeds = np.random.SeedSequence(rng_seed).spawn(n_chunks)
    out = np.empty(trials, dtype=np.int64)
    for c_idx, ss in enumerate(seeds):
        rng = np.random.default_rng(ss)
        size = min(chunk, trials - c_idx * chunk)
        x = np.zeros((size, model.num_users), dtype=np.int64)
        for j, n_j in enumerate(n):
            if n_j:
                x[:, list(model.groups[j])] += rng.multinomial(n_j, even, size=size)
        out[c_idx * chunk : c_idx * chunk + size] = np.minimum(x[:, tgt], cap).sum(axis=1)
    values, freqs = np.unique(out, return_counts=True)
    var = float(out.var(ddof=1)) if trials > 1 else 0.0
    return ReachDistribution(float(out.mean()), var, values, freqs, out)


def reach_curve(
    model: PopulationModel,
    win_groups: Iterable[int],
    cap: int,
    times: Iterable[int] | None = None,
    every: int = 1,
) -> list[dict]:
    """Rows of ``CURVE_COLUMNS`` after each (or every ``every``-th) win.

    ``sigma`` is reported for cap 1 only; bounds only for disjoint groups.
    """
    est = ReachEstimator(model, cap)
    win_groups = list(win_groups)
    times = list(range(1, len(win_groups) + 1)) if times is None else list(times)
    rows = []
    for idx, (t, j) in enumerate(zip(times, win_groups), start=1):
        est.add_win(int(j))
        if idx % every and idx != len(win_groups):
            continue
        counts = est.counts()
        reach = est.reach
        for m in range(1, cap + 1):
            sigma = math.sqrt(unique_reach_variance(model, counts)) if m == 1 else float("nan")
            if model.is_partition:
                lo, hi = reach_bounds(model, counts, m)
            else:
                lo = hi = float("nan")
            rows.append(
                dict(t=int(t), cap=m, expected_reach=float(reach[m - 1]), sigma=sigma,
                     lower_bound=lo, upper_bound=hi)
            )
    return rows


def write_reach_curve(rows: Sequence[dict], path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CURVE_COLUMNS)
        writer.writeheader()
        for row in rows:
            writer.writerow({c: _fmt(row[c]) for c in CURVE_COLUMNS})
    return path


def _fmt(v):
    if isinstance(v, float):
        return "" if math.isnan(v) else repr(v)
    return v
