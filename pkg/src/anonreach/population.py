"""Users, k-anonymous groups and targeting.

Users are indexed ``0..num_users-1`` and groups ``0..M-1``.  Two derived maps
drive every estimator: ``targeted_in_group[j]`` (targeted members of group
``j``) and ``groups_of_user[i]`` (groups that contain user ``i``).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

PLACEMENTS = ("concentrated", "spread", "random")


class ConfigError(ValueError):
    """Raised for inconsistent population or scenario parameters."""


class UnsupportedTopologyError(ValueError):
    """Raised when an estimator that assumes disjoint groups sees overlap."""


@dataclass(frozen=True)
class PopulationModel:
    num_users: int
    group_size: int
    groups: tuple[tuple[int, ...], ...]
    targeted: frozenset[int]
    targeted_in_group: tuple[tuple[int, ...], ...] = field(init=False, repr=False)
    groups_of_user: tuple[tuple[int, ...], ...] = field(init=False, repr=False)

    def __post_init__(self):
        groups = tuple(tuple(sorted(int(u) for u in g)) for g in self.groups)
        object.__setattr__(self, "groups", groups)
        object.__setattr__(self, "targeted", frozenset(int(u) for u in self.targeted))
        if self.num_users < 1:
            raise ConfigError("num_users must be positive")
        if self.group_size < 1:
            raise ConfigError("group_size must be positive")
        for j, g in enumerate(groups):
            if len(g) != self.group_size:
                raise ConfigError(
                    f"group {j} has {len(g)} members; all groups must have exactly "
                    f"group_size={self.group_size}"
                )
            if len(set(g)) != len(g):
                raise ConfigError(f"group {j} lists a member twice")
            if g and (g[0] < 0 or g[-1] >= self.num_users):
                raise ConfigError(f"group {j} references an unknown user")
        for u in self.targeted:
            if not 0 <= u < self.num_users:
                raise ConfigError(f"targeted user {u} out of range")
        u_j, g_i = _derive_maps(self.num_users, groups, self.targeted)
        object.__setattr__(self, "targeted_in_group", u_j)
        object.__setattr__(self, "groups_of_user", g_i)

    @property
    def num_groups(self) -> int:
        return len(self.groups)

    @property
    def k(self) -> int:
        return self.group_size

    @property
    def targeted_users(self) -> list[int]:
        """Targeted users in ascending index order."""
        return sorted(self.targeted)

    @property
    def is_partition(self) -> bool:
        """True when no user belongs to more than one group."""
        return all(len(g) <= 1 for g in self.groups_of_user)

    def require_partition(self) -> None:
        if not self.is_partition:
            raise UnsupportedTopologyError(
                "this operation requires non-overlapping groups"
            )

    def exposure_trials(self, counts: Sequence[int]) -> np.ndarray:
        """Per targeted user (ascending index), total wins over the groups containing them."""
        counts = np.asarray(counts, dtype=np.int64)
        if counts.shape != (self.num_groups,):
            raise ValueError(
                f"expected {self.num_groups} group counts, got shape {counts.shape}"
            )
        if np.any(counts < 0):
            raise ValueError("impression counts must be non-negative")
        return np.array(
            [counts[list(self.groups_of_user[i])].sum() for i in self.targeted_users],
            dtype=np.int64,
        )

    def membership_matrix(self) -> np.ndarray:
        """0/1 matrix with a row per targeted user and a column per group."""
        users = self.targeted_users
        mat = np.zeros((len(users), self.num_groups))
        for r, i in enumerate(users):
            mat[r, list(self.groups_of_user[i])] = 1.0
        return mat


def _derive_maps(num_users, groups, targeted):
    u_j = tuple(tuple(u for u in g if u in targeted) for g in groups)
    g_i = [[] for _ in range(num_users)]
    for j, g in enumerate(groups):
        for u in g:
            g_i[u].append(j)
    return u_j, tuple(tuple(x) for x in g_i)


@dataclass(frozen=True)
class PropertyVector:
    """Sorted within-group visit probabilities ``q_1 <= ... <= q_k`` summing to 1."""

    probs: tuple[float, ...]

    def __post_init__(self):
        arr = np.asarray(self.probs, dtype=float)
        if arr.ndim != 1 or arr.size == 0:
            raise ConfigError("property vector must be a non-empty 1-d sequence")
        if np.any(arr < 0) or not np.all(np.isfinite(arr)):
            raise ConfigError("property vector entries must be finite and >= 0")
        total = arr.sum()
        if abs(total - 1.0) > 1e-9:
            raise ConfigError(f"property vector must sum to 1, got {total!r}")
        arr = np.sort(arr / total)
        object.__setattr__(self, "probs", tuple(float(v) for v in arr))

    @property
    def k(self) -> int:
        return len(self.probs)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.probs)

    @classmethod
    def uniform(cls, k: int) -> "PropertyVector":
        return cls((1.0 / k,) * k)

    @classmethod
    def geometric(cls, k: int, ratio: float) -> "PropertyVector":
        """Weights proportional to ``ratio**i``, normalised."""
        w = ratio ** np.arange(k, dtype=float)
        return cls(tuple(w / w.sum()))


def _choose_targets(num_users, groups, count, placement, rng):
    if count > num_users:
        raise ConfigError("more targeted users than users")
    if count == 0:
        return frozenset()
    if placement == "random":
        return frozenset(int(u) for u in rng.choice(num_users, size=count, replace=False))
    if isinstance(placement, (int, np.integer)) and not isinstance(placement, bool):
        n_hosts = int(placement)
    elif placement == "concentrated":
        n_hosts = -(-count // len(groups[0]))
    elif placement == "spread":
        n_hosts = min(count, len(groups))
    else:
        raise ConfigError(f"unknown placement {placement!r}; use one of {PLACEMENTS} or an int")
    if not 1 <= n_hosts <= len(groups) or n_hosts * len(groups[0]) < count:
        raise ConfigError(f"cannot place {count} targeted users in {n_hosts} groups")
    hosts = rng.choice(len(groups), size=n_hosts, replace=False)
    # near-equal split of targets across the host groups
    per_host = [count // n_hosts + (1 if h < count % n_hosts else 0) for h in range(n_hosts)]
    chosen = []
    for h, m in zip(hosts, per_host):
        members = groups[int(h)]
        chosen.extend(int(u) for u in rng.choice(members, size=m, replace=False))
    return frozenset(chosen)


def build_partition(
    num_users: int,
    group_size: int,
    targeted_fraction: float = 1.0,
    rng_seed: int | None = 0,
    placement: str | int = "random",
) -> PopulationModel:
    """Disjoint groups of ``group_size`` from a seeded shuffle of the users.

    ``placement`` decides where the ``round(targeted_fraction * num_users)``
    targeted users sit: ``"concentrated"`` fills as few groups as possible,
    ``"spread"`` puts at most one per group where it can, ``"random"`` ignores
    groups, and an integer spreads them evenly over that many groups.
    """
    if group_size < 1 or num_users < 1:
        raise ConfigError("num_users and group_size must be positive")
    if num_users % group_size:
        raise ConfigError(
            f"group_size={group_size} does not divide num_users={num_users}"
        )
    if not 0.0 <= targeted_fraction <= 1.0:
        raise ConfigError("targeted_fraction must lie in [0, 1]")
    rng = np.random.default_rng(rng_seed)
    perm = rng.permutation(num_users)
    groups = tuple(
        tuple(int(u) for u in perm[s : s + group_size])
        for s in range(0, num_users, group_size)
    )
    count = int(round(targeted_fraction * num_users))
    targeted = _choose_targets(num_users, groups, count, placement, rng)
    return PopulationModel(num_users, group_size, groups, targeted)


def build_overlapping(
    num_users: int,
    group_size: int,
    num_groups: int,
    rng_seed: int | None = 0,
    targeted: Iterable[int] | None = None,
) -> PopulationModel:
    """Groups drawn independently (without replacement inside a group); users may repeat across groups."""
    if group_size < 1 or num_users < 1 or num_groups < 1:
        raise ConfigError("num_users, group_size and num_groups must be positive")
    if group_size > num_users:
        raise ConfigError("group_size cannot exceed num_users")
    rng = np.random.default_rng(rng_seed)
    groups = tuple(
        tuple(int(u) for u in rng.choice(num_users, size=group_size, replace=False))
        for _ in range(num_groups)
    )
    tgt = frozenset(range(num_users)) if targeted is None else frozenset(targeted)
    return PopulationModel(num_users, group_size, groups, tgt)


def coverage(model: PopulationModel) -> float:
    """Mean targeted share ``|U_j| / k`` over groups holding at least one targeted user."""
    shares = [len(u) / model.group_size for u in model.targeted_in_group if u]
    if not shares:
        raise ConfigError("coverage is undefined: no group contains a targeted user")
    return float(np.mean(shares))
