"""Declarative experiment configuration (JSON in, dataclasses out)."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from ..population import (
    ConfigError,
    PopulationModel,
    PropertyVector,
    build_overlapping,
    build_partition,
)

SCHEMA_VERSION = 1


@dataclass
class PopulationSpec:
    num_users: int
    group_size: int
    num_groups: int | None = None
    overlap: bool = False
    # "all" | [user ids] | {"count": n, "placement": "concentrated"|"spread"|"random"|int}
    targeted: Any = "all"
    property_vectors: list[list[float]] | None = None
    # {"kind": "geometric", "ratio": r} or {"kind": "geometric", "ratio_range": [lo, hi]}
    property_model: dict | None = None

    def build(self, rng_seed) -> PopulationModel:
        if self.overlap:
            if self.num_groups is None:
                raise ConfigError("population.num_groups is required when overlap is true")
            tgt = None if self.targeted == "all" else self._target_list()
            return build_overlapping(
                self.num_users, self.group_size, self.num_groups, rng_seed, targeted=tgt
            )
        if self.num_groups is not None and self.num_groups * self.group_size != self.num_users:
            raise ConfigError("num_groups * group_size must equal num_users for a partition")
        tgt = self.targeted
        if tgt == "all":
            return build_partition(self.num_users, self.group_size, 1.0, rng_seed)
        if isinstance(tgt, dict):
            unknown = set(tgt) - {"count", "placement"}
            if unknown or "count" not in tgt:
                raise ConfigError(
                    "population.targeted must look like {count, placement}; "
                    f"got keys {sorted(tgt)}"
                )
            return build_partition(
                self.num_users,
                self.group_size,
                tgt["count"] / self.num_users,
                rng_seed,
                placement=tgt.get("placement", "random"),
            )
        base = build_partition(self.num_users, self.group_size, 1.0, rng_seed)
        return PopulationModel(base.num_users, base.group_size, base.groups, self._target_list())

    def _target_list(self) -> frozenset[int]:
        if not isinstance(self.targeted, list):
            raise ConfigError("population.targeted must be 'all', a list, or {count, placement}")
        return frozenset(int(u) for u in self.targeted)

    def property_vectors_for(self, num_groups: int, rng: np.random.Generator) -> list[PropertyVector]:
        if self.property_vectors is not None:
            if len(self.property_vectors) != num_groups:
                raise ConfigError("population.property_vectors needs one vector per group")
            return [PropertyVector(tuple(v)) for v in self.property_vectors]
        pm = self.property_model or {"kind": "geometric", "ratio": 0.6}
        if pm.get("kind") != "geometric":
            raise ConfigError(f"unknown property_model kind {pm.get('kind')!r}")
        if "ratio_range" in pm:
            lo, hi = pm["ratio_range"]
            ratios = rng.uniform(lo, hi, size=num_groups)
        else:
            ratios = np.full(num_groups, float(pm.get("ratio", 0.6)))
        return [PropertyVector.geometric(self.group_size, r) for r in ratios]


@dataclass
class StreamSpec:
    T: int = 2000
    arrival: str = "uniform"  # "uniform" | "property"


@dataclass
class CampaignSpec:
    cap: int = 1
    budget: float = 90.0
    learning_rate: float = 0.1
    lambda_init: float = 10.0
    bid_floor: float = 0.1
    bid_cap: float = 10.0


@dataclass
class AuctionSpec:
    mu: float = 0.0
    sigma2: float = 0.5


@dataclass
class SweepSpec:
    k: list[int] | None = None
    impressions: list[int] | None = None
    placements: list[Any] | None = None
    approaches: list[str] | None = None


@dataclass
class MeasureSpec:
    counts: list[int] | None = None
    win_rate: float = 1.0
    report_every: int = 1
    impressions: int | None = None


@dataclass
class ExperimentConfig:
    scenario: str
    population: PopulationSpec
    stream: StreamSpec = field(default_factory=StreamSpec)
    campaign: CampaignSpec = field(default_factory=CampaignSpec)
    auction: AuctionSpec = field(default_factory=AuctionSpec)
    sweep: SweepSpec = field(default_factory=SweepSpec)
    measure: MeasureSpec = field(default_factory=MeasureSpec)
    trials: int = 200
    seed: int = 0
    output: str = "results"
    schema_version: int = SCHEMA_VERSION

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


_SECTIONS = {
    "population": PopulationSpec,
    "stream": StreamSpec,
    "campaign": CampaignSpec,
    "auction": AuctionSpec,
    "sweep": SweepSpec,
    "measure": MeasureSpec,
}


def _build(cls, data: dict, where: str):
    if not isinstance(data, dict):
        raise ConfigError(f"{where} must be a JSON object")
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        raise ConfigError(f"unknown field(s) in {where}: {', '.join(unknown)}")
    required = [
        f.name for f in dataclasses.fields(cls)
        if f.default is dataclasses.MISSING and f.default_factory is dataclasses.MISSING
    ]
    missing = [n for n in required if n not in data]
    if missing:
        raise ConfigError(f"missing required field(s) in {where}: {', '.join(missing)}")
    return cls(**data)


def config_from_dict(data: dict) -> ExperimentConfig:
    data = dict(data)
    version = data.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {version}; expected {SCHEMA_VERSION}")
    for key, cls in _SECTIONS.items():
        if key in data:
            data[key] = _build(cls, data[key], key)
    cfg = _build(ExperimentConfig, data, "config")
    if cfg.trials < 1:
        raise ConfigError("trials must be >= 1")
    return cfg


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from None
    return config_from_dict(data)


def save_config(cfg: ExperimentConfig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(cfg.to_dict(), indent=2, sort_keys=True) + "\n")
    return path
