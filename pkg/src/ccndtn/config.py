"""Scenario description, presets and JSON loading."""
from __future__ import annotations

import copy
import json
from dataclasses import asdict, dataclass, field, fields, is_dataclass
from pathlib import Path
from typing import Any, Optional

MODES = ("full", "no_user_cache", "dtn_only", "dtn_user_cache")
ROUTERS = ("epidemic", "snw", "firstcontact", "hybrid")
POLICIES = ("lru", "fifo", "lfu", "cost")
DISTRIBUTIONS = ("uniform", "zipf")


class ScenarioError(ValueError):
    def __init__(self, problems: list[str]):
        self.problems = problems
        super().__init__("; ".join(problems))


@dataclass
class NodeCounts:
    requesters: int = 4
    relays: int = 30
    caps: int = 6


@dataclass
class MapConfig:
    grid: int = 10
    spacing: float = 200.0
    diagonal_fraction: float = 0.3
    pois: int = 12
    groups: int = 4
    seed: int = 0
    file: Optional[str] = None


@dataclass
class MobilityConfig:
    # probability of heading to a group POI, one entry per group
    poi_prob: list = field(default_factory=lambda: [0.5, 0.5, 0.5, 0.5])
    pedestrian_speed: list = field(default_factory=lambda: [0.5, 1.5])
    vehicle_speed: list = field(default_factory=lambda: [2.7, 13.9])
    vehicle_groups: list = field(default_factory=lambda: [4])
    pause: list = field(default_factory=lambda: [0.0, 120.0])
    step: float = 1.0


@dataclass
class RoutingConfig:
    kind: str = "epidemic"
    copies: int = 10
    buffer: int = 200


@dataclass
class CacheConfig:
    policy: str = "lru"
    mobile: int = 10
    cap: int = 50
    relay_cache: bool = False


@dataclass
class WorkloadConfig:
    catalog: int = 100
    dist: str = "zipf"
    zipf_s: float = 1.0
    interval_s: float = 300.0


@dataclass
class LinkConfig:
    mobile_range: float = 10.0
    cap_range: float = 100.0
    mobile_rate: float = 2.5e6
    cap_rate: float = 10e6
    interest_bytes: int = 1000
    content_bytes: int = 1_000_000


@dataclass
class Scenario:
    seed: int = 1
    duration: float = 21600.0
    warmup: float = 3600.0
    ttl: float = 500.0
    core_latency: float = 0.2
    tick: float = 60.0
    hop_limit: int = 16
    mode: str = "full"
    nodes: NodeCounts = field(default_factory=NodeCounts)
    map: MapConfig = field(default_factory=MapConfig)
    mobility: MobilityConfig = field(default_factory=MobilityConfig)
    routing: RoutingConfig = field(default_factory=RoutingConfig)
    cache: CacheConfig = field(default_factory=CacheConfig)
    workload: WorkloadConfig = field(default_factory=WorkloadConfig)
    link: LinkConfig = field(default_factory=LinkConfig)

    def to_dict(self) -> dict:
        return asdict(self)

    def replace(self, **changes) -> "Scenario":
        """Copy with dotted-key overrides, e.g. ``replace(**{"routing.kind": "snw"})``."""
        data = self.to_dict()
        for key, value in changes.items():
            node = data
            *parents, leaf = key.split(".")
            for p in parents:
                node = node[p]
            node[leaf] = value
        return from_dict(data, base={})

    @property
    def cell_key(self) -> str:
        return f"{self.routing.kind}-{self.workload.dist}-{self.mode}-s{self.seed}"


PRESETS: dict[str, dict] = {
    "desk": {},
    "paper_scale": {
        "duration": 432000.0,
        "warmup": 86400.0,
        "ttl": 500.0,
        "nodes": {"requesters": 10, "relays": 160, "caps": 30},
        "map": {"grid": 23, "spacing": 200.0, "pois": 40},
        "cache": {"mobile": 10, "cap": 50},
        "workload": {"catalog": 1000, "interval_s": 300.0},
        "link": {"mobile_range": 10.0, "cap_range": 100.0, "mobile_rate": 2.5e6, "cap_rate": 10e6},
    },
}


def _merge(dst: dict, src: dict) -> dict:
    for k, v in src.items():
        if isinstance(v, dict) and isinstance(dst.get(k), dict):
            _merge(dst[k], v)
        else:
            dst[k] = copy.deepcopy(v)
    return dst


def _build(cls, data: dict, path: str, problems: list[str]):
    known = {f.name: f for f in fields(cls)}
    kwargs = {}
    for key, value in data.items():
        where = f"{path}{key}"
        if key not in known:
            problems.append(f"{where}: unknown key")
            continue
        default = getattr(cls(), key)
        if is_dataclass(default):
            if not isinstance(value, dict):
                problems.append(f"{where}: expected an object")
                continue
            kwargs[key] = _build(type(default), value, f"{where}.", problems)
            continue
        if isinstance(default, bool):
            if not isinstance(value, bool):
                problems.append(f"{where}: expected a boolean")
                continue
        elif isinstance(default, int) and not isinstance(default, bool):
            if isinstance(value, bool) or not isinstance(value, int):
                problems.append(f"{where}: expected an integer")
                continue
        elif isinstance(default, float):
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                problems.append(f"{where}: expected a number")
                continue
            value = float(value)
        elif isinstance(default, list):
            if not isinstance(value, list):
                problems.append(f"{where}: expected a list")
                continue
        elif isinstance(default, str) and not isinstance(value, str):
            problems.append(f"{where}: expected a string")
            continue
        kwargs[key] = value
    return cls(**kwargs)


def validate(s: Scenario) -> list[str]:
    problems = []

    def check(cond, key, msg):
        if not cond:
            problems.append(f"{key}: {msg}")

    check(s.duration >= 0, "duration", "must be >= 0")
    check(0 <= s.warmup and (s.warmup < s.duration or s.duration == 0), "warmup", "must satisfy 0 <= warmup < duration")
    check(s.ttl > 0, "ttl", "must be > 0")
    check(s.core_latency >= 0, "core_latency", "must be >= 0")
    check(s.tick > 0, "tick", "must be > 0")
    check(s.hop_limit >= 1, "hop_limit", "must be >= 1")
    check(s.mode in MODES, "mode", f"must be one of {MODES}")
    for k in ("requesters", "relays", "caps"):
        check(getattr(s.nodes, k) >= 0, f"nodes.{k}", "must be >= 0")
    check(s.map.grid >= 2, "map.grid", "must be >= 2")
    check(s.map.spacing > 0, "map.spacing", "must be > 0")
    check(s.map.groups >= 1, "map.groups", "must be >= 1")
    check(len(s.mobility.poi_prob) == s.map.groups, "mobility.poi_prob", "needs one probability per group")
    check(all(0 <= p <= 1 for p in s.mobility.poi_prob), "mobility.poi_prob", "entries must be in [0, 1]")
    for key in ("pedestrian_speed", "vehicle_speed", "pause"):
        lo_hi = getattr(s.mobility, key)
        check(len(lo_hi) == 2 and 0 <= lo_hi[0] <= lo_hi[1], f"mobility.{key}", "must be [lo, hi] with 0 <= lo <= hi")
    check(s.mobility.pedestrian_speed[0] > 0 and s.mobility.vehicle_speed[0] > 0, "mobility", "speeds must be > 0")
    check(s.mobility.step > 0, "mobility.step", "must be > 0")
    check(s.routing.kind in ROUTERS, "routing.kind", f"must be one of {ROUTERS}")
    check(s.routing.copies >= 1, "routing.copies", "must be >= 1")
    check(s.routing.buffer >= 1, "routing.buffer", "must be >= 1")
    check(s.cache.policy in POLICIES, "cache.policy", f"must be one of {POLICIES}")
    check(s.cache.mobile >= 0, "cache.mobile", "must be >= 0")
    check(s.cache.cap >= 1, "cache.cap", "must be >= 1")
    check(s.workload.catalog >= 1, "workload.catalog", "must be >= 1")
    check(s.workload.dist in DISTRIBUTIONS, "workload.dist", f"must be one of {DISTRIBUTIONS}")
    check(s.workload.zipf_s > 0, "workload.zipf_s", "must be > 0")
    check(s.workload.interval_s > 0, "workload.interval_s", "must be > 0")
    for key in ("mobile_range", "cap_range", "mobile_rate", "cap_rate"):
        check(getattr(s.link, key) > 0, f"link.{key}", "must be > 0")
    for key in ("interest_bytes", "content_bytes"):
        check(getattr(s.link, key) > 0, f"link.{key}", "must be > 0")
    return problems


def from_dict(data: dict, preset: str = "desk", base: Optional[dict] = None) -> Scenario:
    """Scenario from a (partial) JSON object layered over a preset."""
    if base is None:
        if preset not in PRESETS:
            raise ScenarioError([f"preset: unknown preset {preset!r}"])
        base = _merge(Scenario().to_dict(), PRESETS[preset])
    if not isinstance(data, dict):
        raise ScenarioError(["<root>: expected a JSON object"])
    problems: list[str] = []
    unknown: list[str] = []
    _build(Scenario, data, "", unknown)
    if unknown:
        raise ScenarioError(unknown)
    merged = _merge(copy.deepcopy(base), data)
    scenario = _build(Scenario, merged, "", problems)
    problems += validate(scenario)
    if problems:
        raise ScenarioError(problems)
    return scenario


def load_scenario(path: Optional[str | Path] = None, preset: str = "desk") -> Scenario:
    data: Any = {}
    if path is not None:
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ScenarioError([f"<root>: invalid JSON ({exc})"]) from exc
    return from_dict(data, preset)
