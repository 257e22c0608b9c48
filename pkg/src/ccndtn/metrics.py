"""Per-run metrics computed from the event trace."""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import asdict, dataclass, field
from typing import Iterable, Optional

# delivery path labels
PATH_CAP_CACHE = "A"        # CAP answered from its content store
PATH_CORE = "B"             # fetched from the provider through the core
PATH_DEVICE = "C"           # a mobile device's cache, carried by mobiles
PATH_DEVICE_VIA_CAP = "D"   # a mobile device's cache, last hop a CAP

SOURCE_OF_PATH = {
    PATH_CAP_CACHE: "CAP",
    PATH_CORE: "ContentSource",
    PATH_DEVICE: "MobileUser",
    PATH_DEVICE_VIA_CAP: "MobileUser",
}
SOURCES = ("MobileUser", "CAP", "ContentSource")

PROTOCOL_DROPS = ("DuplicateRequester", "NoPendingRequester", "LoopDetected", "DuplicateDelivery")
RESOURCE_DROPS = ("TtlExpired", "BufferOverflow", "CacheFull")

CSV_COLUMNS = (
    "scenario_id", "router", "popularity", "avg_delay_s", "drops_protocol", "drops_resource",
    "split_mobile", "split_cap", "split_source", "provider_load", "served", "unserved",
)


def classify_delivery(provider_kind: Optional[str], last_hop_kind: Optional[str] = None) -> str:
    """Path label from who served the content and who handed it over last."""
    if provider_kind == "provider":
        return PATH_CORE
    if provider_kind == "cap":
        return PATH_CAP_CACHE
    if provider_kind in ("requester", "relay"):
        return PATH_DEVICE_VIA_CAP if last_hop_kind == "cap" else PATH_DEVICE
    raise ValueError(f"unknown provider kind {provider_kind!r}")


def first_satisfaction_filter(arrivals: Iterable[tuple[float, str]], deadline: Optional[float] = None):
    """Keep the earliest arrival before ``deadline``; the rest are duplicates.

    Returns ``(accepted or None, duplicates)`` where ``accepted`` is a
    ``(time, path)`` pair.
    """
    ordered = sorted(arrivals)
    if deadline is not None:
        ordered = [a for a in ordered if a[0] <= deadline]
    if not ordered:
        return None, 0
    return ordered[0], len(ordered) - 1


@dataclass
class MetricsReport:
    requests: int = 0
    served: int = 0
    unserved: int = 0
    pending: int = 0
    avg_e2e_delay: float = math.nan
    packet_drops: dict = field(default_factory=dict)
    drops_protocol: int = 0
    drops_resource: int = 0
    paths: dict = field(default_factory=lambda: {p: 0 for p in "ABCD"})
    traffic_split: dict = field(default_factory=lambda: {s: 0.0 for s in SOURCES})
    provider_load: int = 0
    provider_fraction: float = 0.0
    core_fetches: int = 0

    def to_dict(self) -> dict:
        return asdict(self)


def aggregate(trace: list[dict], warmup: float = 0.0) -> MetricsReport:
    """Fold a trace into a report, ignoring anything before ``warmup``."""
    if not trace or trace[-1].get("kind") != "run_end":
        raise ValueError("trace is incomplete: no run_end record")
    born: dict[str, float] = {}
    delivered: dict[str, list[tuple[float, str]]] = {}
    unserved = set()
    drops: Counter = Counter()
    core_fetches = 0
    for rec in trace:
        kind, t = rec["kind"], rec["t"]
        if kind == "born":
            if t >= warmup:
                born[rec["msg"]] = t
        elif kind == "deliver":
            d = rec["detail"]
            if d["born"] >= warmup:
                delivered.setdefault(rec["msg"], []).append((t, d["path"]))
        elif kind == "unserved":
            if rec["detail"]["born"] >= warmup:
                unserved.add(rec["msg"])
        elif t < warmup:
            continue
        elif kind == "drop":
            drops[rec["detail"]["reason"]] += 1
        elif kind == "dup_delivery":
            drops["DuplicateDelivery"] += 1
        elif kind == "fetch":
            core_fetches += 1

    report = MetricsReport(requests=len(born))
    delays = []
    for req, t0 in born.items():
        accepted, dups = first_satisfaction_filter(delivered.get(req, ()))
        drops["DuplicateDelivery"] += dups
        if accepted is None:
            continue
        delays.append(accepted[0] - t0)
        report.paths[accepted[1]] += 1
    report.served = len(delays)
    report.unserved = len(unserved & born.keys())
    report.pending = report.requests - report.served - report.unserved
    if delays:
        report.avg_e2e_delay = math.fsum(delays) / len(delays)
        by_source = Counter()
        for path, n in report.paths.items():
            by_source[SOURCE_OF_PATH[path]] += n
        report.traffic_split = {s: by_source[s] / report.served for s in SOURCES}
    report.packet_drops = dict(sorted(drops.items()))
    report.drops_protocol = sum(drops[r] for r in PROTOCOL_DROPS)
    report.drops_resource = sum(v for r, v in drops.items() if r not in PROTOCOL_DROPS)
    # service load: requests the provider itself satisfied
    report.provider_load = report.paths[PATH_CORE]
    report.provider_fraction = report.provider_load / report.served if report.served else 0.0
    report.core_fetches = core_fetches
    return report


def _pct(base: float, new: float) -> Optional[float]:
    if base == 0 or base is None or new is None or math.isnan(base) or math.isnan(new):
        return None
    return 100.0 * (new - base) / base


def compare(baseline: MetricsReport, treatment: MetricsReport) -> dict:
    """Percent change of the headline metrics; ``None`` where the baseline is 0."""
    return {
        "avg_delay_pct": _pct(baseline.avg_e2e_delay, treatment.avg_e2e_delay),
        "drops_protocol_pct": _pct(baseline.drops_protocol, treatment.drops_protocol),
        "drops_resource_pct": _pct(baseline.drops_resource, treatment.drops_resource),
        "provider_load_pct": _pct(baseline.provider_load, treatment.provider_load),
    }


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return "nan" if math.isnan(x) else f"{x:.6f}"
    return str(x)


def csv_row(report: MetricsReport, scenario_id: str, router: str, popularity: str) -> list[str]:
    split = report.traffic_split
    values = [scenario_id, router, popularity, report.avg_e2e_delay, report.drops_protocol,
              report.drops_resource, split["MobileUser"], split["CAP"], split["ContentSource"],
              report.provider_load, report.served, report.unserved]
    return [fmt(v) for v in values]
