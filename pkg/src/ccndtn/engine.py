"""Deterministic discrete-event kernel.

Mobility contacts drive routing transfers; every received message goes
through the node's protocol logic, whose actions are executed here.
Events at equal timestamps are ordered by kind priority then insertion
sequence, so a run is a pure function of its scenario.
"""
from __future__ import annotations

import heapq
import itertools
import json
import math
from collections import defaultdict, deque
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Optional

import numpy as np

from . import metrics
from .config import Scenario, validate, ScenarioError
from .mobility import (ContactEvent, MobilityParams, RoadGraph, detect_contacts, grid_graph,
                       load_map, sample_positions, trajectory)
from .protocol import (TOWARD_FIB, CacheAdmit, DeliverToApp, Drop, DropReason, ForwardInterest,
                       InterestMessage, Message, NodeKind, NodeState, ProtocolConfig, ResponseMessage,
                       SendResponse, Via, expire_tables, process_interest, process_response)
from .routing import Buffer, Router, on_transfer_complete, select_transfers
from .tables import ContentStore
from .workload import Catalog, Request, draw_profiles, generate_schedule

PRIORITY = {
    "ContactDown": 0,
    "TransferDone": 1,
    "CoreDone": 2,
    "ContactUp": 3,
    "InterestBorn": 4,
    "TtlTick": 5,
    "RunEnd": 6,
}

BUFFER_OVERFLOW = "BufferOverflow"


@dataclass
class TransferJob:
    msg_id: str
    src: int
    dst: int
    bytes: int
    rate: float
    start: float
    eta: float
    via: Via = Via.DTN
    payload: Optional[Message] = None


@dataclass
class Link:
    a: int
    b: int
    up_since: float
    busy: Optional[TransferJob] = None
    sent: set = field(default_factory=set)
    ccn: deque = field(default_factory=deque)


@dataclass
class Topology:
    graph: RoadGraph
    cap_vertices: list[int]
    contacts: list[ContactEvent]


def _place_caps(graph: RoadGraph, n: int) -> list[int]:
    """CAPs sit on POIs (round-robin over groups), then on far-apart vertices."""
    groups = sorted(graph.pois)
    order = []
    for k in itertools.count():
        layer = [graph.pois[g][k] for g in groups if k < len(graph.pois[g])]
        if not layer:
            break
        order += layer
    chosen = []
    for v in order:
        if v not in chosen:
            chosen.append(v)
        if len(chosen) == n:
            return chosen
    while len(chosen) < n:
        if chosen:
            d = np.min(np.linalg.norm(graph.vertices[:, None, :] - graph.vertices[chosen][None, :, :], axis=-1), axis=1)
        else:
            d = np.zeros(graph.n)
        d[chosen] = -1
        chosen.append(int(np.argmax(d)))
    return chosen


def _build_graph(s: Scenario) -> RoadGraph:
    if s.map.file:
        return load_map(s.map.file)
    return grid_graph(s.map.grid, s.map.spacing, s.map.diagonal_fraction, s.map.pois, s.map.groups,
                      rng=np.random.default_rng(s.map.seed))


def _topology_key(s: Scenario) -> str:
    d = s.to_dict()
    keep = {k: d[k] for k in ("seed", "duration", "nodes", "map", "mobility")}
    keep["ranges"] = (s.link.mobile_range, s.link.cap_range)
    return json.dumps(keep, sort_keys=True)


@lru_cache(maxsize=8)
def _topology_cached(key: str) -> Topology:
    from .config import from_dict
    d = json.loads(key)
    ranges = d.pop("ranges")
    # warmup does not affect topology; zero keeps short horizons valid
    s = from_dict(dict(d, warmup=0.0, link={"mobile_range": ranges[0], "cap_range": ranges[1]}))
    return build_topology(s)


def build_topology(s: Scenario) -> Topology:
    """Road graph, CAP sites and the full contact plan for a scenario."""
    graph = _build_graph(s)
    n_mobile = s.nodes.requesters + s.nodes.relays
    caps = _place_caps(graph, s.nodes.caps)
    mob_ss = np.random.SeedSequence([s.seed, 1])
    streams = [np.random.default_rng(x) for x in mob_ss.spawn(max(n_mobile, 1))]
    trajs = []
    for i in range(n_mobile):
        group = i % s.map.groups + 1
        speed = s.mobility.vehicle_speed if group in s.mobility.vehicle_groups else s.mobility.pedestrian_speed
        params = MobilityParams(s.mobility.poi_prob[group - 1], tuple(speed), tuple(s.mobility.pause))
        trajs.append(trajectory(i, group, graph, params, s.duration, streams[i]))
    for v in caps:
        p = graph.vertices[v]
        trajs.append((np.array([0.0, max(s.duration, 1.0)]), np.array([p, p])))
    if s.duration <= 0 or not trajs:
        return Topology(graph, caps, [])
    step = s.mobility.step
    times = np.arange(0.0, s.duration + step / 2, step)
    positions = sample_positions(trajs, times)
    ranges = [s.link.mobile_range] * n_mobile + [s.link.cap_range] * len(caps)
    is_cap = [False] * n_mobile + [True] * len(caps)
    contacts = detect_contacts(positions, ranges, step=step, caps=is_cap)
    return Topology(graph, caps, contacts)


class Simulation:
    def __init__(self, scenario: Scenario, full_trace: bool = False):
        problems = validate(scenario)
        if problems:
            raise ScenarioError(problems)
        s = self.s = scenario
        self.full_trace = full_trace
        self.mode = s.mode
        self.plain = s.mode in ("dtn_only", "dtn_user_cache")
        self.router = Router(s.routing.kind, s.routing.copies)
        self.cfg = ProtocolConfig(
            prit_lifetime=s.ttl, response_ttl=s.ttl, response_size=s.link.content_bytes,
            hop_limit=s.hop_limit, initial_copies=self.router.copies, relay_cache=s.cache.relay_cache)
        self.request_timeout = 2 * s.ttl

        self.catalog = Catalog(s.workload.catalog, s.workload.dist, s.workload.zipf_s)
        self.topology = _topology_cached(_topology_key(s))

        R, M, A = s.nodes.requesters, s.nodes.relays, s.nodes.caps
        self.requesters = list(range(R))
        self.caps = list(range(R + M, R + M + A))
        self.provider_id = R + M + A
        work_rng = np.random.default_rng(np.random.SeedSequence([s.seed, 2]))
        prof_rng = np.random.default_rng(np.random.SeedSequence([s.seed, 3]))
        self.profiles = draw_profiles(self.requesters, prof_rng)
        self.schedule = generate_schedule(self.catalog, self.profiles, self.requesters, s.duration,
                                          work_rng, s.workload.interval_s)

        mobile_cache = s.cache.mobile if s.mode in ("full", "dtn_user_cache") else 0
        cap_cache = 0 if self.plain else s.cache.cap
        pop = self.catalog.popularity
        self.nodes: dict[int, NodeState] = {}
        for i in range(R + M + A + 1):
            if i < R:
                kind, cap = NodeKind.REQUESTER, mobile_cache
            elif i < R + M:
                kind, cap = NodeKind.RELAY, mobile_cache
            elif i < R + M + A:
                kind, cap = NodeKind.CAP, cap_cache
            else:
                kind, cap = NodeKind.PROVIDER, 0
            cost = self._cost_fn(kind, self.profiles.get(i), pop)
            node = NodeState(i, kind, ContentStore(cap, s.cache.policy, cost))
            node.buffer = Buffer(s.routing.buffer)
            if kind is NodeKind.CAP and not self.plain:
                node.fib = set(range(1, self.catalog.size + 1))
            self.nodes[i] = node

        self.links: dict[tuple[int, int], Link] = {}
        self.adj: dict[int, set[int]] = defaultdict(set)
        self.pending: dict[tuple[int, int], list[tuple[str, float]]] = defaultdict(list)
        self.trace: list[dict] = []
        self.now = 0.0
        self._heap: list = []
        self._seq = itertools.count()
        self._req_seq = itertools.count()
        self.processed = 0

    def _cost_fn(self, kind: NodeKind, profile, pop):
        # est_time: rough refetch time per node class
        if kind is NodeKind.CAP:
            est, affinity = self.s.core_latency + self.s.link.content_bytes * 8 / self.s.link.mobile_rate, 1.0
        else:
            est, affinity = self.s.ttl, (profile.u if profile else 0.5)
        return lambda c: est * (1.0 - float(pop[c - 1]) * affinity)

    # event plumbing

    def _push(self, t: float, kind: str, payload=None) -> None:
        heapq.heappush(self._heap, (t, PRIORITY[kind], next(self._seq), kind, payload))

    def _record(self, kind: str, node=None, msg=None, **detail) -> None:
        self.trace.append({"t": self.now, "kind": kind, "node": node, "msg": msg, "detail": detail})

    def kind_of(self, node_id: Optional[int]) -> Optional[str]:
        return None if node_id is None else self.nodes[node_id].kind.value

    # main loop

    def run(self) -> tuple[metrics.MetricsReport, list[dict]]:
        s = self.s
        if s.duration > 0:
            for ev in self.topology.contacts:
                # topology indexes mobiles then CAPs, matching node ids
                self._push(ev.start, "ContactUp", (ev.a, ev.b))
                self._push(ev.end, "ContactDown", (ev.a, ev.b))
            for req in self.schedule:
                self._push(req.time, "InterestBorn", req)
            t = s.tick
            while t < s.duration:
                self._push(t, "TtlTick")
                t += s.tick
        self._push(s.duration, "RunEnd")
        last = -math.inf
        while self._heap:
            t, _, _, kind, payload = heapq.heappop(self._heap)
            if t < last:
                raise RuntimeError("event time went backwards")
            last = self.now = t
            self.processed += 1
            if kind == "RunEnd":
                self._record("run_end", detail_events=self.processed)
                break
            getattr(self, f"_on_{kind}")(payload)
        report = metrics.aggregate(self.trace, s.warmup)
        return report, self.trace

    # contacts and transfers

    def _on_ContactUp(self, pair):
        a, b = pair
        link = Link(a, b, self.now)
        self.links[pair] = link
        self.adj[a].add(b)
        self.adj[b].add(a)
        self._pump(link)

    def _on_ContactDown(self, pair):
        link = self.links.pop(pair, None)
        if link is None:
            return
        self.adj[pair[0]].discard(pair[1])
        self.adj[pair[1]].discard(pair[0])
        if link.busy is not None:
            if self.full_trace:
                self._record("abort", link.busy.src, link.busy.msg_id, to=link.busy.dst)
            link.busy = None

    def _rate(self, a: int, b: int) -> float:
        def speed(n):
            return self.s.link.cap_rate if self.nodes[n].kind is NodeKind.CAP else self.s.link.mobile_rate
        return min(speed(a), speed(b))

    def _start(self, link: Link, msg: Message, src: int, dst: int, via: Via) -> None:
        rate = self._rate(src, dst)
        job = TransferJob(msg.msg_id, src, dst, msg.size, rate, self.now,
                          self.now + msg.size * 8 / rate, via, msg if via is Via.CCN else None)
        link.busy = job
        self._push(job.eta, "TransferDone", (link.a, link.b, job))

    def _pump(self, link: Link) -> None:
        if link.busy is not None or (link.a, link.b) not in self.links:
            return
        while link.ccn:
            msg, src, dst = link.ccn.popleft()
            if not msg.expired(self.now):
                self._start(link, msg, src, dst, Via.CCN)
                return
        picks = select_transfers(self.router, self.nodes[link.a], self.nodes[link.b], self.now, link.sent)
        if not picks:
            return
        msg_id, direction = picks[0]
        src, dst = (link.a, link.b) if direction == "ab" else (link.b, link.a)
        self._start(link, self.nodes[src].buffer.get(msg_id), src, dst, Via.DTN)

    def _touch(self, node_id: int) -> None:
        for peer in sorted(self.adj[node_id]):
            link = self.links.get((min(node_id, peer), max(node_id, peer)))
            if link is not None:
                self._pump(link)

    def _on_TransferDone(self, payload):
        a, b, job = payload
        link = self.links.get((a, b))
        if link is None or link.busy is not job:
            return
        link.busy = None
        link.sent.add(job.msg_id)
        receiver = self.nodes[job.dst]
        if job.via is Via.CCN:
            msg = job.payload
            if self.full_trace:
                self._record("transfer", job.src, job.msg_id, to=job.dst, via="ccn")
            if not msg.expired(self.now) and msg.msg_id not in receiver.consumed:
                receiver.consumed[msg.msg_id] = msg.expiry
                self._receive(receiver, msg, Via.CCN, job.src)
        else:
            sender = self.nodes[job.src]
            msg = sender.buffer.get(job.msg_id)
            if msg is not None and not msg.expired(self.now):
                copy = on_transfer_complete(self.router, sender, receiver, job.msg_id, store=False)
                if self.full_trace:
                    self._record("transfer", job.src, job.msg_id, to=job.dst, via="dtn")
                self._receive(receiver, copy, Via.DTN, job.src)
        self._pump(link)
        self._touch(job.dst)

    # message handling

    def _receive(self, node: NodeState, msg: Message, via: Via, sender: Optional[int]) -> None:
        if self.plain:
            self._receive_plain(node, msg, sender)
            return
        if isinstance(msg, InterestMessage):
            actions = process_interest(node, msg, via, self.now, self.cfg)
        else:
            actions = process_response(node, msg, via, self.now, self.cfg)
        rebuffered = any(
            (isinstance(a, ForwardInterest) and a.next != TOWARD_FIB and a.interest.msg_id == msg.msg_id)
            or (isinstance(a, SendResponse) and a.response.msg_id == msg.msg_id)
            for a in actions)
        dropped = any(isinstance(a, Drop) for a in actions)
        final = isinstance(msg, ResponseMessage) and msg.destination == node.id
        if not rebuffered and (final or not dropped):
            node.consumed[msg.msg_id] = msg.expiry
        self._apply(node, msg, actions, sender)

    def _apply(self, node: NodeState, msg: Optional[Message], actions, sender: Optional[int]) -> None:
        changed = False
        for act in actions:
            if isinstance(act, DeliverToApp):
                self._deliver(node, act.content, msg, sender)
            elif isinstance(act, SendResponse):
                resp = act.response
                if msg is None or resp.msg_id != msg.msg_id:
                    self._record("respond", node.id, resp.msg_id, content=resp.content, dest=resp.destination,
                                 provider=resp.provider, extras=list(resp.extra_requesters))
                self._buffer(node, resp)
                changed = True
            elif isinstance(act, ForwardInterest):
                if act.next == TOWARD_FIB:
                    if not act.aggregated:
                        self._push(self.now + self.s.core_latency, "CoreDone", (node.id, act.interest.content, None))
                else:
                    self._buffer(node, act.interest)
                    changed = True
            elif isinstance(act, Drop):
                self._record("drop", node.id, act.msg_id, reason=act.reason.value)
            elif isinstance(act, CacheAdmit):
                self._admit(node, act.content, msg)
        if changed:
            self._touch(node.id)

    def _buffer(self, node: NodeState, msg: Message) -> None:
        for old in node.buffer.add(msg):
            self._record("drop", node.id, old.msg_id, reason=BUFFER_OVERFLOW)

    def _admit(self, node: NodeState, c: int, msg: Optional[Message]) -> None:
        node.content_store.admit(c, self.now)
        if c not in node.content_store and node.content_store.capacity > 0:
            self._record("drop", node.id, msg.msg_id if msg else None, reason=DropReason.CACHE_FULL.value)

    def _deliver(self, node: NodeState, c: int, msg: Optional[Message], sender: Optional[int]) -> None:
        reqs = self.pending.pop((node.id, c), None)
        if not reqs:
            if isinstance(msg, ResponseMessage) and msg.destination == node.id:
                self._record("dup_delivery", node.id, msg.msg_id, content=c)
            return
        provider = msg.provider if isinstance(msg, ResponseMessage) else node.id
        for req_id, born in reqs:
            path = metrics.classify_delivery(self.kind_of(provider), self.kind_of(sender))
            self._record("deliver", node.id, req_id, content=c, born=born, delay=self.now - born,
                         provider=provider, provider_kind=self.kind_of(provider),
                         last_hop=sender, last_hop_kind=self.kind_of(sender), path=path,
                         response=msg.msg_id if msg is not None else None)

    def _associated_cap(self, m: int) -> Optional[int]:
        best = None
        for peer in self.adj[m]:
            if self.nodes[peer].kind is NodeKind.CAP:
                link = self.links[(min(m, peer), max(m, peer))]
                key = (link.up_since, peer)
                if best is None or key < best[0]:
                    best = (key, peer)
        return None if best is None else best[1]

    def _on_InterestBorn(self, req: Request):
        m, c = req.requester, req.content
        req_id = f"i{next(self._req_seq)}"
        self._record("born", m, req_id, content=c)
        self.pending[(m, c)].append((req_id, self.now))
        node = self.nodes[m]
        msg = InterestMessage(req_id, c, m, self.now, self.s.ttl, self.router.copies, (),
                              size=self.s.link.interest_bytes)
        if self.plain:
            if node.content_store.lookup(c, self.now):
                self._deliver(node, c, None, None)
                return
            self._buffer(node, InterestMessage(req_id, c, m, self.now, self.s.ttl, self.router.copies, (m,),
                                               size=self.s.link.interest_bytes))
            self._touch(m)
            return
        actions = process_interest(node, msg, Via.DTN, self.now, self.cfg)
        forwards = [a for a in actions if isinstance(a, ForwardInterest)]
        cap = self._associated_cap(m) if forwards else None
        if cap is not None:
            # queued before the DTN copy is buffered so the CCN path goes first
            link = self.links[(min(m, cap), max(m, cap))]
            link.ccn.append((forwards[0].interest, m, cap))
        self._apply(node, None, actions, None)
        if cap is not None:
            self._pump(link)

    def _on_CoreDone(self, payload):
        cap_id, c, requester = payload
        cap = self.nodes[cap_id]
        provider = self.nodes[self.provider_id]
        self._record("fetch", cap_id, None, content=c, provider=self.provider_id)
        if self.plain:
            resp = ResponseMessage(provider.next_msg_id(), c, requester, self.provider_id, self.now, self.s.ttl,
                                   size=self.s.link.content_bytes, copies_remaining=self.router.copies,
                                   hop_trace=(self.provider_id, cap_id))
            self._record("respond", cap_id, resp.msg_id, content=c, dest=requester, provider=self.provider_id,
                         extras=[])
            self._buffer(cap, resp)
            self._touch(cap_id)
            return
        resp = ResponseMessage(provider.next_msg_id(), c, cap_id, self.provider_id, self.now, self.s.ttl,
                               size=self.s.link.content_bytes, copies_remaining=self.router.copies,
                               hop_trace=(self.provider_id,))
        actions = process_response(cap, resp, Via.CCN, self.now, self.cfg)
        self._apply(cap, resp, actions, self.provider_id)

    def _on_TtlTick(self, _):
        for node in self.nodes.values():
            expire_tables(node, self.now)
            for old in node.buffer.purge_expired(self.now):
                self._record("drop", node.id, old.msg_id, reason=DropReason.TTL_EXPIRED.value)
            if node.consumed:
                node.consumed = {k: v for k, v in node.consumed.items() if v > self.now}
        for key in sorted(self.pending):
            reqs = self.pending[key]
            keep = []
            for req_id, born in reqs:
                if born + self.request_timeout <= self.now:
                    self._record("unserved", key[0], req_id, content=key[1], born=born)
                else:
                    keep.append((req_id, born))
            if keep:
                self.pending[key] = keep
            else:
                del self.pending[key]

    # request-response application without CCN tables

    def _receive_plain(self, node: NodeState, msg: Message, sender: Optional[int]) -> None:
        c = msg.content
        if isinstance(msg, InterestMessage):
            if node.kind is NodeKind.CAP:
                node.consumed[msg.msg_id] = msg.expiry
                self._push(self.now + self.s.core_latency, "CoreDone", (node.id, c, msg.requester))
                return
            if node.id != msg.requester and node.content_store.lookup(c, self.now):
                node.consumed[msg.msg_id] = msg.expiry
                resp = ResponseMessage(node.next_msg_id(), c, msg.requester, node.id, self.now, self.s.ttl,
                                       size=self.s.link.content_bytes, copies_remaining=self.router.copies,
                                       hop_trace=(node.id,))
                self._record("respond", node.id, resp.msg_id, content=c, dest=msg.requester, provider=node.id,
                             extras=[])
                self._buffer(node, resp)
                self._touch(node.id)
                return
            self._buffer(node, replace(msg, hop_trace=msg.hop_trace + (node.id,)))
            self._touch(node.id)
            return
        if node.content_store.capacity > 0 and (node.id == msg.destination or self.s.cache.relay_cache):
            self._admit(node, c, msg)
        if node.id == msg.destination:
            node.consumed[msg.msg_id] = msg.expiry
            self._deliver(node, c, msg, sender)
            return
        self._buffer(node, replace(msg, hop_trace=msg.hop_trace + (node.id,)))
        self._touch(node.id)


def run(scenario: Scenario, full_trace: bool = False) -> tuple[metrics.MetricsReport, list[dict]]:
    """Simulate ``scenario``; returns the metrics report and the event trace."""
    return Simulation(scenario, full_trace).run()


def write_trace(trace: list[dict], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for rec in trace:
            fh.write(json.dumps(rec, sort_keys=True, separators=(",", ":")) + "\n")
