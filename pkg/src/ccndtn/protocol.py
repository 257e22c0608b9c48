"""Node-level CCN-over-DTN processing of Interest and Response messages.

Mobile nodes keep requester identities (PRIT) instead of arrival faces, and
remember who satisfied past requests (SRIT). CAPs additionally run the native
CCN tables (PIT, FIB) towards the fixed core network.

Node ids are plain integers and contents are 1-based catalog indices.
"""
from __future__ import annotations

import itertools
from collections import OrderedDict
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional, Union

from .tables import ContentStore


class NodeKind(str, Enum):
    REQUESTER = "requester"
    RELAY = "relay"
    CAP = "cap"
    PROVIDER = "provider"

    @property
    def mobile(self) -> bool:
        return self in (NodeKind.REQUESTER, NodeKind.RELAY)


class Via(str, Enum):
    DTN = "dtn"
    CCN = "ccn"


class DropReason(str, Enum):
    DUPLICATE_REQUESTER = "DuplicateRequester"
    TTL_EXPIRED = "TtlExpired"
    NO_PENDING_REQUESTER = "NoPendingRequester"
    LOOP_DETECTED = "LoopDetected"
    CACHE_FULL = "CacheFull"


BROADCAST = "broadcast"
TOWARD_FIB = "fib"


@dataclass(frozen=True)
class InterestMessage:
    msg_id: str
    content: int
    requester: int
    creation_time: float
    ttl: float
    copies_remaining: int = 1
    hop_trace: tuple[int, ...] = ()
    # SRIT hint: nodes believed to hold the content
    targets: tuple[int, ...] = ()
    size: int = 1000

    @property
    def expiry(self) -> float:
        return self.creation_time + self.ttl

    def expired(self, now: float) -> bool:
        return now >= self.expiry


@dataclass(frozen=True)
class ResponseMessage:
    msg_id: str
    content: int
    destination: int
    provider: int
    creation_time: float
    ttl: float
    extra_requesters: tuple[int, ...] = ()
    size: int = 1_000_000
    copies_remaining: int = 1
    hop_trace: tuple[int, ...] = ()

    @property
    def expiry(self) -> float:
        return self.creation_time + self.ttl

    def expired(self, now: float) -> bool:
        return now >= self.expiry


Message = Union[InterestMessage, ResponseMessage]


@dataclass(frozen=True)
class TowardSRIT:
    providers: tuple[int, ...]


@dataclass(frozen=True)
class DeliverToApp:
    content: int


@dataclass(frozen=True)
class SendResponse:
    response: ResponseMessage
    next: Union[int, str]


@dataclass(frozen=True)
class ForwardInterest:
    interest: InterestMessage
    next: Union[int, str, TowardSRIT]
    # CAP already has a core fetch outstanding for this content
    aggregated: bool = False


@dataclass(frozen=True)
class Drop:
    msg_id: str
    reason: DropReason


@dataclass(frozen=True)
class CacheAdmit:
    content: int


ProtocolAction = Union[DeliverToApp, SendResponse, ForwardInterest, Drop, CacheAdmit]


@dataclass
class PRITEntry:
    content: int
    requesters: set[int]
    inserted_at: float
    expiry: float


class PRIT:
    """Pending requester table: content -> requester ids."""

    def __init__(self):
        self.entries: dict[int, PRITEntry] = {}

    def __contains__(self, c: int) -> bool:
        return c in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    def get(self, c: int) -> Optional[PRITEntry]:
        return self.entries.get(c)

    def requesters(self, c: int) -> set[int]:
        entry = self.entries.get(c)
        return set(entry.requesters) if entry else set()

    def add(self, c: int, requester: int, now: float, lifetime: float) -> None:
        entry = self.entries.get(c)
        if entry is None:
            self.entries[c] = PRITEntry(c, {requester}, now, now + lifetime)
        else:
            entry.requesters.add(requester)

    def pop(self, c: int) -> set[int]:
        entry = self.entries.pop(c, None)
        return entry.requesters if entry else set()

    def expire(self, now: float) -> int:
        stale = [c for c, e in self.entries.items() if e.expiry <= now]
        for c in stale:
            del self.entries[c]
        return len(stale)


class SRIT:
    """Satisfied request table, bounded and LRU-evicted.

    Providers per content are kept most-recent first.
    """

    def __init__(self, max_entries: int = 20, max_providers: int = 3):
        self.max_entries = max_entries
        self.max_providers = max_providers
        self.entries: OrderedDict[int, list[tuple[int, float]]] = OrderedDict()

    def __contains__(self, c: int) -> bool:
        return c in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    def insert(self, c: int, provider: int, now: float) -> None:
        providers = [(p, t) for p, t in self.entries.pop(c, []) if p != provider]
        providers.insert(0, (provider, now))
        self.entries[c] = providers[: self.max_providers]
        self.prune()

    def lookup(self, c: int, exclude: tuple[int, ...] = ()) -> tuple[int, ...]:
        providers = self.entries.get(c)
        if not providers:
            return ()
        self.entries.move_to_end(c)
        ranked = sorted(providers, key=lambda pt: (-pt[1], pt[0]))
        return tuple(p for p, _ in ranked if p not in exclude)

    def prune(self) -> int:
        removed = 0
        while len(self.entries) > self.max_entries:
            self.entries.popitem(last=False)
            removed += 1
        return removed


@dataclass
class PITEntry:
    faces: set[int]
    expiry: float


@dataclass
class NodeState:
    id: int
    kind: NodeKind
    content_store: ContentStore
    prit: PRIT = field(default_factory=PRIT)
    srit: SRIT = field(default_factory=SRIT)
    pit: dict[int, PITEntry] = field(default_factory=dict)
    fib: set[int] = field(default_factory=set)
    # contents with a core fetch in flight (CAP only)
    fetching: set[int] = field(default_factory=set)
    buffer: object = None
    # msg_id -> expiry of messages this node was the final recipient of
    consumed: dict[str, float] = field(default_factory=dict)
    _seq: itertools.count = field(default_factory=itertools.count, repr=False)

    @property
    def mobile(self) -> bool:
        return self.kind.mobile

    def next_msg_id(self, prefix: str = "r") -> str:
        return f"{prefix}{self.id}.{next(self._seq)}"


@dataclass(frozen=True)
class ProtocolConfig:
    prit_lifetime: float = 500.0
    response_ttl: float = 500.0
    response_size: int = 1_000_000
    hop_limit: int = 16
    # copies stamped on newly created responses (routing-owned)
    initial_copies: int = 1
    relay_cache: bool = False


DEFAULT_CONFIG = ProtocolConfig()


def _new_response(node: NodeState, content: int, dest: int, provider: int, now: float,
                  cfg: ProtocolConfig, extras=(), trace=()) -> ResponseMessage:
    return ResponseMessage(
        msg_id=node.next_msg_id(),
        content=content,
        destination=dest,
        provider=provider,
        creation_time=now,
        ttl=cfg.response_ttl,
        extra_requesters=tuple(sorted(extras)),
        size=cfg.response_size,
        copies_remaining=cfg.initial_copies,
        hop_trace=tuple(trace) + (node.id,),
    )


def _pending_branch(node: NodeState, msg: InterestMessage, now: float, cfg: ProtocolConfig,
                    forwarded: InterestMessage) -> list[ProtocolAction]:
    # SRIT first, then PRIT aggregation
    providers = node.srit.lookup(msg.content, exclude=(node.id, msg.requester))
    if providers:
        node.prit.add(msg.content, msg.requester, now, cfg.prit_lifetime)
        steered = replace(forwarded, targets=providers)
        return [ForwardInterest(steered, TowardSRIT(providers))]
    if msg.requester in node.prit.requesters(msg.content):
        return [Drop(msg.msg_id, DropReason.DUPLICATE_REQUESTER)]
    node.prit.add(msg.content, msg.requester, now, cfg.prit_lifetime)
    return [ForwardInterest(forwarded, BROADCAST)]


def process_interest(node: NodeState, msg: InterestMessage, arrived_via: Via | str, now: float,
                     cfg: ProtocolConfig = DEFAULT_CONFIG) -> list[ProtocolAction]:
    """Handle an inbound Interest and return the resulting actions.

    Order of checks: TTL, loop/hop limit, Content Store, then the mobile
    (SRIT -> PRIT) or CAP (FIB -> SRIT -> PRIT) miss handling.
    """
    via = Via(arrived_via)
    if msg.expired(now):
        return [Drop(msg.msg_id, DropReason.TTL_EXPIRED)]
    if node.id in msg.hop_trace:
        return [Drop(msg.msg_id, DropReason.LOOP_DETECTED)]
    if len(msg.hop_trace) >= cfg.hop_limit:
        return [Drop(msg.msg_id, DropReason.LOOP_DETECTED)]

    c = msg.content
    if node.content_store.lookup(c, now):
        if node.id == msg.requester:
            return [DeliverToApp(c)]
        # mobile: addressed to the requester from the Interest (PRIT semantics);
        # CAP: back along the face the Interest came in on
        resp = _new_response(node, c, msg.requester, node.id, now, cfg)
        return [SendResponse(resp, msg.requester)]

    forwarded = replace(msg, hop_trace=msg.hop_trace + (node.id,))
    if node.mobile:
        return _pending_branch(node, msg, now, cfg, forwarded)

    if node.kind is NodeKind.CAP:
        if c in node.fib:
            if via is Via.CCN:
                entry = node.pit.get(c)
                if entry is not None and msg.requester in entry.faces:
                    return [Drop(msg.msg_id, DropReason.DUPLICATE_REQUESTER)]
                if entry is None:
                    node.pit[c] = PITEntry({msg.requester}, now + cfg.prit_lifetime)
                else:
                    entry.faces.add(msg.requester)
            else:
                if msg.requester in node.prit.requesters(c):
                    return [Drop(msg.msg_id, DropReason.DUPLICATE_REQUESTER)]
                node.prit.add(c, msg.requester, now, cfg.prit_lifetime)
            aggregated = c in node.fetching
            node.fetching.add(c)
            return [ForwardInterest(forwarded, TOWARD_FIB, aggregated=aggregated)]
        return _pending_branch(node, msg, now, cfg, forwarded)

    raise ValueError(f"node {node.id} of kind {node.kind.value} does not process Interests")


def _readdress(node: NodeState, msg: ResponseMessage, pending: set[int], now: float,
               cfg: ProtocolConfig) -> list[ProtocolAction]:
    new_dest = min(pending)
    resp = _new_response(node, msg.content, new_dest, msg.provider, now, cfg,
                         extras=pending - {new_dest}, trace=msg.hop_trace)
    return [SendResponse(resp, new_dest)]


def process_response(node: NodeState, msg: ResponseMessage, arrived_via: Via | str, now: float,
                     cfg: ProtocolConfig = DEFAULT_CONFIG) -> list[ProtocolAction]:
    """Handle an inbound Response and return the resulting actions."""
    via = Via(arrived_via)
    if msg.expired(now):
        return [Drop(msg.msg_id, DropReason.TTL_EXPIRED)]
    c = msg.content

    if node.mobile:
        node.srit.insert(c, msg.provider, now)
        actions: list[ProtocolAction] = []
        if node.id == msg.destination:
            actions.append(DeliverToApp(c))
            if node.content_store.capacity > 0 and c not in node.content_store:
                actions.append(CacheAdmit(c))
            pending = set(msg.extra_requesters) | node.prit.pop(c)
            pending.discard(node.id)
            if not pending:
                actions.append(Drop(msg.msg_id, DropReason.NO_PENDING_REQUESTER))
                return actions
            return actions + _readdress(node, msg, pending, now, cfg)

        extras = set(msg.extra_requesters) | node.prit.pop(c)
        if node.id in extras:
            actions.append(DeliverToApp(c))
            extras.discard(node.id)
        extras.discard(msg.destination)
        if cfg.relay_cache and node.content_store.capacity > 0 and c not in node.content_store:
            actions.append(CacheAdmit(c))
        fwd = replace(msg, extra_requesters=tuple(sorted(extras)),
                      hop_trace=msg.hop_trace + (node.id,))
        actions.append(SendResponse(fwd, msg.destination))
        return actions

    if node.kind is NodeKind.CAP:
        if via is Via.DTN:
            node.srit.insert(c, msg.provider, now)
        entry = node.pit.pop(c, None)
        pending = (entry.faces if entry else set()) | node.prit.pop(c)
        if via is Via.CCN:
            node.fetching.discard(c)
        actions = []
        if node.content_store.capacity > 0:
            actions.append(CacheAdmit(c))
        if via is Via.DTN and msg.destination != node.id:
            # carried device response: relay it onward like a mobile intermediate
            extras = (set(msg.extra_requesters) | pending) - {msg.destination}
            fwd = replace(msg, extra_requesters=tuple(sorted(extras)),
                          hop_trace=msg.hop_trace + (node.id,))
            actions.append(SendResponse(fwd, msg.destination))
            return actions
        if not pending:
            actions.append(Drop(msg.msg_id, DropReason.NO_PENDING_REQUESTER))
            return actions
        for r in sorted(pending):
            actions.append(SendResponse(_new_response(node, c, r, msg.provider, now, cfg,
                                                      trace=msg.hop_trace), r))
        return actions

    raise ValueError(f"node {node.id} of kind {node.kind.value} does not process Responses")


def expire_tables(node: NodeState, now: float) -> int:
    """Purge expired PRIT/PIT entries and trim the SRIT; returns the count removed."""
    purged = node.prit.expire(now)
    stale = [c for c, e in node.pit.items() if e.expiry <= now]
    for c in stale:
        del node.pit[c]
        node.fetching.discard(c)
    purged += len(stale)
    purged += node.srit.prune()
    return purged
