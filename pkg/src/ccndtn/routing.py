"""Store-carry-forward routers deciding what moves across a contact."""
from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass, replace
from enum import Enum
from typing import Iterable, Optional

from .protocol import InterestMessage, Message, NodeKind, NodeState, ResponseMessage


class RouterKind(str, Enum):
    EPIDEMIC = "epidemic"
    SPRAY_AND_WAIT = "snw"
    FIRST_CONTACT = "firstcontact"
    HYBRID = "hybrid"


@dataclass(frozen=True)
class Router:
    kind: RouterKind = RouterKind.EPIDEMIC
    initial_copies: int = 10

    def __post_init__(self):
        object.__setattr__(self, "kind", RouterKind(self.kind))
        if self.initial_copies < 1:
            raise ValueError("initial_copies must be >= 1")

    @property
    def copies(self) -> int:
        """Copies stamped on a freshly created message."""
        if self.kind in (RouterKind.SPRAY_AND_WAIT, RouterKind.HYBRID):
            return self.initial_copies
        return 1


class Buffer:
    """Insertion-ordered message buffer; overflow drops the oldest entry."""

    def __init__(self, capacity: int = 200):
        self.capacity = capacity
        self._msgs: OrderedDict[str, Message] = OrderedDict()

    def __contains__(self, msg_id: str) -> bool:
        return msg_id in self._msgs

    def __len__(self) -> int:
        return len(self._msgs)

    def __iter__(self):
        return iter(self._msgs.values())

    def get(self, msg_id: str) -> Optional[Message]:
        return self._msgs.get(msg_id)

    def add(self, msg: Message) -> list[Message]:
        if msg.msg_id in self._msgs:
            self._msgs[msg.msg_id] = msg
            return []
        self._msgs[msg.msg_id] = msg
        dropped = []
        while len(self._msgs) > self.capacity:
            _, old = self._msgs.popitem(last=False)
            dropped.append(old)
        return dropped

    def replace(self, msg: Message) -> None:
        self._msgs[msg.msg_id] = msg

    def remove(self, msg_id: str) -> Optional[Message]:
        return self._msgs.pop(msg_id, None)

    def ids(self) -> set[str]:
        return set(self._msgs)

    def purge_expired(self, now: float) -> list[Message]:
        stale = [m for m in self._msgs.values() if m.expired(now)]
        for m in stale:
            del self._msgs[m.msg_id]
        return stale


def is_destination(msg: Message, peer: NodeState) -> bool:
    """Whether handing ``msg`` to ``peer`` counts as direct delivery."""
    if isinstance(msg, ResponseMessage):
        return peer.id == msg.destination or peer.id in msg.extra_requesters
    return (peer.kind is NodeKind.CAP or msg.content in peer.content_store
            or peer.id in msg.targets)


def _eligible(msg: Message, peer: NodeState, now: float, exclude: Iterable[str]) -> bool:
    if msg.expired(now) or msg.msg_id in exclude:
        return False
    if msg.msg_id in peer.buffer or msg.msg_id in peer.consumed:
        return False
    return True


def _wants(router: Router, msg: Message, peer: NodeState) -> bool:
    kind = router.kind
    if kind in (RouterKind.EPIDEMIC, RouterKind.FIRST_CONTACT):
        return True
    if msg.copies_remaining > 1:
        return True
    if kind is RouterKind.HYBRID and isinstance(msg, InterestMessage):
        # last Interest copy keeps moving instead of waiting
        return True
    return is_destination(msg, peer)


def select_transfers(router: Router, a: NodeState, b: NodeState, now: float,
                     exclude: Iterable[str] = ()) -> list[tuple[str, str]]:
    """Messages to move between ``a`` and ``b``, as ``(msg_id, "ab"|"ba")``.

    Deliverable messages go first, then oldest creation time.
    """
    exclude = set(exclude)
    picks = []
    for sender, receiver, direction in ((a, b, "ab"), (b, a, "ba")):
        for msg in sender.buffer:
            if not _eligible(msg, receiver, now, exclude):
                continue
            if not _wants(router, msg, receiver):
                continue
            dest = is_destination(msg, receiver)
            picks.append((not dest, msg.creation_time, msg.msg_id, direction))
    picks.sort()
    return [(msg_id, direction) for _, _, msg_id, direction in picks]


def split_copies(router: Router, msg: Message) -> tuple[int, int]:
    """(sender keeps, receiver gets) for a completed transfer."""
    n = msg.copies_remaining
    if router.kind is RouterKind.EPIDEMIC:
        return n, n
    if router.kind is RouterKind.FIRST_CONTACT:
        return 0, n
    if n > 1:
        give = n // 2
        return n - give, give
    return 0, 1


def on_transfer_complete(router: Router, sender: NodeState, receiver: NodeState, msg_id: str,
                         store: bool = True) -> Message:
    """Apply copy accounting for a finished transfer and return the receiver's copy.

    With ``store=False`` the caller decides whether the copy enters the
    receiver's buffer (the engine lets the protocol decide).
    """
    msg = sender.buffer.get(msg_id)
    if msg is None:
        raise KeyError(f"{msg_id} not buffered at node {sender.id}")
    keep, give = split_copies(router, msg)
    if keep == 0:
        sender.buffer.remove(msg_id)
    else:
        sender.buffer.replace(replace(msg, copies_remaining=keep))
    copy = replace(msg, copies_remaining=give)
    if store:
        receiver.buffer.add(copy)
    return copy
