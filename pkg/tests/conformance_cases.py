"""Hand-constructed (node state, message) cases for Interest and Response processing.

Every expectation below was traced by hand from the processing rules; none is
produced by running the code under test.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Optional

from ccndtn.protocol import (CacheAdmit, DeliverToApp, Drop, ForwardInterest, InterestMessage, NodeKind,
                             NodeState, ProtocolConfig, ResponseMessage, SendResponse, TowardSRIT, Via,
                             PITEntry)
from ccndtn.tables import ContentStore

CFG = ProtocolConfig()
CFG_RELAY_CACHE = ProtocolConfig(relay_cache=True)


def make_node(node_id=5, kind="relay", cs=(), capacity=10, prit=None, srit=None, pit=None, fib=(),
              fetching=()) -> NodeState:
    node = NodeState(node_id, NodeKind(kind), ContentStore(capacity))
    for c in cs:
        node.content_store.admit(c, 0.0)
    for c, reqs in (prit or {}).items():
        for r in reqs:
            node.prit.add(c, r, 0.0, 500.0)
    # srit: content -> [(provider, time)], inserted oldest first
    for c, provs in (srit or {}).items():
        for p, t in provs:
            node.srit.insert(c, p, t)
    for c, faces in (pit or {}).items():
        node.pit[c] = PITEntry(set(faces), 500.0)
    node.fib = set(fib)
    node.fetching = set(fetching)
    return node


def interest(c=2, req=1, hops=(), t0=0.0, ttl=500.0, msg_id="i1", targets=()):
    return InterestMessage(msg_id, c, req, t0, ttl, 1, tuple(hops), tuple(targets))


def response(c=2, dest=1, provider=9, extras=(), t0=0.0, ttl=500.0, msg_id="r9.0", hops=(9,)):
    return ResponseMessage(msg_id, c, dest, provider, t0, ttl, tuple(extras), hop_trace=tuple(hops))


def summarize(actions) -> list[tuple]:
    out = []
    for a in actions:
        if isinstance(a, DeliverToApp):
            out.append(("deliver", a.content))
        elif isinstance(a, Drop):
            out.append(("drop", a.reason.value))
        elif isinstance(a, CacheAdmit):
            out.append(("admit", a.content))
        elif isinstance(a, SendResponse):
            r = a.response
            out.append(("response", r.msg_id, r.content, r.destination, r.provider, r.extra_requesters,
                         r.hop_trace, a.next))
        elif isinstance(a, ForwardInterest):
            nxt = ("srit", a.next.providers) if isinstance(a.next, TowardSRIT) else a.next
            i = a.interest
            out.append(("interest", i.msg_id, nxt, i.targets, i.hop_trace, a.aggregated))
        else:  # pragma: no cover
            raise TypeError(a)
    return out


def snapshot(node: NodeState) -> dict:
    return {
        "prit": {c: sorted(e.requesters) for c, e in sorted(node.prit.entries.items())},
        "pit": {c: sorted(e.faces) for c, e in sorted(node.pit.items())},
        "srit": {c: [p for p, _ in ps] for c, ps in sorted(node.srit.entries.items())},
        "fetching": sorted(node.fetching),
        "cs": sorted(node.content_store.entries),
    }


@dataclass
class Case:
    name: str
    node: Callable[[], NodeState]
    msg: Any
    expected: list
    # expected table state after processing; keys not listed must be unchanged
    tables: dict = field(default_factory=dict)
    via: Via = Via.DTN
    now: float = 10.0
    cfg: ProtocolConfig = CFG
    raises: Optional[type] = None


INTEREST_CASES = [
    Case("ttl expired", lambda: make_node(), interest(t0=0, ttl=5), [("drop", "TtlExpired")]),
    Case("expiry instant counts as expired", lambda: make_node(), interest(t0=0, ttl=10),
         [("drop", "TtlExpired")]),
    Case("node already on hop trace", lambda: make_node(5), interest(hops=(1, 5, 7)),
         [("drop", "LoopDetected")]),
    Case("hop limit reached", lambda: make_node(5), interest(hops=tuple(range(100, 116))),
         [("drop", "LoopDetected")]),
    Case("one hop below limit forwards", lambda: make_node(5), interest(hops=tuple(range(100, 115))),
         [("interest", "i1", "broadcast", (), tuple(range(100, 115)) + (5,), False)],
         {"prit": {2: [1]}}),
    Case("relay cache hit answers requester", lambda: make_node(5, cs=(2,), prit={2: [3]}),
         interest(c=2, req=1),
         [("response", "r5.0", 2, 1, 5, (), (5,), 1)]),
    Case("requester own cache hit", lambda: make_node(1, "requester", cs=(2,)), interest(c=2, req=1),
         [("deliver", 2)]),
    Case("mobile miss with empty tables", lambda: make_node(5), interest(c=2, req=1),
         [("interest", "i1", "broadcast", (), (5,), False)], {"prit": {2: [1]}}),
    Case("same requester already pending", lambda: make_node(5, prit={2: [1]}), interest(c=2, req=1),
         [("drop", "DuplicateRequester")]),
    Case("other requester pending aggregates", lambda: make_node(5, prit={2: [3]}), interest(c=2, req=1),
         [("interest", "i1", "broadcast", (), (5,), False)], {"prit": {2: [1, 3]}}),
    Case("srit provider steers interest", lambda: make_node(5, srit={2: [(7, 1.0)]}), interest(c=2, req=1),
         [("interest", "i1", ("srit", (7,)), (7,), (5,), False)], {"prit": {2: [1]}}),
    Case("srit entries naming only self and requester are ignored",
         lambda: make_node(5, srit={2: [(1, 1.0), (5, 2.0)]}), interest(c=2, req=1),
         [("interest", "i1", "broadcast", (), (5,), False)], {"prit": {2: [1]}}),
    Case("srit providers most recent first", lambda: make_node(5, srit={2: [(7, 1.0), (3, 2.0)]}),
         interest(c=2, req=1),
         [("interest", "i1", ("srit", (3, 7)), (3, 7), (5,), False)], {"prit": {2: [1]}}),
    Case("srit checked before duplicate requester",
         lambda: make_node(5, prit={2: [1]}, srit={2: [(7, 1.0)]}), interest(c=2, req=1),
         [("interest", "i1", ("srit", (7,)), (7,), (5,), False)]),
    Case("srit for another content does not steer", lambda: make_node(5, srit={3: [(7, 1.0)]}),
         interest(c=2, req=1),
         [("interest", "i1", "broadcast", (), (5,), False)], {"prit": {2: [1]}}),
    Case("cap via ccn, fib hit, new pit entry", lambda: make_node(20, "cap", fib=(2,)), interest(c=2, req=1),
         [("interest", "i1", "fib", (), (20,), False)], {"pit": {2: [1]}, "fetching": [2]}, via=Via.CCN),
    Case("cap via ccn joins outstanding fetch",
         lambda: make_node(20, "cap", fib=(2,), pit={2: [3]}, fetching=(2,)), interest(c=2, req=1),
         [("interest", "i1", "fib", (), (20,), True)], {"pit": {2: [1, 3]}}, via=Via.CCN),
    Case("cap via ccn duplicate face", lambda: make_node(20, "cap", fib=(2,), pit={2: [1]}, fetching=(2,)),
         interest(c=2, req=1), [("drop", "DuplicateRequester")], via=Via.CCN),
    Case("cap via dtn, fib hit, records requester", lambda: make_node(20, "cap", fib=(2,)),
         interest(c=2, req=1),
         [("interest", "i1", "fib", (), (20,), False)], {"prit": {2: [1]}, "fetching": [2]}),
    Case("cap via dtn duplicate requester", lambda: make_node(20, "cap", fib=(2,), prit={2: [1]}),
         interest(c=2, req=1), [("drop", "DuplicateRequester")]),
    Case("cap via dtn aggregated on fetch in flight",
         lambda: make_node(20, "cap", fib=(2,), prit={2: [3]}, fetching=(2,)), interest(c=2, req=1),
         [("interest", "i1", "fib", (), (20,), True)], {"prit": {2: [1, 3]}}),
    Case("cap cache hit", lambda: make_node(20, "cap", cs=(2,), fib=(2,)), interest(c=2, req=1),
         [("response", "r20.0", 2, 1, 20, (), (20,), 1)], via=Via.CCN),
    Case("cap without fib entry falls back to mobile logic", lambda: make_node(20, "cap"),
         interest(c=2, req=1),
         [("interest", "i1", "broadcast", (), (20,), False)], {"prit": {2: [1]}}),
    Case("cap without fib uses srit", lambda: make_node(20, "cap", srit={2: [(8, 1.0)]}),
         interest(c=2, req=1),
         [("interest", "i1", ("srit", (8,)), (8,), (20,), False)], {"prit": {2: [1]}}),
    Case("cap without fib duplicate requester", lambda: make_node(20, "cap", prit={2: [1]}),
         interest(c=2, req=1), [("drop", "DuplicateRequester")]),
    Case("provider does not process interests", lambda: make_node(30, "provider"), interest(),
         [], raises=ValueError),
]


RESPONSE_CASES = [
    Case("expired response", lambda: make_node(1, "requester"), response(t0=0, ttl=10),
         [("drop", "TtlExpired")]),
    Case("destination with nothing pending", lambda: make_node(1, "requester"), response(dest=1),
         [("deliver", 2), ("admit", 2), ("drop", "NoPendingRequester")], {"srit": {2: [9]}}),
    Case("destination without cache", lambda: make_node(1, "requester", capacity=0), response(dest=1),
         [("deliver", 2), ("drop", "NoPendingRequester")], {"srit": {2: [9]}}),
    Case("destination already caching content", lambda: make_node(1, "requester", cs=(2,)), response(dest=1),
         [("deliver", 2), ("drop", "NoPendingRequester")], {"srit": {2: [9]}}),
    Case("destination readdresses to pending requesters", lambda: make_node(1, "requester", prit={2: [4, 2]}),
         response(dest=1),
         [("deliver", 2), ("admit", 2), ("response", "r1.0", 2, 2, 9, (4,), (9, 1), 2)],
         {"srit": {2: [9]}, "prit": {}}),
    Case("destination merges carried extras", lambda: make_node(1, "requester", prit={2: [6]}),
         response(dest=1, extras=(3,)),
         [("deliver", 2), ("admit", 2), ("response", "r1.0", 2, 3, 9, (6,), (9, 1), 3)],
         {"srit": {2: [9]}, "prit": {}}),
    Case("destination's own pending entry is not readdressed", lambda: make_node(1, "requester", prit={2: [1]}),
         response(dest=1),
         [("deliver", 2), ("admit", 2), ("drop", "NoPendingRequester")], {"srit": {2: [9]}, "prit": {}}),
    Case("destination pending entry for other content untouched",
         lambda: make_node(1, "requester", prit={3: [4]}), response(dest=1),
         [("deliver", 2), ("admit", 2), ("drop", "NoPendingRequester")], {"srit": {2: [9]}}),
    Case("intermediate relays unchanged", lambda: make_node(5), response(dest=1),
         [("response", "r9.0", 2, 1, 9, (), (9, 5), 1)], {"srit": {2: [9]}}),
    Case("intermediate folds pending requesters", lambda: make_node(5, prit={2: [4]}), response(dest=1),
         [("response", "r9.0", 2, 1, 9, (4,), (9, 5), 1)], {"srit": {2: [9]}, "prit": {}}),
    Case("intermediate that is an extra requester", lambda: make_node(4, "requester"),
         response(dest=1, extras=(4, 6)),
         [("deliver", 2), ("response", "r9.0", 2, 1, 9, (6,), (9, 4), 1)], {"srit": {2: [9]}}),
    Case("intermediate pending entry naming destination", lambda: make_node(5, prit={2: [1, 3]}),
         response(dest=1),
         [("response", "r9.0", 2, 1, 9, (3,), (9, 5), 1)], {"srit": {2: [9]}, "prit": {}}),
    Case("intermediate relay caching when enabled", lambda: make_node(5), response(dest=1),
         [("admit", 2), ("response", "r9.0", 2, 1, 9, (), (9, 5), 1)], {"srit": {2: [9]}},
         cfg=CFG_RELAY_CACHE),
    Case("intermediate relay caching skips cached content", lambda: make_node(5, cs=(2,)), response(dest=1),
         [("response", "r9.0", 2, 1, 9, (), (9, 5), 1)], {"srit": {2: [9]}}, cfg=CFG_RELAY_CACHE),
    Case("srit keeps most recent provider first", lambda: make_node(5, srit={2: [(7, 1.0)]}),
         response(dest=1), [("response", "r9.0", 2, 1, 9, (), (9, 5), 1)], {"srit": {2: [9, 7]}}),
    Case("cap via ccn answers pit faces", lambda: make_node(20, "cap", pit={2: [3, 1]}, fetching=(2,)),
         response(dest=20, provider=30, hops=(30,), msg_id="r30.0"),
         [("admit", 2), ("response", "r20.0", 2, 1, 30, (), (30, 20), 1),
          ("response", "r20.1", 2, 3, 30, (), (30, 20), 3)],
         {"pit": {}, "fetching": []}, via=Via.CCN),
    Case("cap via ccn answers pit and prit requesters",
         lambda: make_node(20, "cap", pit={2: [1]}, prit={2: [2]}, fetching=(2,)),
         response(dest=20, provider=30, hops=(30,), msg_id="r30.0"),
         [("admit", 2), ("response", "r20.0", 2, 1, 30, (), (30, 20), 1),
          ("response", "r20.1", 2, 2, 30, (), (30, 20), 2)],
         {"pit": {}, "prit": {}, "fetching": []}, via=Via.CCN),
    Case("cap via ccn with nothing pending", lambda: make_node(20, "cap", fetching=(2,)),
         response(dest=20, provider=30, hops=(30,), msg_id="r30.0"),
         [("admit", 2), ("drop", "NoPendingRequester")], {"fetching": []}, via=Via.CCN),
    Case("cap via ccn without cache capacity", lambda: make_node(20, "cap", capacity=0, pit={2: [1]}),
         response(dest=20, provider=30, hops=(30,), msg_id="r30.0"),
         [("response", "r20.0", 2, 1, 30, (), (30, 20), 1)], {"pit": {}}, via=Via.CCN),
    Case("cap via dtn relays device response", lambda: make_node(20, "cap", prit={2: [4]}),
         response(dest=1, provider=9),
         [("admit", 2), ("response", "r9.0", 2, 1, 9, (4,), (9, 20), 1)], {"srit": {2: [9]}, "prit": {}}),
    Case("cap via dtn addressed to itself answers prit", lambda: make_node(20, "cap", prit={2: [4]}),
         response(dest=20, provider=9),
         [("admit", 2), ("response", "r20.0", 2, 4, 9, (), (9, 20), 4)], {"srit": {2: [9]}, "prit": {}}),
    Case("cap via dtn addressed to itself, nothing pending", lambda: make_node(20, "cap"),
         response(dest=20, provider=9),
         [("admit", 2), ("drop", "NoPendingRequester")], {"srit": {2: [9]}}),
    Case("cap expired response", lambda: make_node(20, "cap"), response(t0=0, ttl=1),
         [("drop", "TtlExpired")], via=Via.CCN),
    Case("provider does not process responses", lambda: make_node(30, "provider"), response(),
         [], raises=ValueError),
]
