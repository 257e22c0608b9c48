"""Synthetic road maps, shortest-path map-based movement and contact detection."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components, dijkstra


@dataclass
class RoadGraph:
    vertices: np.ndarray                      # (V, 2) metres
    edges: list[tuple[int, int]]
    pois: dict[int, list[int]] = field(default_factory=dict)

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=float)
        self.edges = [(int(u), int(v)) for u, v in self.edges]
        if not self.connected():
            raise ValueError("road graph is not connected")

    @property
    def n(self) -> int:
        return len(self.vertices)

    def edge_length(self, u: int, v: int) -> float:
        return float(np.hypot(*(self.vertices[u] - self.vertices[v])))

    @cached_property
    def adjacency(self) -> csr_matrix:
        rows, cols, w = [], [], []
        for u, v in self.edges:
            d = self.edge_length(u, v)
            rows += [u, v]
            cols += [v, u]
            w += [d, d]
        return csr_matrix((w, (rows, cols)), shape=(self.n, self.n))

    def connected(self) -> bool:
        if self.n == 0:
            return False
        k, _ = connected_components(self.adjacency, directed=False)
        return k == 1

    @cached_property
    def _all_pairs(self) -> tuple[np.ndarray, np.ndarray]:
        return dijkstra(self.adjacency, directed=False, return_predecessors=True)

    def distance(self, u: int, v: int) -> float:
        return float(self._all_pairs[0][u, v])

    def shortest_path(self, u: int, v: int) -> list[int]:
        pred = self._all_pairs[1]
        path = [v]
        while path[-1] != u:
            p = pred[u, path[-1]]
            if p < 0:
                raise ValueError(f"no path {u}->{v}")
            path.append(int(p))
        return path[::-1]

    def to_json(self) -> dict:
        return {
            "vertices": self.vertices.tolist(),
            "edges": [list(e) for e in self.edges],
            "pois": {str(g): list(vs) for g, vs in self.pois.items()},
        }


def load_map(path: str | Path) -> RoadGraph:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    pois = {int(g): [int(v) for v in vs] for g, vs in data.get("pois", {}).items()}
    return RoadGraph(np.array(data["vertices"], dtype=float), data["edges"], pois)


def grid_graph(size: int = 10, spacing: float = 200.0, diagonal_fraction: float = 0.3,
               n_pois: int = 12, groups: int = 4, rng: Optional[np.random.Generator] = None) -> RoadGraph:
    """``size`` x ``size`` street grid with some diagonal shortcuts and POI groups."""
    rng = np.random.default_rng(0) if rng is None else rng
    idx = lambda i, j: i * size + j  # noqa: E731
    vertices = np.array([(j * spacing, i * spacing) for i in range(size) for j in range(size)], dtype=float)
    edges = []
    for i in range(size):
        for j in range(size):
            if j + 1 < size:
                edges.append((idx(i, j), idx(i, j + 1)))
            if i + 1 < size:
                edges.append((idx(i, j), idx(i + 1, j)))
    for i in range(size - 1):
        for j in range(size - 1):
            if rng.random() < diagonal_fraction:
                if (i + j) % 2:
                    edges.append((idx(i, j), idx(i + 1, j + 1)))
                else:
                    edges.append((idx(i, j + 1), idx(i + 1, j)))
    n_pois = min(n_pois, size * size)
    chosen = rng.choice(size * size, size=n_pois, replace=False)
    pois = {g + 1: sorted(int(v) for v in chosen[g::groups]) for g in range(groups)}
    return RoadGraph(vertices, edges, pois)


@dataclass
class MovementState:
    node: int
    group: int
    path: list[int]
    points: np.ndarray        # (k, 2) coordinates of ``path``
    speed: float
    depart: float = 0.0
    progress: float = 0.0

    @cached_property
    def cumulative(self) -> np.ndarray:
        seg = np.hypot(*np.diff(self.points, axis=0).T) if len(self.points) > 1 else np.zeros(0)
        return np.concatenate([[0.0], np.cumsum(seg)])

    @property
    def length(self) -> float:
        return float(self.cumulative[-1])

    @property
    def arrival(self) -> float:
        return self.depart + self.length / self.speed


def make_leg(node: int, group: int, graph: RoadGraph, src: int, dst: int, speed: float,
             depart: float) -> MovementState:
    path = graph.shortest_path(src, dst)
    return MovementState(node, group, path, graph.vertices[path], speed, depart)


def position_at(state: MovementState, t: float) -> np.ndarray:
    """Position on the current leg, linearly interpolated along its edges."""
    s = np.clip(state.speed * (t - state.depart), 0.0, state.length)
    cum = state.cumulative
    x = np.interp(s, cum, state.points[:, 0])
    y = np.interp(s, cum, state.points[:, 1])
    return np.array([x, y])


def next_destination(current: int, graph: RoadGraph, rng: np.random.Generator,
                     p_poi: float, pois: Sequence[int] = ()) -> int:
    """POI with probability ``p_poi``, otherwise a uniform vertex; never ``current``."""
    pois = [v for v in pois if v != current]
    if pois and rng.random() < p_poi:
        return int(pois[rng.integers(len(pois))])
    v = int(rng.integers(graph.n - 1))
    return v + 1 if v >= current else v


@dataclass(frozen=True)
class MobilityParams:
    p_poi: float = 0.5
    speed: tuple[float, float] = (0.5, 1.5)
    pause: tuple[float, float] = (0.0, 120.0)


def trajectory(node: int, group: int, graph: RoadGraph, params: MobilityParams, duration: float,
               rng: np.random.Generator, start: Optional[int] = None) -> tuple[np.ndarray, np.ndarray]:
    """Breakpoints ``(times, xy)`` of a piecewise-linear walk covering ``[0, duration]``."""
    current = int(rng.integers(graph.n)) if start is None else start
    pois = graph.pois.get(group, [])
    times = [0.0]
    pts = [graph.vertices[current]]
    t = 0.0
    while t < duration:
        pause = rng.uniform(*params.pause)
        if pause > 0:
            t += pause
            times.append(t)
            pts.append(graph.vertices[current])
        dst = next_destination(current, graph, rng, params.p_poi, pois)
        leg = make_leg(node, group, graph, current, dst, rng.uniform(*params.speed), t)
        for s, p in zip(leg.cumulative[1:], leg.points[1:]):
            times.append(t + s / leg.speed)
            pts.append(p)
        t = leg.arrival
        current = dst
    return np.array(times), np.array(pts)


def sample_positions(trajectories: Sequence[tuple[np.ndarray, np.ndarray]], times: np.ndarray) -> np.ndarray:
    """Positions ``(T, N, 2)`` of every trajectory at ``times``."""
    out = np.empty((len(times), len(trajectories), 2))
    for i, (ts, xy) in enumerate(trajectories):
        out[:, i, 0] = np.interp(times, ts, xy[:, 0])
        out[:, i, 1] = np.interp(times, ts, xy[:, 1])
    return out


@dataclass(frozen=True, order=True)
class ContactEvent:
    start: float
    a: int
    b: int
    end: float


def pair_ranges(ranges: Sequence[float], caps: Optional[Sequence[bool]] = None) -> np.ndarray:
    """Symmetric (N, N) contact ranges: the smaller of the two radio ranges.

    CAP-CAP pairs never form contacts (they share the core), marked -1.
    """
    r = np.asarray(ranges, dtype=float)
    m = np.minimum.outer(r, r)
    if caps is not None:
        cap = np.asarray(caps, dtype=bool)
        m[np.logical_and.outer(cap, cap)] = -1.0
    return m


def detect_contacts(positions: np.ndarray, ranges, step: float = 1.0, t0: float = 0.0,
                    caps: Optional[Sequence[bool]] = None, chunk: Optional[int] = None) -> list[ContactEvent]:
    """Contacts from sampled positions ``(T, N, 2)``.

    A contact opens at the first sample with distance <= range and closes at
    the first later sample where it exceeds the range; open contacts are
    closed at the last sample time.
    """
    if step <= 0:
        raise ValueError("step must be > 0")
    T, N, _ = positions.shape
    rng_m = np.asarray(ranges, dtype=float)
    if rng_m.ndim == 1:
        rng_m = pair_ranges(rng_m, caps)
    I, J = np.triu_indices(N, k=1)
    r2 = np.where(rng_m[I, J] >= 0, rng_m[I, J] ** 2, -1.0)
    if chunk is None:
        chunk = max(16, int(4_000_000 // max(len(I), 1)))
    open_at = np.full(len(I), -1, dtype=np.int64)
    prev = np.zeros(len(I), dtype=bool)
    events = []
    for lo in range(0, T, chunk):
        block = positions[lo:lo + chunk]
        d = block[:, I, :] - block[:, J, :]
        within = (d[..., 0] ** 2 + d[..., 1] ** 2) <= r2
        stacked = np.vstack([prev[None, :], within])
        ts, ps = np.nonzero(stacked[1:] != stacked[:-1])
        for ti, p in zip(ts, ps):
            k = lo + ti
            if within[ti, p]:
                open_at[p] = k
            else:
                events.append(ContactEvent(t0 + open_at[p] * step, int(I[p]), int(J[p]), t0 + k * step))
                open_at[p] = -1
        prev = within[-1]
    last = T - 1
    for p in np.nonzero(open_at >= 0)[0]:
        if open_at[p] < last:
            events.append(ContactEvent(t0 + open_at[p] * step, int(I[p]), int(J[p]), t0 + last * step))
    events.sort()
    return events
