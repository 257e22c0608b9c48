"""Content catalog, popularity, user profiles and the Interest schedule."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

DEFAULT_INTERVAL = 300.0


def zipf_pmf(n: int, s: float = 1.0) -> np.ndarray:
    """Rank-ordered Zipf probabilities, rank 1 most popular."""
    if n < 1:
        raise ValueError("catalog size must be >= 1")
    if s <= 0:
        raise ValueError("zipf exponent must be > 0")
    w = np.arange(1, n + 1, dtype=float) ** (-s)
    return w / w.sum()


def uniform_pmf(n: int) -> np.ndarray:
    if n < 1:
        raise ValueError("catalog size must be >= 1")
    return np.full(n, 1.0 / n)


@dataclass(frozen=True)
class Catalog:
    size: int
    distribution: str = "zipf"
    zipf_s: float = 1.0

    def __post_init__(self):
        if self.distribution not in ("zipf", "uniform"):
            raise ValueError(f"unknown popularity distribution {self.distribution!r}")

    @property
    def popularity(self) -> np.ndarray:
        if self.distribution == "uniform":
            return uniform_pmf(self.size)
        return zipf_pmf(self.size, self.zipf_s)

    def pi(self, c: int) -> float:
        return float(self.popularity[c - 1])


@dataclass(frozen=True)
class UserProfile:
    user: int
    u: float


def draw_profiles(users: Sequence[int], rng: np.random.Generator) -> dict[int, UserProfile]:
    """Uniform request profiles in (0, 1]."""
    # 1 - U[0,1) lies in (0, 1]
    return {m: UserProfile(m, float(1.0 - rng.random())) for m in users}


def request_rate(u_m: float, pi_c: float, base_rate: float = 1.0 / DEFAULT_INTERVAL) -> float:
    """Per-second rate at which user ``m`` asks for content ``c``."""
    return base_rate * u_m * pi_c


@dataclass(frozen=True, order=True)
class Request:
    time: float
    requester: int
    content: int


def generate_schedule(catalog: Catalog, profiles: dict[int, UserProfile], requesters: Sequence[int],
                      duration: float, rng: np.random.Generator,
                      interval: float = DEFAULT_INTERVAL) -> list[Request]:
    """One Interest per requester per ``interval`` epoch, jittered inside the epoch.

    Contents are drawn from the catalog popularity; the user profile only
    scales request rates, not the preference shape.
    """
    if duration <= 0:
        return []
    epochs = math.floor(duration / interval)
    pop = catalog.popularity
    out = []
    for m in requesters:
        offsets = rng.random(epochs) * interval
        contents = rng.choice(catalog.size, size=epochs, p=pop) + 1
        for k in range(epochs):
            out.append(Request(k * interval + float(offsets[k]), int(m), int(contents[k])))
    out.sort()
    return out
