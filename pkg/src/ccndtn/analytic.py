"""Closed-form performance model: service rates, birth-death absorption time,
cache availability.

The content-copy count is a birth-death chain whose only absorbing state is
0 (no cached copy anywhere). States run 1..n_max; births out of n_max are
suppressed, which makes the truncated sums exact for the truncated chain.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

DIVERGENCE_RATIO = 0.999
DEFAULT_N_MAX = 10_000


@dataclass
class BirthDeathChain:
    lam: np.ndarray   # lam[i-1] is the birth rate in state i
    mu: np.ndarray    # mu[i-1] is the death rate in state i

    def __post_init__(self):
        self.lam = np.asarray(self.lam, dtype=float)
        self.mu = np.asarray(self.mu, dtype=float)
        if self.lam.shape != self.mu.shape or self.lam.ndim != 1 or len(self.lam) == 0:
            raise ValueError("lambda and mu must be equal-length non-empty vectors")
        if np.any(self.mu < 0):
            raise ValueError("death rates must be >= 0")

    @property
    def n_max(self) -> int:
        return len(self.lam)

    @classmethod
    def constant(cls, lam: float, mu: float, n_max: int = DEFAULT_N_MAX) -> "BirthDeathChain":
        return cls(np.full(n_max, lam), np.full(n_max, mu))


def _check_lambda(chain: BirthDeathChain, upto: int) -> None:
    if np.any(chain.lam[:upto] <= 0):
        raise ValueError("birth rates must be > 0")


def log_rho(chain: BirthDeathChain) -> np.ndarray:
    """log rho_n for n = 1..n_max."""
    _check_lambda(chain, chain.n_max)
    with np.errstate(divide="ignore"):
        return np.cumsum(np.log(chain.mu) - np.log(chain.lam))


def rho(chain: BirthDeathChain, n: int) -> float:
    """Running product of mu_i / lambda_i for i = 1..n (rho_0 = 1)."""
    if n == 0:
        return 1.0
    if not 1 <= n <= chain.n_max:
        raise ValueError(f"state {n} outside 1..{chain.n_max}")
    _check_lambda(chain, n)
    return float(np.prod(chain.mu[:n] / chain.lam[:n]))


@dataclass(frozen=True)
class AbsorptionTime:
    value: float
    truncation_bound: float = 0.0

    @property
    def infinite(self) -> bool:
        return math.isinf(self.value)

    def __float__(self) -> float:
        return self.value


def _log_terms(chain: BirthDeathChain) -> np.ndarray:
    # log of 1 / (lambda_i rho_i)
    return -(np.log(chain.lam) + log_rho(chain))


def absorption_time(chain: BirthDeathChain, n: int, divergence_ratio: float = DIVERGENCE_RATIO) -> AbsorptionTime:
    """Mean time to hit state 0 from state ``n``.

    Declared infinite when the last term ratio of the outer series exceeds
    ``divergence_ratio``. Otherwise the tail beyond n_max is bounded by a
    geometric continuation of the final ratio.
    """
    N = chain.n_max
    if not 1 <= n <= N:
        raise ValueError(f"start state {n} outside 1..{N}")
    lt = _log_terms(chain)
    if np.any(np.isinf(lt) & (lt > 0)):
        return AbsorptionTime(math.inf)
    ratio = math.exp(lt[-1] - lt[-2]) if N > 1 else 0.0
    if N > 1 and ratio > divergence_ratio:
        return AbsorptionTime(math.inf)

    shift = lt.max()
    terms = np.exp(lt - shift)
    # tails[k] = sum_{j>k} term_j, in units of exp(shift)
    suffix = np.concatenate([np.cumsum(terms[::-1])[::-1], [0.0]])
    total = suffix[0]
    lr = log_rho(chain)
    inner = 0.0
    for k in range(1, n):
        tail = suffix[k]
        if tail > 0:
            inner += math.exp(lr[k - 1] + math.log(tail))
    value = math.exp(shift) * (total + inner)
    bound = 0.0
    if N > 1 and ratio > 0:
        last = math.exp(lt[-1])
        per_sum = last * ratio / (1.0 - ratio)
        bound = per_sum * (1.0 + sum(math.exp(lr[k - 1]) for k in range(1, n)))
    return AbsorptionTime(value, bound)


def hitting_times_linear(chain: BirthDeathChain) -> np.ndarray:
    """Mean absorption times for states 1..n_max by solving the generator system.

    Independent of the series formula; used as a cross-check.
    """
    N = chain.n_max
    lam = chain.lam.copy()
    lam[-1] = 0.0
    A = np.zeros((N, N))
    for i in range(N):
        out = lam[i] + chain.mu[i]
        A[i, i] = out
        if i + 1 < N:
            A[i, i + 1] = -lam[i]
        if i > 0:
            A[i, i - 1] = -chain.mu[i]
    return np.linalg.solve(A, np.ones(N))


def monte_carlo_absorption(chain: BirthDeathChain, n: int, walks: int = 100_000,
                           rng: Optional[np.random.Generator] = None, max_steps: int = 1_000_000) -> float:
    """Mean absorption time from state ``n`` over simulated jump-chain walks."""
    rng = np.random.default_rng(0) if rng is None else rng
    lam = chain.lam.copy()
    lam[-1] = 0.0
    mu = chain.mu
    state = np.full(walks, n, dtype=np.int64)
    clock = np.zeros(walks)
    alive = np.ones(walks, dtype=bool)
    for _ in range(max_steps):
        idx = np.nonzero(alive)[0]
        if len(idx) == 0:
            break
        s = state[idx] - 1
        out = lam[s] + mu[s]
        clock[idx] += rng.exponential(1.0, len(idx)) / out
        down = rng.random(len(idx)) * out < mu[s]
        state[idx] = np.where(down, state[idx] - 1, state[idx] + 1)
        alive[idx] = state[idx] > 0
    else:
        raise RuntimeError("walks did not absorb within max_steps")
    return float(clock.mean())


def birth_rate(request_rates: Sequence[float], n: Optional[int] = None, kappa: float = 1.0) -> float:
    """Birth rate in state ``n`` from the request rates of the requesting users."""
    r = np.asarray(request_rates, dtype=float)
    nonzero = int(np.count_nonzero(r))
    if n is not None and nonzero != n:
        raise ValueError(f"expected {n} requesting users, found {nonzero}")
    return kappa * float(r.sum())


@dataclass
class ServiceRateParams:
    pi_c: float
    alpha_A: float
    alpha_M: float
    c_N1: float
    c_N2: float
    c_N3: float
    neighbor_profiles: Sequence[float] = field(default_factory=list)

    def __post_init__(self):
        for name in ("pi_c", "alpha_A", "alpha_M"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {v}")
        if not 0 < self.alpha_M < self.alpha_A < 1:
            warnings.warn("expected 0 < alpha_M << alpha_A << 1", stacklevel=2)


def service_rates(p: ServiceRateParams) -> tuple[float, float, float]:
    """Service rates through the core, the CAP cache, and neighbouring devices."""
    s1 = p.c_N1 * p.pi_c
    s2 = p.alpha_A * p.c_N2 * p.pi_c
    s3 = p.alpha_M * p.c_N3 * p.pi_c * float(np.prod(p.neighbor_profiles))
    return s1, s2, s3


def chain_from_model(profiles: Sequence[float], p: ServiceRateParams, n_max: int,
                     base_rate: float = 1.0, kappa: float = 1.0) -> BirthDeathChain:
    """Birth rates from the first n requesting users, constant death rate s1+s2+s3."""
    rates = np.asarray(profiles, dtype=float) * p.pi_c * base_rate
    lam = np.array([birth_rate(rates[:min(n, len(rates))], kappa=kappa) for n in range(1, n_max + 1)])
    mu = np.full(n_max, sum(service_rates(p)))
    return BirthDeathChain(lam, mu)


@dataclass
class CacheAvailabilityParams:
    p_cap_absent: float
    # per hop ring, absence probability of each device in that ring
    p_absent_per_neighbor: Sequence[Sequence[float]]

    def __post_init__(self):
        probs = [self.p_cap_absent] + [q for ring in self.p_absent_per_neighbor for q in ring]
        if any(not 0.0 <= q <= 1.0 for q in probs):
            raise ValueError("absence probabilities must be in [0, 1]")


@dataclass(frozen=True)
class Availability:
    p_cap: float
    p_rings: tuple[float, ...]
    p_miss: float
    p_cell: float


def cache_availability(p: CacheAvailabilityParams, K: int) -> Availability:
    """Probability of finding ``c`` at the CAP, within each hop ring, nowhere
    within ``K`` hops, and anywhere in the cell.

    Ring availability uses the independence product ``1 - prod(absent)``.
    """
    rings = list(p.p_absent_per_neighbor)
    if not 1 <= K <= len(rings):
        raise ValueError(f"K must be in 1..{len(rings)}")
    p_cap = 1.0 - p.p_cap_absent
    p_rings = tuple(1.0 - float(np.prod(r)) for r in rings[:K])
    p_miss = min(1.0, max(0.0, 1.0 - p_cap - sum(p_rings)))
    devices = [q for r in rings[:K] for q in r]
    p_cell = 1.0 - p.p_cap_absent * float(np.prod(devices))
    return Availability(p_cap, p_rings, p_miss, p_cell)
