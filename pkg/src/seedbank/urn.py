"""The urn Markov chain whose visits to urn 0 are the generations an
ancestral line passes through.

From urn 0 the ball stays with probability ``1 - eps`` and jumps to urn
``B - 1`` with probability ``eps``; from any other urn it moves down by one.
Distributions over urns are plain float arrays of length ``B``.
"""
from __future__ import annotations

import functools
import math
from typing import NamedTuple

import numpy as np

from .errors import DimensionError, DomainError, ResourceError
from .model import InitialDistribution, SeedBankParams

#: Default cap on ``B * steps`` for exact distribution sweeps.
DEFAULT_BUDGET = 2_000_000_000
#: Slack for comparisons that hold exactly in real arithmetic.
ROUNDING_TOL = 1e-15


def step(state: int, params: SeedBankParams, rng: np.random.Generator) -> int:
    if state > 0:
        return state - 1
    return params.B - 1 if rng.random() < params.epsilon else 0


def simulate_path(x0: int, steps: int, params: SeedBankParams,
                  rng: np.random.Generator) -> np.ndarray:
    """Trajectory ``X_0, ..., X_steps`` of a single urn chain."""
    path = np.empty(steps + 1, dtype=np.int64)
    path[0] = x = x0
    jumps = rng.random(steps) < params.epsilon
    top = params.B - 1
    for k in range(steps):
        if x > 0:
            x -= 1
        elif jumps[k]:
            x = top
        path[k + 1] = x
    return path


def stationary(params: SeedBankParams) -> np.ndarray:
    """Invariant law: the tail of the jump law divided by its mean."""
    nu = np.full(params.B, params.epsilon / params.mean_jump)
    nu[0] = 1.0 / params.mean_jump
    return nu


def check_distribution(dist, params: SeedBankParams | None = None, tol: float = 1e-12) -> np.ndarray:
    d = np.asarray(dist, dtype=float)
    if d.ndim != 1 or d.size == 0:
        raise DomainError("a distribution must be a nonempty vector")
    if params is not None and d.size != params.B:
        raise DimensionError(f"expected {params.B} urn states, got {d.size}")
    if np.any(d < 0) or abs(math.fsum(d) - 1.0) > tol:
        raise DomainError("entries must be nonnegative and sum to 1")
    return d


def _as_vector(initial, params: SeedBankParams) -> np.ndarray:
    if isinstance(initial, InitialDistribution):
        return initial.to_vector(params)
    return check_distribution(initial, params)


def worst_case_initial(params: SeedBankParams) -> InitialDistribution:
    """Point mass on the urn farthest from 0."""
    return InitialDistribution.delta(params.B - 1)


def evolve_exact(dist, steps: int, params: SeedBankParams) -> np.ndarray:
    """Exact law after ``steps`` transitions, O(1) work per step.

    The vector is held in a ring buffer so the deterministic descent is an
    index shift; only the mass leaving urn 0 is touched.
    """
    d = _as_vector(dist, params)
    if steps < 0:
        raise DomainError("steps must be nonnegative")
    B, eps = params.B, params.epsilon
    buf = d.tolist()
    o = 0
    for _ in range(steps):
        a = buf[o]
        o += 1
        if o == B:
            o = 0
        moved = eps * a
        # old urn 0 is now urn B-1; old urn 1 is now urn 0
        buf[o - 1] = moved
        buf[o] += a - moved
    return np.array(buf[o:] + buf[:o])


def _kernel_step(d: np.ndarray, eps: float) -> np.ndarray:
    out = np.empty_like(d)
    out[:-1] = d[1:]
    out[-1] = 0.0
    moved = eps * d[0]
    out[-1] += moved
    out[0] += d[0] - moved
    return out


def total_variation(d1, d2) -> float:
    a = np.asarray(d1, dtype=float)
    b = np.asarray(d2, dtype=float)
    if a.shape != b.shape:
        raise DimensionError(f"state spaces differ: {a.shape} vs {b.shape}")
    return min(1.0, 0.5 * math.fsum(np.abs(a - b)))


def tv_decay_curve(initial, max_steps: int, params: SeedBankParams,
                   budget: int = DEFAULT_BUDGET) -> np.ndarray:
    """TV distance to stationarity after ``n`` steps, for ``n = 0..max_steps``."""
    if params.B * (max_steps + 1) > budget:
        raise ResourceError(f"B * max_steps = {params.B * max_steps} exceeds budget {budget}")
    d = _as_vector(initial, params)
    nu = stationary(params)
    eps = params.epsilon
    tv = np.empty(max_steps + 1)
    for n in range(max_steps + 1):
        tv[n] = total_variation(d, nu)
        d = _kernel_step(d, eps)
    return tv


def is_nonincreasing(tv, tol: float = ROUNDING_TOL) -> bool:
    """Monotone up to floating-point rounding of the pushed-forward vectors."""
    return bool(np.all(np.diff(np.asarray(tv)) <= tol))


def mixing_time(params: SeedBankParams, initial=None, threshold: float = 0.25,
                max_steps: int | None = None, budget: int = DEFAULT_BUDGET) -> int | None:
    """First step at which the TV distance drops to ``threshold``.

    Starts from the worst case point mass on urn ``B - 1`` unless told
    otherwise. Returns ``None`` if the threshold is not reached.
    """
    if initial is None:
        initial = worst_case_initial(params)
    if max_steps is None:
        max_steps = budget // params.B - 1
    d = _as_vector(initial, params)
    nu = stationary(params)
    for n in range(max_steps + 1):
        if total_variation(d, nu) <= threshold:
            return n
        d = _kernel_step(d, params.epsilon)
    return None


class GeometricTV(NamedTuple):
    value: float
    error_bound: float
    horizon: int


def geometric_time_tv(initial, params: SeedBankParams, tail_tol: float = 1e-10,
                      budget: int = DEFAULT_BUDGET) -> GeometricTV:
    """TV distance to stationarity at an independent Geometric(1/N) time.

    The mixture over the geometric law is truncated at the first horizon
    whose tail mass is at most ``tail_tol``; the tail is replaced by the
    stationary law, so the returned value is within ``error_bound`` of the
    exact distance.
    """
    if not 0.0 < tail_tol < 1.0:
        raise DomainError("tail_tol must lie in (0, 1)")
    d = _as_vector(initial, params)
    nu = stationary(params)
    if params.B == 1:
        return GeometricTV(0.0, 0.0, 0)
    q = 1.0 - 1.0 / params.N
    horizon = math.ceil(math.log(tail_tol) / math.log(q))
    if params.B * horizon > budget:
        raise ResourceError(f"truncation horizon {horizon} exceeds budget")
    mix = np.zeros(params.B)
    w = 1.0 / params.N
    for _ in range(horizon):
        d = _kernel_step(d, params.epsilon)
        mix += w * d
        w *= q
    tail = q**horizon
    value = 0.5 * float(np.abs(mix - (1.0 - tail) * nu).sum())
    return GeometricTV(value, tail, horizon)


class UrnSkipper:
    """Draws ``X_{t+r}`` given ``X_t = x`` without walking the chain.

    The first ``x`` steps are a deterministic descent. The remaining steps
    start from urn 0 and are sampled either from a precomputed table of the
    exact laws ``P_0(X_r = .)`` (small ``B``) or by jumping whole dwell and
    excursion cycles (large ``B``). In table mode, laws beyond the table
    horizon are replaced by the stationary law; their TV distance to it is
    at most ``tol``.
    """

    def __init__(self, params: SeedBankParams, tol: float = 1e-14,
                 table_budget: int = 4_000_000):
        self.params = params
        self.tol = tol
        self.table = self._build_table(table_budget)
        self.cycle_mean = params.B - 1 + 1.0 / params.epsilon

    def _build_table(self, table_budget):
        B, eps = self.params.B, self.params.epsilon
        if B == 1:
            return None
        nu = stationary(self.params)
        rows = []
        d = np.zeros(B)
        d[0] = 1.0
        while total_variation(d, nu) > self.tol:
            if (len(rows) + 1) * B > table_budget:
                return None
            rows.append(np.cumsum(d))
            d = _kernel_step(d, eps)
        rows.append(np.cumsum(nu))
        return np.vstack(rows)

    @property
    def mode(self) -> str:
        if self.params.B == 1:
            return "trivial"
        return "table" if self.table is not None else "cycles"

    def advance(self, x: int, r: int, rng: np.random.Generator) -> int:
        if r <= x:
            return x - r
        if self.params.B == 1:
            return 0
        r -= x
        if self.table is not None:
            row = self.table[min(r, len(self.table) - 1)]
            return min(int(np.searchsorted(row, rng.random(), side="right")), self.params.B - 1)
        return self._advance_cycles(r, rng)

    def _advance_cycles(self, r: int, rng: np.random.Generator) -> int:
        B, eps = self.params.B, self.params.epsilon
        while True:
            k = int(r / self.cycle_mean * 1.1) + 8
            dwell = rng.geometric(eps, size=k)
            ends = np.cumsum(dwell + (B - 1))
            i = int(np.searchsorted(ends, r, side="right"))
            if i < k:
                off = r - (int(ends[i - 1]) if i else 0)
                g = int(dwell[i])
                return 0 if off < g else B - 1 - (off - g)
            r -= int(ends[-1])


@functools.lru_cache(maxsize=32)
def skipper_for(params: SeedBankParams) -> UrnSkipper:
    return UrnSkipper(params)
