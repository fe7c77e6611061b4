"""Ancestral lines, the partition-valued ancestral process and T_MRCA samplers.

Generations count backwards from the reference generation 0. A line visits
the generations of an individual's ancestors; two lines can only merge in a
generation both visit, and do so when their uniformly drawn labels on
``{0, ..., N-1}`` agree.
"""
from __future__ import annotations

import dataclasses
import heapq
import math
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from typing import Iterable

import numpy as np

from .errors import DomainError, ResourceError, SeedBankError
from .model import InitialDistribution, SeedBankParams, sample_increment
from .urn import skipper_for

DEFAULT_MAX_EVENTS = 10**10

CLASSIFICATIONS = ("double", "multiple", "simultaneous")


class RenewalLine:
    """One ancestral line: successive generations separated by jumps of 1 or B."""

    def __init__(self, params: SeedBankParams, start: int, rng: np.random.Generator):
        self.params = params
        self.current_generation = int(start)
        self.rng = rng

    def advance(self) -> int:
        self.current_generation += sample_increment(self.params, self.rng)
        return self.current_generation


@dataclasses.dataclass(frozen=True)
class MergerEvent:
    time: int
    groups: tuple  # tuple of tuples of blocks (frozensets of sample indices)
    classification: str

    @property
    def blocks_lost(self) -> int:
        return sum(len(g) - 1 for g in self.groups)


def classify(group_sizes: Iterable[int]) -> str:
    sizes = list(group_sizes)
    if not sizes or min(sizes) < 2:
        raise DomainError("merger groups must have at least two blocks")
    if len(sizes) >= 2:
        return "simultaneous"
    return "multiple" if sizes[0] >= 3 else "double"


@dataclasses.dataclass
class PartitionTrace:
    """Merger history of an ``m``-sample; ``final_time`` is T_MRCA(m)."""

    m: int
    events: list
    final_time: int

    def partitions(self) -> list:
        """Partitions after each event, preceded by the all-singletons one."""
        current = {frozenset([i]) for i in range(self.m)}
        out = [frozenset(current)]
        for ev in self.events:
            for group in ev.groups:
                current.difference_update(group)
                current.add(frozenset().union(*group))
            out.append(frozenset(current))
        return out

    def block_counts(self) -> list:
        counts = [self.m]
        for ev in self.events:
            counts.append(counts[-1] - ev.blocks_lost)
        return counts

    def classification_counts(self) -> dict:
        counts = dict.fromkeys(CLASSIFICATIONS, 0)
        for ev in self.events:
            counts[ev.classification] += 1
        return counts


def _check_inputs(params, m, gamma):
    if m < 2:
        raise DomainError(f"sample size must be >= 2, got {m}")
    gamma = InitialDistribution.delta(0) if gamma is None else gamma
    gamma.check_support(params)
    return gamma


def _merge(blocks, groups):
    """Merge each group (list of block indices) into one block; return new list."""
    absorbed = set()
    merged = []
    for g in groups:
        absorbed.update(g)
        merged.append(frozenset().union(*(blocks[i] for i in g)))
    return [b for i, b in enumerate(blocks) if i not in absorbed], merged


def collision_probability(b: int, N: int) -> float:
    """Probability that ``b`` uniform labels on ``N`` values are not all distinct."""
    if b > N:
        return 1.0
    return -math.expm1(math.fsum(math.log1p(-i / N) for i in range(1, b)))


def _first_collision_cdf(b: int, N: int) -> np.ndarray:
    # P(first repeated label sits at slot j), j = 1..b-1 (0-based), cumulated
    w = np.empty(b - 1)
    distinct = 1.0
    for j in range(1, b):
        w[j - 1] = distinct * j / N
        distinct *= max(0.0, 1.0 - j / N)
    return np.cumsum(w / w.sum())


def conditional_labels(b: int, N: int, rng: np.random.Generator, cdf=None) -> list:
    """Labels of ``b`` slots drawn uniformly on ``N`` values, conditioned on a repeat.

    The slot of the first repeat is drawn from its exact conditional law;
    earlier slots are distinct, later slots are unconstrained.
    """
    if b < 2:
        raise DomainError("need at least two slots")
    if cdf is None:
        cdf = _first_collision_cdf(b, N)
    j = 1
    if b > 2:
        j = 1 + min(int(np.searchsorted(cdf, rng.random(), side="right")), b - 2)
    while True:
        head = rng.integers(N, size=j).tolist()
        if len(set(head)) == j:
            break
    head.append(head[int(rng.integers(j))])
    if b - j - 1:
        head.extend(rng.integers(N, size=b - j - 1).tolist())
    return head


def _label_groups(labels) -> list:
    by_label = defaultdict(list)
    for slot, lab in enumerate(labels):
        by_label[lab].append(slot)
    return [g for g in by_label.values() if len(g) >= 2]


def _simulate_thinned(params, m, gamma, rng, max_events):
    """Jump between generations whose label vector has a repeat.

    Labels are iid across generations and blocks, so the generations in
    which the current ``b`` blocks' labels are not all distinct form a
    Bernoulli(p_b) sequence; only those generations can carry a merger.
    Each colliding block's urn is then advanced exactly to that generation
    to decide whether its line is present there.
    """
    N = params.N
    skip = skipper_for(params)
    blocks = [frozenset([i]) for i in range(m)]
    starts = gamma.sample(rng, m)
    last_t = [0] * m
    last_x = [int(s) for s in starts]
    g = 0
    events = []
    attempts = 0
    cache = {}
    while len(blocks) > 1:
        b = len(blocks)
        if b not in cache:
            cache[b] = (collision_probability(b, N), _first_collision_cdf(b, N))
        p, cdf = cache[b]
        g += int(rng.geometric(p))
        attempts += 1
        if attempts > max_events:
            raise ResourceError(f"event cap {max_events} reached at generation {g}")
        merges = []
        for group in _label_groups(conditional_labels(b, N, rng, cdf)):
            present = []
            for i in group:
                x = skip.advance(last_x[i], g - last_t[i], rng)
                last_t[i], last_x[i] = g, x
                if x == 0:
                    present.append(i)
            if len(present) >= 2:
                merges.append(present)
        if not merges:
            continue
        blocks, events, last_t, last_x = _apply_merges(
            blocks, merges, g, events, last_t, last_x)
    return PartitionTrace(m, events, g)


def _apply_merges(blocks, merges, g, events, last_t, last_x):
    keep = [i for i in range(len(blocks)) if not any(i in grp for grp in merges)]
    groups = tuple(tuple(blocks[i] for i in grp) for grp in merges)
    events.append(MergerEvent(g, groups, classify(len(grp) for grp in merges)))
    new_blocks = [blocks[i] for i in keep]
    new_t = [last_t[i] for i in keep]
    new_x = [last_x[i] for i in keep]
    for grp in groups:
        new_blocks.append(frozenset().union(*grp))
        new_t.append(g)
        new_x.append(0)
    return new_blocks, events, new_t, new_x


def _simulate_renewal(params, m, gamma, rng, max_events):
    """Walk every line renewal by renewal with a priority queue.

    Labels are drawn in each generation visited by two or more blocks.
    """
    N = params.N
    blocks = {i: frozenset([i]) for i in range(m)}
    lines = {i: RenewalLine(params, s, rng) for i, s in enumerate(gamma.sample(rng, m))}
    heap = [(line.current_generation, i) for i, line in lines.items()]
    heapq.heapify(heap)
    events = []
    n_events = 0
    g = 0
    while len(blocks) > 1:
        g = heap[0][0]
        here = []
        while heap and heap[0][0] == g:
            here.append(heapq.heappop(heap)[1])
        n_events += 1
        if n_events > max_events:
            raise ResourceError(f"event cap {max_events} reached at generation {g}")
        if g > 0 and len(here) >= 2:
            here.sort()
            labels = rng.integers(N, size=len(here))
            merges = [[here[s] for s in grp] for grp in _label_groups(labels)]
            if merges:
                groups = tuple(tuple(blocks[i] for i in grp) for grp in merges)
                events.append(MergerEvent(g, groups, classify(len(grp) for grp in merges)))
                for (head, *rest), members in zip(merges, groups):
                    # the smallest id carries the merged block on
                    for i in rest:
                        del blocks[i]
                        del lines[i]
                    blocks[head] = frozenset().union(*members)
                here = [i for i in here if i in blocks]
        for i in here:
            heapq.heappush(heap, (lines[i].advance(), i))
    return PartitionTrace(m, events, g)


def simulate_ancestral_process(params: SeedBankParams, m: int,
                               gamma: InitialDistribution | None = None,
                               rng: np.random.Generator | None = None,
                               method: str = "thinned",
                               max_events: int = DEFAULT_MAX_EVENTS) -> PartitionTrace:
    """Simulate the ancestral process of ``m`` sampled individuals.

    ``method="renewal"`` follows every ancestral line from renewal to
    renewal; ``method="thinned"`` (default) visits only generations with a
    label repeat and is far cheaper when ``N`` is large. Both have the same law.
    """
    gamma = _check_inputs(params, m, gamma)
    rng = np.random.default_rng() if rng is None else rng
    if method == "thinned":
        return _simulate_thinned(params, m, gamma, rng, max_events)
    if method == "renewal":
        return _simulate_renewal(params, m, gamma, rng, max_events)
    raise DomainError(f"unknown method {method!r}")


class _ZeroSet:
    """Lazily generated set of generations at which an urn sits at 0.

    The urn arrives at 0 at its starting position ``x0``; each cycle then
    dwells at 0 for a Geometric(eps) number of generations and spends
    ``B - 1`` generations descending from urn ``B - 1``.
    """

    def __init__(self, x0: int, params: SeedBankParams, rng: np.random.Generator):
        self.B = params.B
        self.eps = params.epsilon
        self.rng = rng
        self.cycle_mean = self.B - 1 + 1.0 / self.eps
        self.starts = np.array([], dtype=np.int64)
        self.dwell = np.array([], dtype=np.int64)
        self.next_start = int(x0)

    def _extend(self, until: int):
        starts, dwell = [self.starts], [self.dwell]
        while self.next_start <= until:
            k = int((until - self.next_start) / self.cycle_mean * 1.05) + 16
            g = self.rng.geometric(self.eps, size=k)
            ends = self.next_start + np.cumsum(g + (self.B - 1))
            starts.append(np.concatenate(([self.next_start], ends[:-1])))
            dwell.append(g)
            self.next_start = int(ends[-1])
        self.starts = np.concatenate(starts)
        self.dwell = np.concatenate(dwell)

    def contains(self, times: np.ndarray) -> np.ndarray:
        """Membership for an increasing array of times; forgets the past."""
        self._extend(int(times[-1]))
        if self.starts.size == 0:
            return np.zeros(len(times), dtype=bool)
        idx = np.searchsorted(self.starts, times, side="right") - 1
        ok = idx >= 0
        safe = np.maximum(idx, 0)
        hit = ok & (times - self.starts[safe] < self.dwell[safe])
        keep = max(int(idx[-1]), 0)
        self.starts = self.starts[keep:]
        self.dwell = self.dwell[keep:]
        return hit


def simulate_tmrca2_fast(params: SeedBankParams, gamma: InitialDistribution | None = None,
                         rng: np.random.Generator | None = None,
                         max_events: int = DEFAULT_MAX_EVENTS) -> int:
    """T_MRCA of two lines as the first label-match time at which both urns sit at 0.

    Label-match times are a renewal sequence with Geometric(1/N) gaps, drawn
    independently of the two urn chains. Both chains are advanced cycle by
    cycle, never generation by generation.
    """
    gamma = _check_inputs(params, 2, gamma)
    rng = np.random.default_rng() if rng is None else rng
    x0, y0 = (int(v) for v in gamma.sample(rng, 2))
    xs, ys = _ZeroSet(x0, params, rng), _ZeroSet(y0, params, rng)
    nu0 = 1.0 / params.mean_jump
    chunk = min(max(16, int(0.5 / nu0**2)), 1 << 16)
    t = 0
    drawn = 0
    p = 1.0 / params.N
    while True:
        taus = t + np.cumsum(rng.geometric(p, size=chunk))
        both = xs.contains(taus) & ys.contains(taus)
        if both.any():
            return int(taus[int(np.argmax(both))])
        drawn += chunk
        if drawn > max_events:
            raise ResourceError(f"event cap {max_events} reached at generation {t}")
        t = int(taus[-1])
        chunk = min(chunk * 2, 1 << 16)


def kingman_simulate(m: int, rng: np.random.Generator | None = None) -> list:
    """Holding times of Kingman's m-coalescent as ``(blocks, time)`` pairs."""
    if m < 2:
        raise DomainError(f"sample size must be >= 2, got {m}")
    rng = np.random.default_rng() if rng is None else rng
    return [(b, float(rng.exponential(2.0 / (b * (b - 1))))) for b in range(m, 1, -1)]


def scale_time(t, params: SeedBankParams):
    """Generations to coalescent time units, ``t / (eps^2 N^(1+2 beta))``."""
    arr = np.asarray(t, dtype=float)
    if np.any(arr < 0):
        raise DomainError("time must be nonnegative")
    out = arr / params.time_scale
    return float(out) if out.ndim == 0 else out


@dataclasses.dataclass
class SampleSet:
    params: SeedBankParams
    gamma: InitialDistribution
    m: int
    seed: int
    values: np.ndarray
    sampler: str
    event_counts: dict | None = None

    @property
    def scaled(self) -> np.ndarray:
        return self.values / self.params.time_scale

    @property
    def replicates(self) -> int:
        return len(self.values)

    def header(self) -> dict:
        return {
            "N": self.params.N,
            "beta": self.params.beta,
            "epsilon": self.params.epsilon,
            "B": self.params.B,
            "time_scale": self.params.time_scale,
            "m": self.m,
            "gamma": self.gamma.describe(),
            "seed": self.seed,
            "replicates": self.replicates,
            "sampler": self.sampler,
        }


def replicate_rng(master_seed: int, index: int) -> np.random.Generator:
    """Independent stream for replicate ``index``; equals ``SeedSequence.spawn`` child ``index``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(master_seed, spawn_key=(index,))))


def _one_replicate(params, m, gamma, sampler, max_events, rng):
    if sampler == "fast":
        return simulate_tmrca2_fast(params, gamma, rng, max_events), None
    if sampler == "brute":
        from .oracle import brute_force_tmrca2

        return brute_force_tmrca2(params, gamma, rng), None
    trace = simulate_ancestral_process(params, m, gamma, rng, sampler, max_events)
    return trace.final_time, trace.classification_counts()


def _run_range(args):
    params, m, gamma, sampler, max_events, seed, lo, hi = args
    out = []
    for i in range(lo, hi):
        try:
            out.append(_one_replicate(params, m, gamma, sampler, max_events, replicate_rng(seed, i)))
        except SeedBankError as exc:
            raise type(exc)(f"replicate {i}: {exc}") from exc
    return out


def run_replicates(params: SeedBankParams, m: int, gamma: InitialDistribution | None,
                   replicates: int, master_seed: int, sampler: str = "auto",
                   workers: int = 1, max_events: int = DEFAULT_MAX_EVENTS) -> SampleSet:
    """Draw ``replicates`` independent T_MRCA(m) values.

    Replicate ``i`` always uses the stream ``replicate_rng(master_seed, i)``
    and results are assembled in index order, so the output does not depend
    on ``workers``.
    """
    gamma = _check_inputs(params, m, gamma)
    if replicates < 1:
        raise DomainError("replicates must be >= 1")
    if sampler == "auto":
        sampler = "fast" if m == 2 else "thinned"
    if sampler in ("fast", "brute") and m != 2:
        raise DomainError(f"sampler {sampler!r} only handles two lines")
    if sampler not in ("fast", "brute", "thinned", "renewal"):
        raise DomainError(f"unknown sampler {sampler!r}")
    workers = max(1, min(workers, replicates))
    bounds = np.linspace(0, replicates, workers * 4 + 1 if workers > 1 else 2).astype(int)
    tasks = [(params, m, gamma, sampler, max_events, master_seed, lo, hi)
             for lo, hi in zip(bounds[:-1], bounds[1:]) if hi > lo]
    if workers == 1:
        chunks = [_run_range(t) for t in tasks]
    else:
        with ProcessPoolExecutor(workers) as pool:
            chunks = list(pool.map(_run_range, tasks))
    results = [r for chunk in chunks for r in chunk]
    values = np.array([v for v, _ in results], dtype=np.int64)
    counts = None
    if sampler in ("thinned", "renewal"):
        counts = dict.fromkeys(CLASSIFICATIONS, 0)
        for _, c in results:
            for k, v in c.items():
                counts[k] += v
    return SampleSet(params, gamma, m, master_seed, values, sampler, counts)
