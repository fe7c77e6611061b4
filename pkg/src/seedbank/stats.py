"""Summaries, histograms and Kolmogorov-Smirnov checks for T_MRCA samples."""
from __future__ import annotations

import dataclasses
import math

import numpy as np
import scipy.stats

from .errors import DomainError

#: Below this sample size the asymptotic KS p-value is flagged as approximate.
ASYMPTOTIC_MIN_N = 100


@dataclasses.dataclass(frozen=True)
class Histogram:
    bin_edges: np.ndarray
    densities: np.ndarray

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.bin_edges)

    @property
    def total_mass(self) -> float:
        return float(np.sum(self.densities * self.widths))


@dataclasses.dataclass(frozen=True)
class FitReport:
    """Exponential fit by the sample mean; ``std_error`` is the sample sd."""

    mean: float
    std_error: float
    ks_statistic: float
    ks_p_value: float
    n: int

    @property
    def approximate(self) -> bool:
        return self.n < ASYMPTOTIC_MIN_N

    def as_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["approximate"] = self.approximate
        return d


def _positive_sample(samples) -> np.ndarray:
    x = np.asarray(samples, dtype=float).ravel()
    if x.size == 0:
        raise DomainError("empty sample")
    if np.any(~np.isfinite(x)) or np.any(x <= 0):
        raise DomainError("samples must be positive and finite")
    return x


def ks_exponential(samples, mean: float) -> tuple[float, float]:
    """One-sample KS distance to Exponential(mean) with the asymptotic p-value."""
    if not mean > 0:
        raise DomainError(f"mean must be positive, got {mean}")
    x = np.asarray(samples, dtype=float).ravel()
    if x.size == 0:
        raise DomainError("empty sample")
    res = scipy.stats.kstest(x, "expon", args=(0.0, mean), method="asymp")
    return float(res.statistic), float(res.pvalue)


def summarize(samples) -> FitReport:
    x = _positive_sample(samples)
    if x.size < 2:
        raise DomainError("need at least two samples")
    # fsum keeps the mean exactly permutation invariant
    mean = math.fsum(x) / x.size
    sd = math.sqrt(math.fsum((x - mean) ** 2) / (x.size - 1))
    d, p = ks_exponential(x, mean)
    return FitReport(mean, sd, d, p, int(x.size))


def histogram(samples, bins: int = 50) -> Histogram:
    """Equal-width bins on ``[0, max]`` normalised to unit mass."""
    x = np.asarray(samples, dtype=float).ravel()
    if x.size == 0:
        raise DomainError("empty sample")
    if bins < 1:
        raise DomainError("bins must be >= 1")
    if np.any(x < 0):
        raise DomainError("samples must be nonnegative")
    hi = float(x.max()) or 1.0
    counts, edges = np.histogram(x, bins=bins, range=(0.0, hi))
    return Histogram(edges, counts / (x.size * np.diff(edges)))


def exponential_bin_masses(edges, mean: float) -> np.ndarray:
    return np.diff(-np.exp(-np.asarray(edges) / mean))


def ks_geometric(samples, p: float) -> tuple[float, float]:
    """KS distance of integer samples to Geometric(p) on ``{1, 2, ...}``.

    Both distribution functions jump only at integers, so the supremum is
    taken over the integer grid; the continuous-theory p-value is
    conservative here.
    """
    x = np.sort(np.asarray(samples, dtype=np.int64).ravel())
    if x.size == 0:
        raise DomainError("empty sample")
    grid = np.arange(0, int(x[-1]) + 1)
    ecdf = np.searchsorted(x, grid, side="right") / x.size
    cdf = scipy.stats.geom.cdf(grid, p)
    d = float(np.max(np.abs(ecdf - cdf)))
    return d, float(scipy.stats.kstwobign.sf(math.sqrt(x.size) * d))


def geometric_sum(p: float, q: float, size: int, rng: np.random.Generator) -> np.ndarray:
    """Sums of a Geometric(q) number of iid Geometric(p) variables."""
    counts = rng.geometric(q, size=size)
    draws = rng.geometric(p, size=int(counts.sum()))
    starts = np.concatenate(([0], np.cumsum(counts)[:-1]))
    return np.add.reduceat(draws, starts)


def two_sample_ks(a, b) -> tuple[float, float]:
    res = scipy.stats.ks_2samp(np.asarray(a), np.asarray(b))
    return float(res.statistic), float(res.pvalue)


def mean_and_se(samples) -> tuple[float, float]:
    x = np.asarray(samples, dtype=float)
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(x.size))
