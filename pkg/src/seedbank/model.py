"""Model parameters and initial (sampling) distributions.

The seed-bank age distribution puts mass ``1 - epsilon`` on a jump of one
generation and mass ``epsilon`` on a jump of ``B = floor(N**beta)``
generations.
"""
from __future__ import annotations

import dataclasses
import math
from typing import Mapping, Sequence

import numpy as np

from .errors import DomainError

# Relative slack used when N**beta is an integer up to rounding.
_FLOOR_SLACK = 1e-9


def _jump_length(N: int, beta: float) -> int:
    x = N**beta
    r = round(x)
    if abs(x - r) <= _FLOOR_SLACK * max(1.0, x):
        return int(r)
    return int(math.floor(x))


@dataclasses.dataclass(frozen=True)
class SeedBankParams:
    """Population size, seed-bank exponent and long-jump probability.

    ``B`` and ``mean_jump`` are derived on construction. ``B == 1`` is the
    classical Wright-Fisher model.
    """

    N: int
    beta: float
    epsilon: float
    B: int = dataclasses.field(init=False)
    mean_jump: float = dataclasses.field(init=False)

    def __post_init__(self):
        if isinstance(self.N, bool) or not isinstance(self.N, (int, float, np.integer)) \
                or not float(self.N).is_integer():
            raise DomainError(f"N must be an integer, got {self.N!r}")
        object.__setattr__(self, "N", int(self.N))
        if self.N < 2:
            raise DomainError(f"N must be >= 2, got {self.N}")
        if not (self.beta > 0 and math.isfinite(self.beta)):
            raise DomainError(f"beta must be > 0, got {self.beta}")
        if not 0.0 < self.epsilon < 1.0:
            raise DomainError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        B = _jump_length(self.N, self.beta)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "mean_jump", 1.0 + self.epsilon * (B - 1))

    @classmethod
    def from_jump(cls, N: int, B: int, epsilon: float) -> "SeedBankParams":
        """Build parameters with a prescribed jump length ``B``."""
        if N < 2 or B < 1:
            raise DomainError(f"need N >= 2 and B >= 1, got N={N}, B={B}")
        if B == 1:
            beta = math.log(1.5) / math.log(N)
        else:
            beta = math.log(B) / math.log(N)
        params = cls(N, beta, epsilon)
        if params.B != B:
            raise DomainError(f"cannot represent B={B} for N={N}")
        return params

    @property
    def time_scale(self) -> float:
        """Generations per unit of coalescent time, ``eps^2 N^(1+2 beta)``."""
        return self.epsilon**2 * float(self.N) ** (1.0 + 2.0 * self.beta)

    @property
    def tmrca_lower_bound(self) -> float:
        """``max(eps N B, N)``: the mean T_MRCA is at least this for large N.

        Uses the integer jump length in place of ``N**beta``.
        """
        return max(self.epsilon * self.N * self.B, float(self.N))

    @property
    def in_kingman_regime(self) -> bool:
        return self.beta < 0.25

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


def validate(N, beta, epsilon) -> SeedBankParams:
    """Check raw parameter values and return the derived configuration."""
    try:
        beta, epsilon = float(beta), float(epsilon)
    except (TypeError, ValueError):
        raise DomainError(f"beta and epsilon must be real, got {beta!r}, {epsilon!r}") from None
    return SeedBankParams(N, beta, epsilon)


def sample_increment(params: SeedBankParams, rng: np.random.Generator, size=None):
    """Draw generation gaps from the seed-bank age distribution."""
    long_jump = rng.random(size) < params.epsilon
    if size is None:
        return params.B if long_jump else 1
    return np.where(long_jump, params.B, 1)


@dataclasses.dataclass(frozen=True)
class InitialDistribution:
    """Finite sampling measure for starting generations (or urn states).

    ``kind`` is ``"explicit"`` or ``"stationary"``; a stationary distribution
    carries the urn chain's invariant law for a particular parameter set.
    """

    states: tuple
    weights: tuple
    kind: str = "explicit"

    def __post_init__(self):
        if len(self.states) == 0 or len(self.states) != len(self.weights):
            raise DomainError("states and weights must be nonempty and of equal length")
        if len(set(self.states)) != len(self.states):
            raise DomainError("states must be distinct")
        if any(s < 0 for s in self.states):
            raise DomainError("states must be nonnegative")
        if any(not w > 0 for w in self.weights):
            raise DomainError("weights must be strictly positive")
        if abs(math.fsum(self.weights) - 1.0) > 1e-12:
            raise DomainError(f"weights sum to {math.fsum(self.weights)!r}, not 1")
        if self.kind not in ("explicit", "stationary"):
            raise DomainError(f"unknown kind {self.kind!r}")

    @classmethod
    def delta(cls, state: int = 0) -> "InitialDistribution":
        return cls((int(state),), (1.0,))

    @classmethod
    def uniform(cls, k: int) -> "InitialDistribution":
        """Uniform on ``{0, ..., k}``."""
        if k < 0:
            raise DomainError(f"uniform upper state must be >= 0, got {k}")
        n = k + 1
        return cls(tuple(range(n)), (1.0 / n,) * n) if n > 1 else cls.delta(0)

    @classmethod
    def from_weights(cls, weights: Mapping[int, float] | Sequence[tuple[int, float]],
                     normalize_tol: float = 0.0) -> "InitialDistribution":
        """Explicit distribution; weights off by at most ``normalize_tol`` are rescaled."""
        items = sorted(dict(weights).items())
        total = math.fsum(w for _, w in items)
        if abs(total - 1.0) > normalize_tol and abs(total - 1.0) > 1e-12:
            raise DomainError(f"weights sum to {total!r}, not 1")
        return cls(tuple(int(s) for s, _ in items), tuple(w / total for _, w in items))

    @classmethod
    def stationary(cls, params: SeedBankParams) -> "InitialDistribution":
        from .urn import stationary

        nu = stationary(params)
        weights = tuple(float(w) for w in nu / math.fsum(nu))
        return cls(tuple(range(params.B)), weights, kind="stationary")

    def check_support(self, params: SeedBankParams) -> None:
        if max(self.states) > params.B - 1:
            raise DomainError(
                f"initial support {max(self.states)} exceeds urn states 0..{params.B - 1}"
            )

    def to_vector(self, params: SeedBankParams) -> np.ndarray:
        """Mass vector over the urn states ``0..B-1``."""
        self.check_support(params)
        v = np.zeros(params.B)
        v[list(self.states)] = self.weights
        return v

    def sample(self, rng: np.random.Generator, size: int | None = None):
        if len(self.states) == 1:
            if size is None:
                return self.states[0]
            return np.full(size, self.states[0], dtype=np.int64)
        idx = rng.choice(len(self.states), size=size, p=np.asarray(self.weights))
        states = np.asarray(self.states, dtype=np.int64)
        return int(states[idx]) if size is None else states[idx]

    def describe(self) -> str:
        if self.kind == "stationary":
            return "stationary"
        if len(self.states) == 1:
            return f"d{self.states[0]}"
        return ",".join(f"{s}:{w!r}" for s, w in zip(self.states, self.weights))


def parse_gamma(spec: str, params: SeedBankParams | None = None) -> InitialDistribution:
    """Parse ``d0``, ``dK``, ``uniform:k``, ``stationary`` or ``s1:w1,s2:w2,...``.

    Explicit weights off from unit mass by less than 1e-6 are renormalised.
    """
    spec = spec.strip()
    if spec.startswith("d") and spec[1:].isdigit():
        gamma = InitialDistribution.delta(int(spec[1:]))
    elif spec.startswith("uniform:"):
        k = int(spec.split(":", 1)[1])
        gamma = InitialDistribution.uniform(k)
    elif spec == "stationary":
        if params is None:
            raise DomainError("the stationary initial distribution needs parameters")
        return InitialDistribution.stationary(params)
    else:
        try:
            pairs = [item.split(":") for item in spec.split(",")]
            weights = {int(s): float(w) for s, w in pairs}
        except ValueError:
            raise DomainError(f"cannot parse initial distribution {spec!r}") from None
        gamma = InitialDistribution.from_weights(weights, normalize_tol=1e-6)
    if params is not None:
        gamma.check_support(params)
    return gamma
