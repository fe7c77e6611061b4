"""Slow reference implementations used to check the fast samplers."""
from __future__ import annotations

import dataclasses
import itertools

import numpy as np
import scipy.linalg

from .errors import DomainError, ResourceError, SingularSystemError
from .genealogy import RenewalLine
from .model import InitialDistribution, SeedBankParams

DEFAULT_MAX_GENERATIONS = 10**8
DEFAULT_MAX_STATES = 4096


def _gamma(params, gamma):
    gamma = InitialDistribution.delta(0) if gamma is None else gamma
    gamma.check_support(params)
    return gamma


def brute_force_tmrca2(params: SeedBankParams, gamma: InitialDistribution | None = None,
                       rng: np.random.Generator | None = None,
                       max_generations: int = DEFAULT_MAX_GENERATIONS) -> int:
    """Walk back one generation at a time until two lines share an ancestor.

    In every generation visited by both lines each draws a label on
    ``{0, ..., N-1}``; the first generation with equal labels is returned.
    """
    gamma = _gamma(params, gamma)
    rng = np.random.default_rng() if rng is None else rng
    lines = [RenewalLine(params, s, rng) for s in gamma.sample(rng, 2)]
    for line in lines:
        if line.current_generation == 0:
            line.advance()
    for k in itertools.count(1):
        if k > max_generations:
            raise ResourceError(f"no common ancestor within {max_generations} generations")
        present = [line.current_generation == k for line in lines]
        if all(present) and rng.integers(params.N) == rng.integers(params.N):
            return k
        for line, here in zip(lines, present):
            if here:
                line.advance()


def brute_force_tmrca2_batch(params: SeedBankParams, gamma: InitialDistribution | None,
                             size: int, rng: np.random.Generator,
                             max_generations: int = DEFAULT_MAX_GENERATIONS) -> np.ndarray:
    """``size`` independent draws of :func:`brute_force_tmrca2`, stepped in lockstep."""
    gamma = _gamma(params, gamma)
    B, eps, N = params.B, params.epsilon, params.N

    def jumps(n):
        return np.where(rng.random(n) < eps, B, 1)

    nxt = gamma.sample(rng, 2 * size).reshape(size, 2)
    at0 = nxt == 0
    nxt[at0] += jumps(int(at0.sum()))
    out = np.zeros(size, dtype=np.int64)
    active = np.arange(size)
    k = 0
    while active.size:
        k += 1
        if k > max_generations:
            raise ResourceError(f"no common ancestor within {max_generations} generations")
        present = nxt[active] == k
        both = present[:, 0] & present[:, 1]
        if both.any():
            idx = active[both]
            labels = rng.integers(N, size=(idx.size, 2))
            out[idx[labels[:, 0] == labels[:, 1]]] = k
        rows, cols = np.nonzero(present)
        nxt[active[rows], cols] += jumps(rows.size)
        active = active[out[active] == 0]
    return out


@dataclasses.dataclass(frozen=True)
class JointUrnChain:
    """Two independent urn chains plus an absorbing 'coalesced' state.

    Pair ``(x, y)`` has index ``x * B + y``; the absorbing state is last.
    Entering ``(0, 0)`` absorbs with probability ``1/N``.
    """

    params: SeedBankParams

    @property
    def n_transient(self) -> int:
        return self.params.B ** 2

    def urn_kernel(self) -> np.ndarray:
        B, eps = self.params.B, self.params.epsilon
        P = np.zeros((B, B))
        P[0, 0] += 1.0 - eps
        P[0, B - 1] += eps
        for x in range(1, B):
            P[x, x - 1] = 1.0
        return P

    def transient_kernel(self) -> np.ndarray:
        P = self.urn_kernel()
        K = np.kron(P, P)
        K[:, 0] *= 1.0 - 1.0 / self.params.N
        return K

    def transition_matrix(self) -> np.ndarray:
        K = self.transient_kernel()
        n = K.shape[0]
        full = np.zeros((n + 1, n + 1))
        full[:n, :n] = K
        full[:n, n] = 1.0 - K.sum(axis=1)
        full[n, n] = 1.0
        return full

    def expected_absorption_times(self) -> tuple[np.ndarray, float]:
        """Solve ``h = 1 + K h``; returns ``h`` and the max-norm residual."""
        K = self.transient_kernel()
        A = np.eye(K.shape[0]) - K
        ones = np.ones(K.shape[0])
        try:
            h = scipy.linalg.solve(A, ones)
        except (scipy.linalg.LinAlgError, ValueError) as exc:
            raise SingularSystemError(str(exc)) from exc
        if not np.all(np.isfinite(h)):
            raise SingularSystemError("non-finite solution")
        residual = float(np.max(np.abs(A @ h - ones)))
        return h, residual


def exact_expected_tmrca2(params: SeedBankParams, gamma: InitialDistribution | None = None,
                          max_states: int = DEFAULT_MAX_STATES) -> float:
    """Expected T_MRCA of two lines by first-step analysis of the joint urn chain."""
    gamma = _gamma(params, gamma)
    chain = JointUrnChain(params)
    if chain.n_transient > max_states:
        raise DomainError(f"B^2 = {chain.n_transient} exceeds the dense-solve limit {max_states}")
    h, _ = chain.expected_absorption_times()
    g = gamma.to_vector(params)
    return float(np.outer(g, g).ravel() @ h)
