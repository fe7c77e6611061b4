"""Oracle triangle and property checks behind ``seedbank verify``."""
from __future__ import annotations

import dataclasses
import itertools
import math

import numpy as np

from . import genealogy, oracle, stats, urn
from .model import SeedBankParams

FULL_GRID = (tuple(itertools.product((4, 20, 50), (1, 2, 4), (0.2, 0.5, 0.8))))
QUICK_GRID = (tuple(itertools.product((4, 20), (1, 2, 4), (0.5,))))

SIGMAS = 3.0
KS_ALPHA = 0.01


def derive_seed(seed: int, *keys: int) -> int:
    return int(np.random.SeedSequence([seed, *keys]).generate_state(1, np.uint64)[0])


@dataclasses.dataclass
class Check:
    name: str
    passed: bool
    detail: dict


def triangle(params: SeedBankParams, replicates: int, seed: int,
             fast_params: SeedBankParams | None = None) -> list[Check]:
    """Exact mean, brute-force mean and fast-sampler mean must agree pairwise.

    ``fast_params`` lets a caller feed the fast sampler different parameters
    (used as a negative control).
    """
    fast_params = params if fast_params is None else fast_params
    tag = f"N={params.N},B={params.B},eps={params.epsilon}"
    chain = oracle.JointUrnChain(params)
    _, residual = chain.expected_absorption_times()
    exact = oracle.exact_expected_tmrca2(params)
    brute = oracle.brute_force_tmrca2_batch(params, None, replicates,
                                            np.random.default_rng(derive_seed(seed, 0)))
    fast = genealogy.run_replicates(fast_params, 2, None, replicates,
                                    derive_seed(seed, 1), sampler="fast").values
    mb, sb = stats.mean_and_se(brute)
    mf, sf = stats.mean_and_se(fast)
    _, p = stats.two_sample_ks(brute, fast)
    common = {"exact": exact, "brute_mean": mb, "brute_se": sb, "fast_mean": mf, "fast_se": sf}
    return [
        Check(f"residual[{tag}]", residual < 1e-10, {"residual": residual}),
        Check(f"exact~brute[{tag}]", abs(exact - mb) <= SIGMAS * sb, common),
        Check(f"exact~fast[{tag}]", abs(exact - mf) <= SIGMAS * sf, common),
        Check(f"brute~fast[{tag}]", abs(mb - mf) <= SIGMAS * math.hypot(sb, sf), common),
        Check(f"ks(brute,fast)[{tag}]", p > KS_ALPHA, {"p_value": p}),
        Check(f"prop1_bound[{tag}]", exact >= params.tmrca_lower_bound * (1 - 1e-9),
              {"exact": exact, "bound": params.tmrca_lower_bound}),
    ]


def property_checks(seed: int, quick: bool) -> list[Check]:
    out = []
    for N, beta, eps in itertools.product((100, 10_000), (0.2, 0.5), (0.1, 0.5, 0.9)):
        p = SeedBankParams(N, beta, eps)
        nu = urn.stationary(p)
        moved = urn.evolve_exact(nu, 10_000 if quick else 1_000_000, p)
        out.append(Check(f"stationary[N={N},beta={beta},eps={eps}]",
                         float(np.max(np.abs(moved - nu))) <= 1e-12 and nu[0] == 1 / p.mean_jump,
                         {"max_dev": float(np.max(np.abs(moved - nu)))}))
        tv = urn.tv_decay_curve(urn.worst_case_initial(p), 2000, p)
        out.append(Check(f"tv_monotone[N={N},beta={beta},eps={eps}]",
                         urn.is_nonincreasing(tv), {"max_increase": float(np.max(np.diff(tv)))}))
    n = 20_000 if quick else 100_000
    sums = stats.geometric_sum(0.1, 0.1, n, np.random.default_rng(derive_seed(seed, 2)))
    d, p = stats.ks_geometric(sums, 0.01)
    out.append(Check("geometric_sum", p > KS_ALPHA, {"ks": d, "p_value": p}))
    return out


def run(seed: int = 2024, replicates: int | None = None, quick: bool = False,
        inject_fault: bool = False) -> list[Check]:
    grid = QUICK_GRID if quick else FULL_GRID
    replicates = replicates or (1000 if quick else 5000)
    checks = []
    for i, (N, B, eps) in enumerate(grid):
        params = SeedBankParams.from_jump(N, B, eps)
        fast_params = None
        if inject_fault:
            fast_params = SeedBankParams.from_jump(N, B, min(0.95, eps * 1.5))
        checks.extend(triangle(params, replicates, derive_seed(seed, 10, i), fast_params))
    checks.extend(property_checks(seed, quick))
    return checks
