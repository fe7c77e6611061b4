"""Acceptance criteria, one test each.

Run with ``pytest tests/test_acceptance.py -s`` to see the PASS/FAIL lines as they
happen; they are also repeated in the terminal summary. Seeds are fixed.
"""
import functools
import math
import time

import numpy as np
import pytest

from seedbank import stats, urn, verify
from seedbank.cli import main
from seedbank.genealogy import run_replicates
from seedbank.model import InitialDistribution, SeedBankParams, validate
from seedbank.oracle import exact_expected_tmrca2

pytestmark = pytest.mark.slow

N4 = 10_000
FIG_GRID = [(beta, eps) for beta in (1 / 3, 1 / 2) for eps in (0.25, 0.5)]


@functools.lru_cache(maxsize=None)
def samples(N, beta, eps, m, replicates, seed):
    return run_replicates(validate(N, beta, eps), m, InitialDistribution.delta(0), replicates, seed)


def test_criterion_1_kingman_means(report):
    p = validate(N4, 0.2, 0.5)
    two = stats.summarize(samples(N4, 0.2, 0.5, 2, 5000, 1).scaled)
    five = stats.summarize(samples(N4, 0.2, 0.5, 5, 5000, 2).scaled)
    exact = exact_expected_tmrca2(p) / p.time_scale
    ok2 = 0.9 <= two.mean <= 1.1
    ok5 = abs(five.mean - 1.6) <= 0.16
    report("criterion 1 (m=2 scaled mean in [0.9, 1.1])", ok2,
           f"mean={two.mean:.4f} (exact finite-N value {exact:.4f})")
    report("criterion 1 (m=5 scaled mean within 10% of 1.6)", ok5, f"mean={five.mean:.4f}")
    assert ok2 and ok5


def test_criterion_2_exponential_fit_and_trend(report):
    ok = True
    for beta in (1 / 3, 1 / 2):
        dev = []
        for k, eps in enumerate((0.25, 0.5)):
            fit = stats.summarize(samples(N4, beta, eps, 2, 2000, 10 + k + int(beta * 10)).scaled)
            fit_ok = fit.ks_p_value > 0.01
            ok &= fit_ok
            dev.append(abs(fit.mean - 1))
            report(f"criterion 2 (beta={beta:.4g}, eps={eps} KS p > 0.01)", fit_ok,
                   f"p={fit.ks_p_value:.3g} mean={fit.mean:.4f}")
        trend = dev[1] < dev[0]
        ok &= trend
        report(f"criterion 2 (beta={beta:.4g} |T-1| decreases in eps)", trend,
               f"|T-1| = {dev[0]:.4f} -> {dev[1]:.4f}")
    assert ok


@pytest.mark.parametrize("N", [100, 10_000])
@pytest.mark.parametrize("beta", [0.2, 0.5])
@pytest.mark.parametrize("eps", [0.1, 0.5, 0.9])
def test_criterion_3_stationary_fixed_point(report, N, beta, eps):
    p = validate(N, beta, eps)
    nu = urn.stationary(p)
    err = float(np.max(np.abs(urn.evolve_exact(nu, 10**6, p) - nu)))
    ok = err <= 1e-12 and nu[0] == 1 / (1 + eps * (p.B - 1))
    report(f"criterion 3 (N={N}, beta={beta}, eps={eps})", ok, f"max deviation {err:.2e}")
    assert ok


def test_criterion_4_oracle_triangle(report):
    start = time.perf_counter()
    checks = []
    for i, (N, B, eps) in enumerate(verify.FULL_GRID):
        checks += verify.triangle(SeedBankParams.from_jump(N, B, eps), 5000, 4000 + i)
    elapsed = time.perf_counter() - start
    failed = [c.name for c in checks if not c.passed]
    ok = not failed and elapsed < 300
    report("criterion 4 (oracle triangle, n=5000)", ok,
           f"{len(checks) - len(failed)}/{len(checks)} checks in {elapsed:.1f}s"
           + (f"; failed: {failed}" if failed else ""))
    assert ok


def test_criterion_5_lower_bound(report):
    ok = True
    runs = [(0.2, 0.5, 2, 5000, 1), (0.2, 0.5, 5, 5000, 2)]
    runs += [(b, e, 2, 2000, 10 + k + int(b * 10)) for b in (1 / 3, 1 / 2)
             for k, e in enumerate((0.25, 0.5))]
    for beta, eps, m, reps, seed in runs:
        mean = samples(N4, beta, eps, m, reps, seed).values.mean()
        bound = max(eps * N4 ** (1 + beta), N4)
        here = mean >= bound
        ok &= here
        report(f"criterion 5 (beta={beta:.4g}, eps={eps}, m={m})", here,
               f"mean={mean:.4g} bound={bound:.4g}")
    assert ok


@pytest.mark.parametrize("N", [1000, 10_000])
@pytest.mark.parametrize("beta", [0.1, 0.2])
def test_criterion_6_mixing(report, N, beta):
    p = validate(N, beta, 0.5)
    bound = N ** (3 * beta + 0.1)
    tv = urn.tv_decay_curve(urn.worst_case_initial(p), math.ceil(bound), p)
    below = np.flatnonzero(tv <= 0.25)
    ok = urn.is_nonincreasing(tv) and below.size > 0 and below[0] <= bound
    report(f"criterion 6 (N={N}, beta={beta})", ok,
           f"first step <= 1/4: {below[0] if below.size else None}, bound {bound:.1f}")
    assert ok


def test_criterion_7_merger_negligibility(report):
    fractions, raw = {}, {}
    for N, seed in ((10_000, 70), (100_000, 71)):
        counts = run_replicates(validate(N, 0.2, 0.5), 5, None, 10_000, seed).event_counts
        fractions[N] = (counts["multiple"] + counts["simultaneous"]) / sum(counts.values())
        raw[N] = counts
    ok = fractions[10_000] < 0.01 and fractions[100_000] < fractions[10_000]
    report("criterion 7 (non-binary merger fraction)", ok,
           f"N=1e4: {fractions[10_000]:.2e} {raw[10_000]}, "
           f"N=1e5: {fractions[100_000]:.2e} {raw[100_000]}")
    assert ok


def test_criterion_8_geometric_composition(report):
    x = stats.geometric_sum(0.1, 0.1, 100_000, np.random.default_rng(8))
    _, pval = stats.ks_geometric(x, 0.01)
    ok = pval > 0.01
    report("criterion 8 (geometric composition KS)", ok, f"p={pval:.3g}")
    assert ok


def test_criterion_9_determinism(report, tmp_path):
    def snapshot(threads, run):
        out = tmp_path / f"{threads}_{run}"
        for argv in (["tmrca", "--n", "1000,10000", "--beta", "0.2,0.5", "--eps", "0.5",
                      "--m", "2", "--replicates", "60"],
                     ["tmrca", "--n", "10000", "--beta", "0.2", "--m", "5", "--replicates", "60",
                      "--format", "json"],
                     ["mixing", "--n", "1000", "--beta", "0.2"]):
            assert main(argv + ["--seed", "9", "--threads", str(threads), "--out", str(out)]) == 0
        return {p.name: p.read_bytes() for p in sorted(out.iterdir())}

    base = snapshot(1, 0)
    ok = all(snapshot(t, r) == base for t, r in ((1, 1), (2, 0), (4, 0)))
    report("criterion 9 (byte-identical outputs across runs and thread counts)", ok,
           f"{len(base)} files compared")
    assert ok
