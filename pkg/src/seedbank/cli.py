"""Command-line front end: ``seedbank {tmrca,mixing,verify}``.

Every flag can also be set through an environment variable named
``SEEDBANK_<FLAG>`` (upper case, dashes as underscores); explicit flags win.
Exit codes: 0 ok, 1 usage, 2 runtime, 3 verification failure.
"""
from __future__ import annotations

import argparse
import dataclasses
import itertools
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import serialize, stats, urn, verify
from .errors import DomainError, SeedBankError
from .genealogy import DEFAULT_MAX_EVENTS, run_replicates
from .model import SeedBankParams, parse_gamma, validate

log = logging.getLogger("seedbank")

ENV_PREFIX = "SEEDBANK_"
EXIT_OK, EXIT_USAGE, EXIT_RUNTIME, EXIT_VERIFY = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _env(flag: str, default):
    return os.environ.get(ENV_PREFIX + flag.lstrip("-").replace("-", "_").upper(), default)


def _floats(text: str) -> list[float]:
    return [float(v) for v in str(text).split(",") if v.strip()]


def _ints(text: str) -> list[int]:
    out = []
    for v in str(text).split(","):
        if v.strip():
            f = float(v)
            if not f.is_integer():
                raise argparse.ArgumentTypeError(f"not an integer: {v}")
            out.append(int(f))
    return out


def _add(p, flag, **kw):
    if "default" in kw:
        kw["default"] = _env(flag, kw["default"])
    p.add_argument(flag, **kw)


def _common(p, grid=True):
    if grid:
        _add(p, "--n", type=_ints, default="10000", help="population sizes, comma separated")
        _add(p, "--beta", type=_floats, default="0.2", help="seed-bank exponents")
        _add(p, "--eps", type=_floats, default="0.5", help="long-jump probabilities")
    _add(p, "--seed", type=int, default=1, help="master seed")
    _add(p, "--out", type=Path, default="seedbank_out", help="output directory")
    _add(p, "--format", choices=("csv", "json"), default="csv")
    _add(p, "--threads", type=int, default=1, help="worker processes")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="seedbank", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    t = sub.add_parser("tmrca", help="simulate T_MRCA(m) over a parameter grid")
    _common(t)
    _add(t, "--m", type=int, default=2, help="sample size (>= 2)")
    _add(t, "--gamma", default="d0", help="d0 | dK | uniform:k | stationary | s1:w1,s2:w2")
    _add(t, "--replicates", type=int, default=1000)
    _add(t, "--bins", type=int, default=50)
    _add(t, "--max-events", type=int, default=DEFAULT_MAX_EVENTS)
    _add(t, "--sampler", choices=("auto", "fast", "thinned", "renewal", "brute"), default="auto")

    mx = sub.add_parser("mixing", help="exact TV decay of the urn chain")
    _common(mx)
    _add(mx, "--initial", default="worst", help="worst | d0 | dK | uniform:k | stationary | explicit")
    _add(mx, "--max-steps", type=int, default=0, help="0 means ceil(N^(3 beta + 0.1))")
    _add(mx, "--tail-tol", type=float, default=1e-10)

    v = sub.add_parser("verify", help="oracle triangle and property checks")
    _common(v, grid=False)
    v.set_defaults(seed=int(_env("--seed", 2024)))
    _add(v, "--replicates", type=int, default=0, help="0 means 5000 (1000 with --quick)")
    v.add_argument("--quick", action="store_true")
    v.add_argument("--inject-fault", action="store_true",
                   help="skew epsilon in the fast sampler (negative control)")
    return parser


def _grid(args) -> list[SeedBankParams]:
    try:
        return [validate(N, b, e) for N, b, e in itertools.product(args.n, args.beta, args.eps)]
    except DomainError as exc:
        raise UsageError(str(exc)) from None


def _config(args) -> dict:
    # worker count, verbosity and output location must not change output bytes
    skip = {"threads", "verbose", "out"}
    return {k: (str(v) if isinstance(v, Path) else v)
            for k, v in sorted(vars(args).items()) if k not in skip}


def _stem(kind: str, p: SeedBankParams, extra: str = "") -> str:
    return f"{kind}_N{p.N}_beta{p.beta!r}_eps{p.epsilon!r}{extra}"


def _advise(p: SeedBankParams):
    if not p.in_kingman_regime:
        print(f"note: beta={p.beta} >= 1/4 lies outside the range where the Kingman "
              "limit is proven; results are exploratory", file=sys.stderr)


def cmd_tmrca(args) -> int:
    if args.m < 2:
        raise UsageError("--m must be >= 2")
    if args.replicates < 1:
        raise UsageError("--replicates must be >= 1")
    grid = _grid(args)
    config = _config(args)
    rows = []
    for p in grid:
        _advise(p)
        try:
            gamma = parse_gamma(args.gamma, p)
        except DomainError as exc:
            raise UsageError(str(exc)) from None
        s = run_replicates(p, args.m, gamma, args.replicates, args.seed, args.sampler,
                           args.threads, args.max_events)
        fit = stats.summarize(s.scaled)
        hist = stats.histogram(s.scaled, args.bins)
        stem = _stem("tmrca", p, f"_m{args.m}")
        meta = {"config": config, **s.header()}
        if s.event_counts is not None:
            meta["merger_events"] = s.event_counts
        if args.format == "csv":
            serialize.write(args.out / f"{stem}.csv", serialize.sampleset_csv(s, {"config": config}))
            serialize.write(args.out / f"{stem}_hist.csv", serialize.histogram_csv(hist, meta))
            serialize.write(args.out / f"{stem}_fit.csv", serialize.fit_csv(fit, meta))
        else:
            doc = {**serialize.sampleset_json(s, {"config": config}), "fit": fit.as_dict(),
                   "histogram": serialize.histogram_json(hist)}
            if s.event_counts is not None:
                doc["merger_events"] = s.event_counts
            serialize.write(args.out / f"{stem}.json", serialize.dumps(doc))
        lower = p.tmrca_lower_bound
        rows.append([p.N, p.beta, p.epsilon, p.B, args.m, fit.mean, fit.std_error,
                     fit.ks_p_value, float(s.values.mean()), lower])
    cols = ["N", "beta", "eps", "B", "m", "scaled_mean", "scaled_sd", "ks_p", "mean_generations",
            "lower_bound"]
    _emit_summary(args, "tmrca_summary", cols, rows, config)
    print(f"{'N':>8} {'beta':>7} {'eps':>6} {'B':>5} {'m':>3} {'T_bar':>8} {'sd':>8} {'KS p':>8}")
    for r in rows:
        print(f"{r[0]:>8} {r[1]:>7.4g} {r[2]:>6.3g} {r[3]:>5} {r[4]:>3} {r[5]:>8.4f} {r[6]:>8.4f} {r[7]:>8.3g}")
    return EXIT_OK


def _emit_summary(args, name, cols, rows, config):
    if args.format == "csv":
        serialize.write(args.out / f"{name}.csv", serialize.csv_text(cols, rows, {"config": config}))
    else:
        doc = {"config": config, "rows": [dict(zip(cols, r)) for r in rows]}
        serialize.write(args.out / f"{name}.json", serialize.dumps(doc))


def cmd_mixing(args) -> int:
    grid = _grid(args)
    config = _config(args)
    rows = []
    for p in grid:
        _advise(p)
        try:
            if args.initial == "worst":
                initial = urn.worst_case_initial(p)
            else:
                initial = parse_gamma(args.initial, p)
        except DomainError as exc:
            raise UsageError(str(exc)) from None
        bound = p.N ** (3 * p.beta + 0.1)
        steps = args.max_steps or math.ceil(bound)
        tv = urn.tv_decay_curve(initial, steps, p)
        below = np.flatnonzero(tv <= 0.25)
        first = int(below[0]) if below.size else None
        gtv = urn.geometric_time_tv(initial, p, args.tail_tol)
        nu = urn.stationary(p)
        stem = _stem("mixing", p)
        meta = {"config": config, **p.as_dict(), "initial": args.initial}
        if args.format == "csv":
            serialize.write(args.out / f"{stem}.csv",
                            serialize.csv_text(["step", "tv"], enumerate(tv.tolist()), meta))
            serialize.write(args.out / f"{_stem('stationary', p)}.csv",
                            serialize.distribution_csv(nu, meta))
        else:
            doc = {"header": meta, "tv": tv, "stationary": serialize.distribution_json(nu),
                   "first_step_below_quarter": first,
                   "geometric_time_tv": gtv._asdict()}
            serialize.write(args.out / f"{stem}.json", serialize.dumps(doc))
        rows.append([p.N, p.beta, p.epsilon, p.B, steps, "" if first is None else first,
                     bound, gtv.value, gtv.error_bound, p.N ** -p.beta])
    cols = ["N", "beta", "eps", "B", "max_steps", "first_step_below_quarter",
            "bound_N^(3beta+0.1)", "geometric_time_tv", "geometric_tv_error", "N^-beta"]
    _emit_summary(args, "mixing_summary", cols, rows, config)
    for r in rows:
        print(f"N={r[0]} beta={r[1]:.4g} eps={r[2]:.3g} B={r[3]} t_mix(1/4)={r[5]} "
              f"bound={r[6]:.4g} tv_geom={r[7]:.3e}")
    return EXIT_OK


def cmd_verify(args) -> int:
    checks = verify.run(args.seed, args.replicates or None, args.quick, args.inject_fault)
    failed = [c.name for c in checks if not c.passed]
    report = {"config": _config(args), "passed": not failed, "failed": failed,
              "checks": [dataclasses.asdict(c) for c in checks]}
    serialize.write(args.out / "verify_report.json", serialize.dumps(report))
    print(f"{len(checks) - len(failed)}/{len(checks)} checks passed")
    for name in failed:
        print(f"FAILED {name}")
    return EXIT_OK if not failed else EXIT_VERIFY


COMMANDS = {"tmrca": cmd_tmrca, "mixing": cmd_mixing, "verify": cmd_verify}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"seedbank: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SeedBankError, OSError) as exc:
        print(f"seedbank: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
