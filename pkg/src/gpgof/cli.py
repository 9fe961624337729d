"""Command-line front end: ``gpgof test | simulate | diagnose``.

Exit status is 0 on success, 2 on bad input (unreadable or invalid data,
malformed config, domain errors) and 1 on anything unexpected.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .alternatives import GRAMMAR, AlternativeSpec
from .bootstrap import ALL_STATISTICS, bootstrap_tests
from .counts import CountSample
from .families import ComputationError, DomainError, EstimationError, FamilySpec, estimate_moments
from .harness import ConfigError, SimConfig, run_diagnostics, run_experiment

EXIT_OK, EXIT_INTERNAL, EXIT_USER = 0, 1, 2
THREADS_ENV = "GPGOF_THREADS"


class UserError(Exception):
    pass


def read_data(path, fmt: str = "raw") -> CountSample:
    """Load a sample: ``raw`` is whitespace-separated counts, ``freq`` is ``value,count`` CSV."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UserError(f"cannot read {path}: {exc.strerror or exc}") from None
    if fmt == "raw":
        tokens = text.split()
        if not tokens:
            raise UserError("empty sample")
        try:
            values = [int(t) for t in tokens]
        except ValueError as exc:
            raise UserError(f"non-integer value in {path}: {exc}") from None
        if min(values) < 0:
            raise UserError(f"negative value {min(values)} in {path}")
        return CountSample(np.array(values, dtype=np.int64))
    if fmt == "freq":
        values, counts = [], []
        for lineno, row in enumerate(csv.reader(io.StringIO(text)), 1):
            if not row or not "".join(row).strip():
                continue
            if len(row) != 2:
                raise UserError(f"{path}:{lineno}: expected 'value,count'")
            try:
                v, c = int(row[0]), int(row[1])
            except ValueError:
                raise UserError(f"{path}:{lineno}: non-integer field") from None
            if v < 0:
                raise UserError(f"{path}:{lineno}: negative value {v}")
            if c < 1:
                raise UserError(f"{path}:{lineno}: count must be >= 1")
            values.append(v)
            counts.append(c)
        if not values:
            raise UserError("empty sample")
        return CountSample.from_frequencies(values, counts)
    raise UserError(f"unknown format {fmt!r}")


def _threads(arg) -> int:
    if arg is not None:
        return arg
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise UserError(f"{THREADS_ENV} must be an integer, got {env!r}") from None
    return 1


def _positive(name):
    def conv(text):
        try:
            value = int(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{name} must be an integer") from None
        if value < 1:
            raise argparse.ArgumentTypeError(f"{name} must be >= 1")
        return value

    return conv


# -- test ------------------------------------------------------------------


def _format_test(fmt, spec, fit, results) -> str:
    if fmt == "json":
        doc = {
            "family": str(spec),
            "lambda": fit.lam,
            "theta": fit.theta,
            "results": {k: r.to_dict() for k, r in results.items()},
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["family", "lambda", "theta", "statistic", "observed", "p_value", "reject"])
        for k, r in results.items():
            w.writerow([str(spec), repr(fit.lam), repr(fit.theta), k, repr(r.observed), repr(r.p_value), r.reject])
        return buf.getvalue()
    first = next(iter(results.values()))
    lines = [
        f"family: {spec}",
        f"lambda_hat = {fit.lam:.6g}   theta_hat = {fit.theta:.6g}",
        f"bootstrap B = {first.b}, alpha = {first.alpha:g}",
        "",
        f"{'statistic':<10}{'observed':>14}{'p-value':>10}  decision",
    ]
    for k, r in results.items():
        decision = "reject" if r.reject else "accept"
        lines.append(f"{k:<10}{r.observed:>14.6g}{r.p_value:>10.4f}  {decision}")
    if "s4" in results and "s5" in results and results["s4"].reject != results["s5"].reject:
        lines += [
            "",
            "note: S4 and S5 disagree. S5 favours departures at larger k, S4 at small k;",
            "      run `gpgof diagnose` against a suspected alternative to pick one.",
        ]
    return "\n".join(lines) + "\n"


def cmd_test(args) -> int:
    spec = FamilySpec.parse(args.family)
    sample = read_data(args.data, args.format)
    stats = ALL_STATISTICS if args.stat == "all" else (args.stat,)
    fit = estimate_moments(spec, sample)
    results = bootstrap_tests(sample, spec, stats, b=args.bootstrap, alpha=args.alpha, seed=args.seed)
    sys.stdout.write(_format_test(args.out, spec, fit, results))
    return EXIT_OK


# -- simulate --------------------------------------------------------------


def cmd_simulate(args) -> int:
    try:
        text = Path(args.config).read_text()
    except OSError as exc:
        raise UserError(f"cannot read {args.config}: {exc.strerror or exc}") from None
    config = SimConfig.from_ini(text)
    result = run_experiment(config, workers=_threads(args.threads))
    csv_path, json_path = result.write(args.out_dir)
    flagged = sorted({(a, n) for (a, n), c in result.cells.items() if c.flagged})
    for a, n in flagged:
        print(f"warning: {a} n={n}: more than 10% of replicates failed", file=sys.stderr)
    print(f"wrote {csv_path} and {json_path}")
    return EXIT_OK


# -- diagnose --------------------------------------------------------------


def cmd_diagnose(args) -> int:
    spec = FamilySpec.parse(args.family)
    try:
        alt = AlternativeSpec.parse(args.alt)
    except DomainError as exc:
        raise UserError(f"{exc}") from None
    diag = run_diagnostics(spec, alt, n=args.n, reps=args.reps, seed=args.seed, workers=_threads(args.threads))
    if args.out == "json":
        doc = {
            "family": str(spec),
            "alternative": alt.descriptor,
            "n": args.n,
            "reps": args.reps,
            "avg_abs_d": diag.avg_abs_d.tolist(),
            "max": diag.max_value,
            "argmax": diag.argmax_k,
            "recommendation": diag.recommendation.value,
            "failures": diag.failures,
        }
        sys.stdout.write(json.dumps(doc, indent=2, sort_keys=True) + "\n")
        return EXIT_OK
    print(f"null {spec}, alternative {alt.label}, n = {args.n}, reps = {diag.reps_used} ({diag.failures} failed)")
    print("k         " + "".join(f"{k:>7d}" for k in range(diag.avg_abs_d.size)))
    print("avg|d_k|  " + "".join(f"{v:>7.3f}" for v in diag.avg_abs_d))
    print(f"max {diag.max_value:.3f} at k = {diag.argmax_k}")
    print(f"recommendation: {diag.recommendation.name}")
    return EXIT_OK


# -- entry point -----------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USER, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="gpgof", description="Goodness-of-fit tests for count data in the GP family.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    t = sub.add_parser("test", help="bootstrap goodness-of-fit test of a data file")
    t.add_argument("--family", required=True, help="katz, pp or pb:NU")
    t.add_argument("--data", required=True, help="path to the sample")
    t.add_argument("--format", choices=("raw", "freq"), default="raw")
    t.add_argument("--stat", choices=ALL_STATISTICS + ("all",), default="all", type=str.lower)
    t.add_argument("--bootstrap", type=_positive("--bootstrap"), default=5000)
    t.add_argument("--alpha", type=float, default=0.05)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--out", choices=("text", "json", "csv"), default="text")
    t.set_defaults(func=cmd_test)

    s = sub.add_parser("simulate", help="Monte Carlo size/power experiment from an INI config")
    s.add_argument("--config", required=True)
    s.add_argument("--out-dir", required=True)
    s.add_argument("--threads", type=_positive("--threads"), default=None,
                   help=f"worker processes (default ${THREADS_ENV} or 1)")
    s.set_defaults(func=cmd_simulate)

    d = sub.add_parser("diagnose", help="average recurrence residuals under an alternative")
    d.add_argument("--family", required=True)
    d.add_argument("--alt", required=True, help=GRAMMAR)
    d.add_argument("--n", type=_positive("--n"), default=1000)
    d.add_argument("--reps", type=_positive("--reps"), default=10000)
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--threads", type=_positive("--threads"), default=None)
    d.add_argument("--out", choices=("text", "json"), default="text")
    d.set_defaults(func=cmd_diagnose)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:  # usage errors (2) and --help (0)
        return exc.code if isinstance(exc.code, int) else EXIT_USER
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        if hasattr(args, "alpha") and not 0 < args.alpha < 1:
            raise UserError("--alpha must lie in (0, 1)")
        return args.func(args)
    except ConfigError as exc:
        print(f"error: config key {exc}", file=sys.stderr)
    except (UserError, DomainError, EstimationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
    except ComputationError as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except Exception as exc:  # noqa: BLE001
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    return EXIT_USER


if __name__ == "__main__":
    sys.exit(main())
