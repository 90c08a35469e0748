"""Command line entry point: ``nuisblue {illustrate,verify,localize}``.

Exit codes: 0 success, 1 verification failure, 2 usage or config error.
"""

import argparse
import os
import sys

import numpy as np

from . import illustrative, verification
from .config import load_config
from .exceptions import ConfigError
from .harness import run_campaign
from .plotting import campaign_svg

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def _fmt_matrix(A):
    return np.array2string(np.atleast_2d(A), precision=6, suppress_small=True, floatmode="maxprec")


def _env_seed(default=0):
    raw = os.environ.get("NB_SEED")
    if raw is None:
        return default
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"NB_SEED must be an integer, got {raw!r}")


def cmd_illustrate(args, out=None):
    out = out or sys.stdout
    ok = True
    for name, got, want, tol in illustrative.checks():
        dev = float(np.max(np.abs(got - want)))
        good = dev <= tol
        ok &= good
        print(f"{name}:", file=out)
        print(_fmt_matrix(got), file=out)
        print(f"  max deviation {dev:.3e} (tol {tol:.0e}) {'ok' if good else 'MISMATCH'}", file=out)
        if not good:
            print("  expected:", file=out)
            print(_fmt_matrix(want), file=out)
    print("all golden values match" if ok else "golden value mismatch", file=out)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_verify(args, out=None):
    out = out or sys.stdout
    seed = args.seed if args.seed is not None else _env_seed()
    if args.trials < 1:
        raise ConfigError("--trials must be >= 1")
    fault = None if args.fault == "none" else args.fault
    results = verification.run_all(args.trials, seed, fault)
    print(f"seed {seed}", file=out)
    for r in results:
        print(r.line(), file=out)
    failed = [r for r in results if not r.passed]
    if failed:
        print(verification.failure_report(failed[0]), end="", file=out)
        return EXIT_FAIL
    return EXIT_OK


def cmd_localize(args, out=None):
    out = out or sys.stdout
    config = load_config(args.config, seed=args.seed)
    result = run_campaign(config)
    os.makedirs(args.out, exist_ok=True)
    csv_path = os.path.join(args.out, "results.csv")
    result.write_csv(csv_path)
    print(f"wrote {csv_path}", file=out)
    for model in config.models:
        path = os.path.join(args.out, f"{model}.svg")
        with open(path, "w") as fh:
            fh.write(campaign_svg(result, model))
        print(f"wrote {path}", file=out)
    excluded = sum(r.excluded for r in result.rows)
    if excluded:
        print(f"note: {excluded} estimator-trial results excluded (failed builds)", file=out)
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="nuisblue",
        description="Estimators for linear models with linear nuisance parameters.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("illustrate", help="reproduce the 3-sample worked example")
    p = sub.add_parser("verify", help="run the randomized equivalence suites")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--fault", choices=("none", "skip-whitening"), default="none")
    p = sub.add_parser("localize", help="run a localization Monte Carlo campaign")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default="out")
    p.add_argument("--seed", type=int, default=None)
    return parser


COMMANDS = {"illustrate": cmd_illustrate, "verify": cmd_verify, "localize": cmd_localize}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
