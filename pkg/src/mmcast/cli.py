"""Command-line entry point: ``mmcast run <spec>`` and ``mmcast check``."""

import argparse
import logging
from pathlib import Path
import sys

from .harness import SpecError, emit_csv, emit_summary, load_spec, run_experiment


def _summary_path(out):
    out = Path(out)
    return out.with_name(out.stem + ".summary.csv")


def cmd_run(args):
    try:
        spec = load_spec(args.spec)
    except (OSError, SpecError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    out = args.out or spec.out or Path(args.spec).with_suffix(".csv").name
    records = run_experiment(spec, workers=args.workers,
                             realizations=args.realizations, seed=args.seed)
    try:
        emit_csv(records, out, timing=args.timing)
        if not args.no_summary:
            emit_summary(records, _summary_path(out))
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    failed = sum(r.error is not None for r in records)
    if failed:
        logging.getLogger(__name__).warning("%d of %d runs failed", failed, len(records))
    print(f"wrote {len(records)} rows to {out}")
    return 0


def _find_tests():
    here = Path(__file__).resolve()
    for cand in (Path.cwd() / "tests", here.parents[2] / "tests"):
        if cand.is_dir():
            return cand
    return None


def cmd_check(args):
    try:
        import pytest
    except ImportError:
        print("error: `check` needs pytest (pip install 'artifact[test]')", file=sys.stderr)
        return 2
    tests = _find_tests()
    if tests is None:
        print("error: cannot locate the tests/ directory", file=sys.stderr)
        return 2
    target = tests / "test_acceptance.py" if args.acceptance else tests
    return int(pytest.main([str(target), "-q", *args.pytest_args]))


def build_parser():
    p = argparse.ArgumentParser(prog="mmcast", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true", help="log progress")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run an experiment file and write CSV results")
    r.add_argument("spec", help="YAML experiment file")
    r.add_argument("--seed", type=int, help="override the master seed")
    r.add_argument("--out", help="output CSV path (default: <spec name>.csv)")
    r.add_argument("--workers", type=int, default=1, help="worker processes (default 1)")
    r.add_argument("--realizations", type=int, help="override the realization count")
    r.add_argument("--timing", action="store_true", help="fill the wall_ms column")
    r.add_argument("--no-summary", action="store_true", help="skip the aggregate CSV")
    r.set_defaults(func=cmd_run)

    c = sub.add_parser("check", help="run the invariant and acceptance test suites")
    c.add_argument("--acceptance", action="store_true", help="acceptance criteria only")
    c.add_argument("pytest_args", nargs="*", help="extra arguments passed to pytest")
    c.set_defaults(func=cmd_check)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "run":
        if args.workers < 1 or (args.realizations is not None and args.realizations < 1):
            print("error: --workers and --realizations must be >= 1", file=sys.stderr)
            return 2
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
