"""Command-line front end.

    modular-entropy run <scenario.json> [--out DIR] [--workers K] [--svg]
    modular-entropy convergence <scenario.json> --doublings K [--out DIR]

Exit codes: 0 all checks pass, 1 a check failed, 2 the scenario file does
not parse, 3 the scenario is invalid (nothing is written).
"""
from __future__ import annotations

import argparse
import logging
import sys

from . import runner
from .scenario import ScenarioError, ScenarioParseError, load

EXIT_OK, EXIT_CHECK, EXIT_PARSE, EXIT_INVALID = 0, 1, 2, 3

log = logging.getLogger("modular_entropy")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="modular-entropy", description="Entropy of vectors relative to standard subspaces.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a scenario and write its artifacts")
    p_run.add_argument("scenario")
    p_run.add_argument("--out", default=".", help="output directory (default: current directory)")
    p_run.add_argument("--workers", type=int, default=None, help="worker threads for the lambda sweep")
    p_run.add_argument("--svg", action="store_true", help="also write an SVG plot of S(lambda)")

    p_conv = sub.add_parser("convergence", help="grid-doubling study of a wave scenario")
    p_conv.add_argument("scenario")
    p_conv.add_argument("--doublings", type=int, required=True)
    p_conv.add_argument("--out", default=".", help="output directory (default: current directory)")
    return parser


def _summary(report: runner.RunReport) -> str:
    lines = []
    for c in report.checks:
        status = "PASS" if c.passed else "FAIL"
        lines.append(f"{status} {c.name}: residual {c.residual:.3e} (tolerance {c.tolerance:.1e})")
    return "\n".join(lines)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        sc = load(args.scenario)
        if args.command == "convergence":
            if args.doublings < 1:
                raise ScenarioError("--doublings must be at least 1")
            if sc.wave is None:
                raise ScenarioError("convergence needs a wave scenario")
            sc.mode, sc.doublings = "convergence", args.doublings
            workers = None
        else:
            workers = args.workers
            if workers is not None and workers < 1:
                raise ScenarioError("--workers must be at least 1")
    except ScenarioParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ScenarioError as exc:
        print(f"invalid scenario: {exc}", file=sys.stderr)
        return EXIT_INVALID

    report, artifacts = runner.run(sc, workers)
    written = runner.write_outputs(sc, report, artifacts, args.out, svg=getattr(args, "svg", False))
    print(_summary(report))
    for path in written:
        log.info("wrote %s", path)
    return EXIT_OK if report.passed else EXIT_CHECK


if __name__ == "__main__":
    sys.exit(main())
