"""Command line entry point: `dipolar run|selftest|schema|version|example`."""

import argparse
import logging
import sys
from typing import Optional, Sequence

from .errors import DipolarError
from .make_examples import examples, make_example
from .output import FORMATS

logger = logging.getLogger("dipolar")


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dipolar",
                                     description="Two-atom dipole-dipole interaction in dispersive environments.")
    parser.add_argument("--quiet", action="store_true", help="only log warnings and errors")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--quiet", action="store_true", default=argparse.SUPPRESS, help="only log warnings and errors")
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", parents=[common], help="run the analyses of a scenario file")
    run.add_argument("scenario", help="YAML scenario file")
    run.add_argument("--output-dir", help="override output.directory")
    run.add_argument("--format", choices=FORMATS, help="override output.format")
    run.add_argument("--force", action="store_true", help="overwrite existing output files")

    selftest = commands.add_parser("selftest", parents=[common], help="run the invariant suite on random geometries")
    selftest.add_argument("--geometries", type=int, default=100)
    selftest.add_argument("--seed", type=int, default=0)

    commands.add_parser("schema", parents=[common], help="print the scenario JSON schema")
    commands.add_parser("version", parents=[common], help="print the package version")

    example = commands.add_parser("example", parents=[common], help="copy a bundled example scenario")
    example.add_argument("name", choices=examples)
    example.add_argument("path", nargs="?", default=".")
    return parser


def _run(args) -> int:
    from .runner import run
    from .scenario import load_scenario

    scenario = load_scenario(args.scenario)
    manifest = run(scenario, output_dir=args.output_dir, fmt=args.format, force=args.force)
    for name, path in manifest["outputs"].items():
        print(f"{name}: {path}")
    return 0


def _selftest(args) -> int:
    from .selftest import run_selftest

    report = run_selftest(args.geometries, args.seed)
    print(report.summary().to_string())
    for failure in report.failures:
        logger.error("failed %s on geometry %d (%s): %.3g", failure.check, failure.geometry, failure.source,
                     failure.value)
    return 0 if report.ok else 3


def _example(args) -> int:
    try:
        dest = make_example(args.path, args.name)
    except FileExistsError:
        logger.error("example %s already exists in %s; remove it or choose another path", args.name, args.path)
        return 2
    except (ValueError, OSError) as error:
        logger.error("cannot create example %s: %s", args.name, error)
        return 2
    print(dest)
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    logging.captureWarnings(True)
    try:
        if args.command == "run":
            return _run(args)
        if args.command == "selftest":
            return _selftest(args)
        if args.command == "schema":
            from .scenario import schema_json

            print(schema_json())
            return 0
        if args.command == "version":
            from . import __version__

            print(__version__)
            return 0
        return _example(args)
    except DipolarError as error:
        logger.error("%s", error)
        return error.exit_code


if __name__ == "__main__":
    sys.exit(main())
