"""Command-line entry point: ``bracketflow run | reproduce | hs-study``."""

from __future__ import annotations

import argparse
import sys

from . import __version__
from .errors import BracketFlowError, ConfigError, NumericalError
from .experiments import FIGURES, ExperimentError, hs_truncation_study, load_config, reproduce, run

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_ACCEPTANCE = 4


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bracketflow", description=__doc__)
    p.add_argument("--version", action="version", version=f"bracketflow {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run an experiment from a JSON config")
    r.add_argument("--config", required=True)
    r.add_argument("--out")

    rep = sub.add_parser("reproduce", help="run a built-in reproduction and check it")
    rep.add_argument("figure_id", choices=FIGURES)
    rep.add_argument("--out")

    hs = sub.add_parser("hs-study", help="truncation study of a Hilbert-Schmidt stand-in operator")
    hs.add_argument("--beta", type=float, required=True)
    hs.add_argument("--sizes", default="10,20,40")
    hs.add_argument("--generator", default="toda", choices=["brockett", "toda", "wegner"])
    hs.add_argument("--t-end", type=float, default=1000.0)
    hs.add_argument("--out")
    return p


def _print_checks(manifest) -> None:
    for c in manifest.checks:
        status = "PASS" if c["passed"] else "FAIL"
        print(f"  [{status}] {c['name']}: value={c['value']} bound={c['bound']}")


def _exit_code_for(exc: BaseException) -> int:
    cause = exc.cause if isinstance(exc, ExperimentError) else exc
    if isinstance(cause, ConfigError):
        return EXIT_CONFIG
    if isinstance(cause, NumericalError):
        return EXIT_NUMERICAL
    return EXIT_NUMERICAL


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.command == "run":
            manifest = run(load_config(args.config), args.out)
            print(f"final diagonal: {manifest.summary['final_diag']}")
            print(f"manifest: {manifest.files['manifest']}")
            return EXIT_OK
        if args.command == "reproduce":
            manifest = reproduce(args.figure_id, args.out)
            print(f"{args.figure_id}: final diagonal {manifest.summary['final_diag']}")
            _print_checks(manifest)
            print(f"manifest: {manifest.files['manifest']}")
            return EXIT_OK if manifest.passed else EXIT_ACCEPTANCE
        try:
            sizes = [int(s) for s in args.sizes.split(",") if s.strip()]
        except ValueError:
            raise ConfigError(f"field 'sizes': expected comma-separated integers, got {args.sizes!r}")
        manifest = hs_truncation_study(args.beta, sizes, args.generator, args.out, t_end=args.t_end)
        for row in manifest.summary["rows"]:
            print(f"N={row['N']:4d} leading={row['leading']} diff={row['max_diff_from_previous']}")
        _print_checks(manifest)
        print(f"manifest: {manifest.files['manifest']}")
        return EXIT_OK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BracketFlowError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _exit_code_for(exc)


if __name__ == "__main__":
    raise SystemExit(main())
