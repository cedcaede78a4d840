"""
Bell-state quantum illumination: finite-dimensionality performance
Command-line entry point: penalty curves, dimensionality table, error-probability curves,
dimensionality ratios and the validation suite.

    python app.py table1
    python app.py penalty --config scenarios/figures.toml --format json --out out/penalty.json
"""

import argparse
import logging
import os
import sys
import time
from pathlib import Path

from dotenv import load_dotenv

from commands import (
    EXIT_CONFIG,
    EXIT_NO_ROOT,
    EXIT_VALIDATION,
    dim_ratio,
    pe_curves,
    penalty,
    table1,
    validate,
)
from utils.config import DEFAULT_FORMAT, load_config
from utils.output import write
from utils.qi_core import ConfigError, DomainError, NoRootError, QIError

load_dotenv()

log = logging.getLogger("app")

COMMANDS = {
    "penalty":   penalty.run,
    "table1":    table1.run,
    "pe-curves": pe_curves.run,
    "dim-ratio": dim_ratio.run,
    "validate":  validate.run,
}

# ─── Arguments ────────────────────────────────────────────────────────────────


def _u64(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError(f"seed must be an unsigned 64-bit integer, got {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="app.py", description=__doc__.strip().splitlines()[0])
    sub    = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        cmd = sub.add_parser(name)
        cmd.add_argument("--config", help="TOML scenario file")
        cmd.add_argument("--out", help="output path (stdout when omitted)")
        cmd.add_argument("--format", choices=("csv", "json"))
        cmd.add_argument("--seed", type=_u64)
        cmd.add_argument("--threads", type=int)
        cmd.add_argument("--rel-tol", type=float)
        cmd.add_argument("--trials", type=int, help="Monte Carlo trials per hypothesis (validate)")
        cmd.add_argument("--log-level", default=os.getenv("QI_LOG_LEVEL", "WARNING"))
    return parser


# ─── Main ─────────────────────────────────────────────────────────────────────


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=args.log_level.upper(),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )

    try:
        config = load_config(
            args.config,
            default_fmt="json" if args.command == "validate" else DEFAULT_FORMAT,
            fmt=args.format,
            out=Path(args.out) if args.out else None,
            seed=args.seed,
            rel_tol=args.rel_tol,
            threads=args.threads,
            trials=args.trials,
        )
        started = time.perf_counter()
        report  = COMMANDS[args.command](config)
        write(report, config)
    except ConfigError as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG
    except NoRootError as exc:
        log.error("solver found no root: %s", exc)
        return EXIT_NO_ROOT
    except DomainError as exc:
        log.error("invalid parameters: %s", exc)
        return EXIT_CONFIG
    except QIError as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return EXIT_VALIDATION

    log.info("%s finished in %.2f s with %d rows", args.command, time.perf_counter() - started, len(report.rows))
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
