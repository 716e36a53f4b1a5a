"""Command-line entry point: qfep <scenario> --config <file> --seed <u64>
--out <dir> [--exact | --shots N].  Exit codes: 0 success, 1 runtime
failure, 2 usage or validation error.  QFEP_LOG sets verbosity."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from .errors import QfepError
from .harness import SCENARIOS, RunConfig, UsageError, ValidationError, run

log = logging.getLogger("qfep")


def _configure_logging() -> None:
    level = os.environ.get("QFEP_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qfep",
        description="Deterministic quantum-agent experiment runner",
    )
    parser.add_argument("scenario", help="registered scenario name")
    parser.add_argument("--config", type=Path, default=None,
                        help="JSON file of scenario parameters")
    parser.add_argument("--seed", type=int, required=True,
                        help="64-bit unsigned run seed")
    parser.add_argument("--out", type=Path, default=None,
                        help="output directory (default: ./qfep-out-<scenario>-<seed>)")
    mode = parser.add_mutually_exclusive_group()
    mode.add_argument("--exact", action="store_true",
                      help="exact-mode correlators (no sampling)")
    mode.add_argument("--shots", type=int, default=None,
                      help="sampled mode with this many shots")
    return parser


def load_params(path: Path | None) -> dict:
    if path is None:
        return {}
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise UsageError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"config file {path} is not valid JSON: {exc}") from None
    if not isinstance(payload, dict):
        raise UsageError(f"config file {path} must hold a JSON object")
    return payload


def main(argv: list[str] | None = None) -> int:
    _configure_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        params = load_params(args.config)
        if args.exact:
            params["exact"] = True
        if args.shots is not None:
            params["shots"] = args.shots
        config = RunConfig(scenario=args.scenario, seed=args.seed,
                           params=params, out_dir=args.out)
        status, files = run(config)
    except UsageError as exc:
        print(f"qfep: {exc}", file=sys.stderr)
        return 2
    except ValidationError as exc:
        print("qfep: invalid configuration:", file=sys.stderr)
        for violation in exc.violations:
            print(f"  - {violation}", file=sys.stderr)
        return 2
    except (QfepError, ValueError) as exc:
        log.debug("runtime failure", exc_info=True)
        print(f"qfep: run failed: {exc}", file=sys.stderr)
        return 1
    for path in files:
        print(path)
    return status


if __name__ == "__main__":
    sys.exit(main())
