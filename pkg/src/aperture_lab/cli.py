"""``aperture-lab`` command-line entry point."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import __version__
from .config import ConfigError, load_config
from .runs import RUNNERS, checks_for, csv_table
from .serialization import csv_text, dumps


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON configuration file")
    common.add_argument("--seed", type=int, help="override the config seed (unsigned 64-bit)")
    common.add_argument("--out", type=Path, help="write the report (or CSV table) here instead of stdout")
    common.add_argument("--check", action="store_true", help="assert acceptance criteria; exit 1 on failure")
    common.add_argument("--format", choices=("json", "csv"), default="json")

    parser = argparse.ArgumentParser(prog="aperture-lab", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "search": "structural and representational balance search",
        "boundary": "complex envelope, center, boundary balance, context-free records",
        "record": "record process distribution, Markov check, witness search",
        "bell": "singlet correlations, CHSH, no-signaling, interference",
        "trace": "claim-to-test traceability table",
    }
    for name, text in helps.items():
        sub.add_parser(name, parents=[common], help=text)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.command, args.config)
        if args.seed is not None:
            if not 0 <= args.seed < 2**64:
                raise ConfigError("seed: must be an unsigned 64-bit integer")
            config = config.model_copy(update={"seed": args.seed})
        report = RUNNERS[args.command](config)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    if args.format == "csv":
        rows, columns = csv_table(report)
        text = csv_text(rows, columns)
    else:
        text = dumps(report.to_dict())
    if args.out:
        args.out.write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)

    if args.check:
        failed = 0
        for name, ok, detail in checks_for(report):
            failed += not ok
            line = f"[{'PASS' if ok else 'FAIL'}] {args.command}: {name}"
            print(line + (f" ({detail})" if detail else ""), file=sys.stderr)
        return 1 if failed else 0
    return 0


if __name__ == "__main__":
    sys.exit(main())
