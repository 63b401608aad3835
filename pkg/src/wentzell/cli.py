"""Command-line entry point: ``wentzell <command> --config <path> [--out <dir>] [--seed <u64>]``."""

from __future__ import annotations

import argparse
import logging
import sys

from .config import parse_config
from .errors import WentzellError
from .runner import Command, run


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="wentzell", description="Damped wave runs with Wentzell boundary dynamics.")
    p.add_argument("command", choices=[c.value for c in Command])
    p.add_argument("--config", required=True, help="JSON run configuration")
    p.add_argument("--out", default=None, help="output directory (overrides config.output)")
    p.add_argument("--seed", type=int, default=None, help="RNG seed, unsigned 64-bit")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = parse_config(args.config)
        if args.seed is not None:
            if not 0 <= args.seed < 2 ** 64:
                print("error: --seed must be an unsigned 64-bit integer", file=sys.stderr)
                return 2
            cfg = cfg.model_copy(update={"seed": args.seed})
        summary = run(cfg, args.command, args.out)
    except WentzellError as exc:
        print(f"error [{type(exc).__module__.rsplit('.', 1)[-1]}.{type(exc).__name__}]: {exc}", file=sys.stderr)
        return 2
    for name, verdict in summary.checks.items():
        print(f"{name}: {verdict}")
    print(f"digest: {summary.input_digest}")
    return summary.exit_code


if __name__ == "__main__":
    sys.exit(main())
