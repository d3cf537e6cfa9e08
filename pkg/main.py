# main.py (project root)
# Command-line entry point: loads .env overrides, configures logging, parses the
# subcommand and hands a RunConfig to the matching handler in cli/commands.py.

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from dotenv import load_dotenv

# .env must be loaded before config.py reads its environment overrides
load_dotenv()

from config import DEFAULT_OUT_DIR, LOG_LEVEL  # noqa: E402
from cli.commands import (  # noqa: E402
    cmd_convergence,
    cmd_optimize,
    cmd_reproduce,
    cmd_validate,
    exit_code_for,
)
from cli.runconfig import load_run_config, parse_orders  # noqa: E402
from domain.errors import PceLqrError  # noqa: E402
from presets import REPRODUCIBLE  # noqa: E402

logger = logging.getLogger("pce_lqr")


# ---------------------------------------------------------
# ARGUMENTS
# ---------------------------------------------------------
def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pce-lqr",
        description="Policy optimization for LQR with parametric uncertainty "
                    "on a polynomial chaos surrogate.",
    )
    parser.add_argument("--quiet", action="store_true", help="only log warnings and errors")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, needs_config: bool = True):
        if needs_config:
            p.add_argument("--config", required=True, help="YAML run configuration")
        p.add_argument("--out", default=None, help=f"output directory (default: config or {DEFAULT_OUT_DIR})")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--quiet", action="store_true", default=argparse.SUPPRESS,
                       help="only log warnings and errors")

    common(sub.add_parser("optimize", help="run gradient descent on the surrogate cost"))

    p = sub.add_parser("validate", help="check a gain against the per-parameter oracles")
    common(p)
    p.add_argument("--gain", required=True, help="gain file (YAML/JSON or a report.json)")

    p = sub.add_parser("convergence", help="surrogate cost error against the PCE order")
    common(p)
    p.add_argument("--gain", required=True, help="gain file (YAML/JSON or a report.json)")
    p.add_argument("--orders", default=None, help="'1,2,3' or '1..6'")

    p = sub.add_parser("reproduce", help="rerun a benchmark example and check its targets")
    p.add_argument("example", help=" | ".join(REPRODUCIBLE))
    common(p, needs_config=False)
    return parser


def _out_dir(args: argparse.Namespace, configured: Optional[str] = None) -> Path:
    return Path(args.out or configured or DEFAULT_OUT_DIR)


# ---------------------------------------------------------
# DISPATCH
# ---------------------------------------------------------
def run(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING if args.quiet else getattr(logging, LOG_LEVEL, logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )

    try:
        if args.command == "reproduce":
            return cmd_reproduce(args.example, _out_dir(args))

        cfg = load_run_config(args.config)
        if args.seed is not None:
            cfg.seed = args.seed
        out_dir = _out_dir(args, cfg.out_dir)

        if args.command == "optimize":
            return cmd_optimize(cfg, out_dir)
        if args.command == "validate":
            return cmd_validate(cfg, args.gain, out_dir)
        orders = parse_orders(args.orders) if args.orders else None
        return cmd_convergence(cfg, args.gain, orders, out_dir)
    except PceLqrError as exc:
        logger.error("[%s] %s", exc.code, exc.message)
        return exit_code_for(exc)


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
