"""
Main CLI Application
Parser construction, dispatch, error handling and run manifests
"""
import argparse
import logging
from pathlib import Path
from typing import List, Optional

from config import setup_logging

from .commands import (
    bernstein_command,
    density_command,
    gen_command,
    pair_command,
    radius_command,
    verify_command,
)
from .middleware.error_handler import error_handler
from .middleware.logging import run_logger
from .services.report_writer import ReportWriter

logger = logging.getLogger(__name__)

COMMANDS = (density_command, radius_command, gen_command, pair_command, bernstein_command, verify_command)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="toolkit",
        description="Completeness of translates: density bounds, spectral radius, generators and uniqueness diagnostics",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    parser.add_argument("--log-level", default=None, help="Override TOOLKIT_LOG_LEVEL")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for module in COMMANDS:
        module.register(subparsers)
    return parser


def run(argv: Optional[List[str]] = None) -> int:
    """Parse, execute one command and return its exit code"""
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(args.log_level)

    if args.out is None:
        args.out = str(Path("out") / args.command)
    params = {k: v for k, v in vars(args).items() if k not in ("handler", "log_level")}

    run_data = run_logger.start(args.command, params)
    writer = ReportWriter(args.out)
    extra = []
    try:
        exit_code = args.handler(args, writer)
    except Exception as exc:
        exit_code, payload = error_handler.handle(exc, run_data["run_id"])
        path = error_handler.write(payload, writer.out_dir)
        if path is not None:
            extra.append(path.name)

    writer.manifest(args.command, params, exit_code, extra)
    run_logger.finish(run_data, exit_code, writer.outputs + extra)
    return exit_code
