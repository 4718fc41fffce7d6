"""erm-ica CLI 조립."""
from __future__ import annotations

import argparse
import sys

from .config.logging import setup_logging
from .config.settings import settings
from .middleware.errors import register_exception_handlers
from .routes import COMMAND_GROUPS
from .routes.common import global_options


def build_parser() -> argparse.ArgumentParser:
    common = global_options()
    parser = argparse.ArgumentParser(
        prog=settings.app_name,
        description="ERM-ICA 잠재변수 식별 실험: 데이터 생성, 학습, PCA/ICA 후처리, MCC 평가, sweep/report.",
        parents=[common],
    )
    subparsers = parser.add_subparsers(dest="command", metavar="COMMAND")
    subparsers.required = True
    for group in COMMAND_GROUPS:
        group.register(subparsers, [common])
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(getattr(args, "log_level", None))
    handler = register_exception_handlers(args.handler, debug=settings.debug)
    return handler(args)


if __name__ == "__main__":
    sys.exit(main())
