"""
Fractal Lq Toolkit - Command Line Application
Version: 1.0.0

Usage: python app.py <command> --config experiment.json --out results/
"""

import argparse
import json
import logging
import sys
from typing import List, Optional

from components.commands import COMMANDS
from config.settings import settings
from storage.artifact_store import ArtifactStore
from utils.errors import ConfigError
from utils.logger import configure_logging

logger = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='fractal-lq',
        description="L^q dimensions, separation and intersection experiments for self-similar measures",
    )
    parser.add_argument('command', choices=sorted(COMMANDS), help="experiment to run")
    parser.add_argument('--config', required=True, metavar='PATH', help="JSON experiment config")
    parser.add_argument('--out', default='.', metavar='DIR', help="directory for CSV/JSON artifacts")
    parser.add_argument('--seed', type=int, default=None, metavar='N', help="random seed (overrides config)")
    parser.add_argument('--threads', type=int, default=None, metavar='N',
                        help="worker threads (overrides FRACTAL_LQ_THREADS)")
    parser.add_argument('--verbose', action='store_true', help="debug logging on standard error")
    return parser


def load_config(path: str) -> dict:
    """Read a JSON config document; unreadable or malformed files are config errors"""
    try:
        with open(path, 'r', encoding='utf-8') as f:
            return json.load(f)
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e.strerror}")
    except json.JSONDecodeError as e:
        raise ConfigError(f"malformed JSON in {path}: line {e.lineno} column {e.colno}: {e.msg}")


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose or settings.DEBUG_MODE)

    try:
        settings.validate()
        config = load_config(args.config)
    except ConfigError as e:
        logger.error(f"{args.command}: {e}")
        return e.exit_code

    if args.threads is not None and args.threads < 1:
        logger.error("--threads must be at least 1")
        return ConfigError.exit_code

    runner = COMMANDS[args.command]
    logger.info(f"running {args.command} with config {args.config}")
    return runner(config, ArtifactStore(args.out), threads=args.threads, seed=args.seed)


if __name__ == '__main__':
    sys.exit(main())
