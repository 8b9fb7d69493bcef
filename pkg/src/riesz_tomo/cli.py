"""Command registry and argument parsing for the ``riesz-tomo`` CLI.

This module owns the singleton :data:`registry`. Command modules under
:mod:`riesz_tomo.commands` import ``registry`` from here and attach
themselves with ``@registry.command(...)``. Importing this module triggers
registration of every command by importing :mod:`riesz_tomo.commands` at the
bottom.

Exit codes: 0 success, 2 invalid input, 3 numerical failure, 1 unexpected error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from collections.abc import Callable
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from pydantic import ValidationError

from . import config
from .exceptions import RieszTomoError
from .fileio import read_key_values
from .schemas import RunConfig

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3

# Keys a config file may set besides the command's own parameters.
RUN_KEYS = ("seed", "threads", "out", "csv", "inputs")


@dataclass
class Command:
    name: str
    fn: Callable[[RunConfig], dict[str, Any]]
    params: dict[str, str] = field(default_factory=dict)
    help: str = ""


class CommandRegistry:
    """Name -> command table filled by the ``command`` decorator."""

    def __init__(self, name: str):
        self.name = name
        self._commands: dict[str, Command] = {}

    def command(self, name: str, params: dict[str, str] | None = None, help: str = ""):
        def decorator(fn: Callable[[RunConfig], dict[str, Any]]):
            if name in self._commands:
                raise ValueError(f"command {name!r} registered twice")
            self._commands[name] = Command(name=name, fn=fn, params=dict(params or {}),
                                           help=help or (fn.__doc__ or "").strip().splitlines()[0])
            return fn
        return decorator

    def names(self) -> list[str]:
        return sorted(self._commands)

    def get(self, name: str) -> Command:
        try:
            return self._commands[name]
        except KeyError:
            raise KeyError(f"unknown command {name!r}") from None

    def run(self, run_config: RunConfig) -> dict[str, Any]:
        """Check parameter keys, then call the command (which never raises)."""
        command = self.get(run_config.command)
        unknown = sorted(set(run_config.params) - set(command.params))
        if unknown:
            logger.error(f"Unknown parameters for {command.name}: {unknown}")
            return {"success": False, "error": f"unknown parameters for {command.name}: {unknown}",
                    "exit_code": EXIT_VALIDATION}
        return command.fn(run_config)


registry = CommandRegistry(name="riesz-tomo")

# Import command modules so their @registry.command decorators run.
# Placed after `registry` is defined so submodules can import it from here.
from . import commands  # noqa: E402, F401


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="riesz-tomo",
        description="X-ray transform, Riesz potential and partial-data tomography experiments.",
    )
    parser.add_argument("command", choices=registry.names(), help="Command to run")
    parser.add_argument("inputs", nargs="*", type=Path, help="Input files (RGF1/RSG1)")
    parser.add_argument("--config", type=Path, help="key=value parameter file")
    parser.add_argument("--param", action="append", default=[], metavar="KEY=VALUE",
                        help="Parameter override (repeatable)")
    parser.add_argument("--seed", type=int, help="Random seed")
    parser.add_argument("--threads", type=int, help="Worker threads (default: RIESZ_TOMO_THREADS or all cores)")
    parser.add_argument("--out", type=Path, help="Output path")
    parser.add_argument("--csv", type=Path, help="CSV export of a 2D output field")
    return parser


def build_run_config(args: argparse.Namespace) -> RunConfig:
    """Merge config file values with flag overrides into a validated RunConfig."""
    params: dict[str, str] = {}
    if args.config is not None:
        if not args.config.is_file():
            raise FileNotFoundError(f"config file {args.config} does not exist")
        params.update(read_key_values(args.config))
    for item in args.param:
        key, sep, value = item.partition("=")
        if not sep or not key.strip():
            raise ValueError(f"--param expects KEY=VALUE, got {item!r}")
        params[key.strip()] = value.strip()

    run = {key: params.pop(key) for key in RUN_KEYS if key in params}
    base = args.config.parent if args.config is not None else Path(".")
    inputs = [base / p.strip() for p in run.get("inputs", "").split(",") if p.strip()]
    inputs += list(args.inputs)
    out = args.out if args.out is not None else (base / run["out"] if "out" in run else None)
    csv = args.csv if args.csv is not None else (base / run["csv"] if "csv" in run else None)
    seed = args.seed if args.seed is not None else int(run.get("seed", 0))
    threads = args.threads if args.threads is not None else (int(run["threads"]) if "threads" in run else None)
    return RunConfig(command=args.command, params=params, inputs=inputs, out=out, csv=csv,
                     seed=seed, threads=threads)


def _print_result(result: dict[str, Any]) -> None:
    for key, value in result.items():
        if key in ("success", "exit_code") or isinstance(value, (list, dict)):
            continue
        print(f"{key}={value}")
    for line in result.get("lines", []):
        print(line)


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=config.get_log_level(), format=config.LOG_FORMAT, stream=sys.stderr)
    args = build_parser().parse_args(argv)
    try:
        run_config = build_run_config(args)
    except ValidationError as e:
        first = e.errors()[0]
        print(f"error: invalid configuration: {first.get('msg', e)}", file=sys.stderr)
        return EXIT_VALIDATION
    except (RieszTomoError, OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_VALIDATION

    result = registry.run(run_config)
    if result.get("success"):
        _print_result(result)
        return EXIT_OK
    print(f"error: {result.get('error', 'command failed')}", file=sys.stderr)
    for line in result.get("lines", []):
        print(line)
    return int(result.get("exit_code", EXIT_UNEXPECTED))
