"""Entry point for the riesz-tomo command line."""

import sys

from .cli import main as _cli_main


def main() -> None:
    """Run one command and exit with its status code."""
    sys.exit(_cli_main())


if __name__ == "__main__":
    main()
