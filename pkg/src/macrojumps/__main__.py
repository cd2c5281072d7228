"""Module entry point: python -m macrojumps <subcommand> ..."""

import sys

from macrojumps.cli import main

if __name__ == "__main__":
    sys.exit(main())
