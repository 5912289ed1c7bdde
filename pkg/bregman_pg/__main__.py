"""Entry point for ``python -m bregman_pg``."""

import sys

from bregman_pg.harness.cli import main

if __name__ == "__main__":
    sys.exit(main())
