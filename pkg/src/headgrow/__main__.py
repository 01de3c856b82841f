"""Run the Headgrow experiment harness with ``python -m headgrow``."""

import sys

from _headgrow.harness.cli import main

if __name__ == "__main__":
    sys.exit(main())
