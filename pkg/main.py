#!/usr/bin/env python3
"""
Main entry point for sber-outage.
"""

import sys
from pathlib import Path

sys.path.insert(0, Path(__file__).parent.joinpath("src").as_posix())
from sber_outage.core.app import cli

if __name__ == "__main__":
    # Click parses sys.argv; with standalone_mode=False main() returns the exit code
    sys.exit(cli.main(standalone_mode=False))
