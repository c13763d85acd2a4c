#!/usr/bin/env python3
"""
nilflow - Command Line Interface Entry Point

Runs the CLI from a source checkout without installing the package.
"""

import sys
from pathlib import Path

# Add nilflow package to path
sys.path.insert(0, str(Path(__file__).parent))

from nilflow.cli.cli import main

if __name__ == "__main__":
    sys.exit(main())
