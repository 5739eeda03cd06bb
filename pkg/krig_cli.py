#!/usr/bin/env python3
"""
krig command-line launcher.

Usage:
    python krig_cli.py compromise binary_pair.json
    python krig_cli.py fit krig/data/design_3d_30.csv krig/data/y_3d_30.csv --nu 2.5

Installing the package provides the same commands as ``krig``.
"""

import sys

from krig.cli import main

if __name__ == "__main__":
    sys.exit(main())
