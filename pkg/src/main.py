"""
Trend filtering – entry point.

Run directly: python src/main.py fit --in data.csv --out fit.csv --k 1 --lambda 10
See README.md for every command.
"""

import sys
import pathlib

# Add src/ to path so absolute imports work when run as a script
sys.path.insert(0, str(pathlib.Path(__file__).parent))

from cli.app import main


if __name__ == "__main__":
    sys.exit(main())
