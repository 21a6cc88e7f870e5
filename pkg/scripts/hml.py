#!/usr/bin/env python3
"""
hml launcher
Runs the command-line interface from a source checkout
"""
import sys
from pathlib import Path

# Add parent directory to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from src.cli.main import main

if __name__ == "__main__":
    sys.exit(main())
