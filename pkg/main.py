#!/usr/bin/env python3
"""
ZipTBE - lossless BF16 weight compression (TCA-TBE)
Main entry point for the command line
"""

import sys
import os

# Add src directory to Python path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), 'src'))

from ui.cli import main  # noqa: E402

if __name__ == "__main__":
    sys.exit(main())
