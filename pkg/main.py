"""
Main entry point for the spatial-memory pattern toolkit.
"""

import sys

from src.main import main

if __name__ == "__main__":
    sys.exit(main())
