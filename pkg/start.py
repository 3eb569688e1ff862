#!/usr/bin/env python3
"""
Startup script for shrinkage-bench: python start.py <subcommand> [options]
"""

import sys

from app.config import config
from app.main import main

if __name__ == "__main__":
    if len(sys.argv) > 1 and sys.argv[1] in ("train", "benchmark") and not config.DATA_DIR.exists():
        print(f"⚠️ Data directory {config.DATA_DIR} does not exist; set SHRINKAGE_DATA_DIR or use absolute paths")
    sys.exit(main())
