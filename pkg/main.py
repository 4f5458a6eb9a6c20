"""
Repository entry point; runs the toolkit CLI from the repository root
"""
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent / "toolkit"))

from core.app import run  # noqa: E402

if __name__ == "__main__":
    sys.exit(run())
