"""
Command-line entry point for the translates toolkit
"""
import sys

from core.app import run

if __name__ == "__main__":
    sys.exit(run())
