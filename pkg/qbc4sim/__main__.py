#!/usr/bin/env python3
"""
QBC4 Simulator - Module Entry Point
===================================

Enables running with: python -m qbc4sim

Usage:
    python -m qbc4sim run --n 3 --bit 1 --seed 7
    python -m qbc4sim bind --ensemble mub2 --seed 3
"""
import sys

from .main import main

if __name__ == "__main__":
    sys.exit(main())
