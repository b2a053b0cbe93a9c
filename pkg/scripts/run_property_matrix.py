#!/usr/bin/env python3
"""Print the encoding-property matrix (uniqueness, equal similarity,
high dimensionality, high entropy) for the six standard encoder kinds."""

import sys

from dhe.cli import main

if __name__ == "__main__":
    raise SystemExit(main(["analyze", *sys.argv[1:]]))
