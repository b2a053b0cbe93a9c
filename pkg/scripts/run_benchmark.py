#!/usr/bin/env python3
"""Run the desk-scale benchmark sweep (schemes x budget fractions) on a
dataset CSV and write results.json / results.csv. Thin wrapper over
`dhe benchmark`; generate the dataset first with make_dataset.py."""

import sys

from dhe.cli import main

if __name__ == "__main__":
    raise SystemExit(main(["benchmark", *sys.argv[1:]]))
