#!/usr/bin/env python3
"""Gain selection over the (2, 4)^2 box with the exhaustive grid oracle
alongside, plus the lower-bound proviso check."""

import pathlib
import sys

from platoonlink.cli import main

HERE = pathlib.Path(__file__).resolve().parent
SCENARIOS = HERE.parent / "scenarios"
RESULTS = HERE.parent / "results"


def run():
    RESULTS.mkdir(exist_ok=True)
    out = RESULTS / "gain_optimization.csv"
    code = main(["--scenario", str(SCENARIOS / "optimize_box.toml"),
                 "--out", str(out), "optimize"])
    if code == 0:
        print(f"wrote {out}")
    return code


if __name__ == "__main__":
    sys.exit(run())
