#!/usr/bin/env python3
"""Reliability sweeps: spacing, bandwidth (per stability budget),
interferer density, gain pairs, and platoon size.

Each sweep reads its bundled scenario and writes one result table; the
spacing and bandwidth tables show the 0.99 / 0.90 design crossings, the
follower sweep shows the lower bound dipping below 0.9 past seven
followers.
"""

import pathlib
import sys

from platoonlink.cli import main

HERE = pathlib.Path(__file__).resolve().parent
SCENARIOS = HERE.parent / "scenarios"
RESULTS = HERE.parent / "results"

SWEEPS = (
    "spacing_sweep",
    "bandwidth_sweep_plant",
    "bandwidth_sweep_string",
    "density_comparison",
    "gain_comparison",
    "follower_sweep",
)


def run():
    RESULTS.mkdir(exist_ok=True)
    for name in SWEEPS:
        out = RESULTS / f"{name}.csv"
        code = main(["--scenario", str(SCENARIOS / f"{name}.toml"),
                     "--out", str(out), "sweep"])
        if code != 0:
            return code
        print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(run())
