#!/usr/bin/env python3
"""Write the CSV data behind the eight reference plots into one directory.

    python3 scripts/reproduce_figures.py --out-dir results/
    python3 scripts/reproduce_figures.py --only 5 7 --samples 1000000

Each recipe is a list of ``wishart-mrc`` invocations; file names are
``fig<k>_<label>.csv``. Plotting is left to external tools.
"""

import argparse
import pathlib
import sys
import time

from wishart_mrc.cli import main

DIST_SPREADS = ["--spread-rx", "pi/64", "--spread-tx", "pi/16"]
SER_SPREADS = ["--spread-rx", "pi/16", "--spread-tx", "pi/32"]
DIST_PAIRS = [(2, 2), (2, 4), (4, 4)]
SER_PAIRS = [(2, 2), (2, 3), (2, 4)]
SNR_SWEEP = "0:20:2dB"

# strong and weak correlation for the analytical comparison plots
SCENARIOS = {
    "strong": ["--spread-rx", "pi/256", "--spread-tx", "pi/256"],
    "moderate": DIST_SPREADS,
    "weak": ["--spread-rx", "pi/4", "--spread-tx", "pi/4"],
}


def _pairs(pairs):
    return [(f"{t}x{r}", ["--nt", str(t), "--nr", str(r)]) for t, r in pairs]


def recipes():
    out = {}
    out[1] = [(label, ["pdf", *a, *DIST_SPREADS, "--snr", "0dB"]) for label, a in _pairs(DIST_PAIRS)]
    out[2] = [
        (f"{label}_{name}", ["pdf", *a, *spreads, "--snr", "0dB", "--samples", "0"])
        for label, a in _pairs([(2, 2), (4, 4)])
        for name, spreads in SCENARIOS.items()
    ]
    out[3] = [(label, ["outage", *a, *DIST_SPREADS, "--snr", "0dB"]) for label, a in _pairs(DIST_PAIRS)]
    out[4] = [
        (f"{label}_{name}", ["outage", *a, *spreads, "--snr", "0dB", "--samples", "0"])
        for label, a in _pairs([(2, 2), (4, 4)])
        for name, spreads in SCENARIOS.items()
    ]
    for fig, mod in ((5, "bpsk"), (6, "4-pam"), (7, "qpsk")):
        out[fig] = [(label, ["ser", *a, *SER_SPREADS, "--mod", mod, "--snr", SNR_SWEEP]) for label, a in _pairs(SER_PAIRS)]
    out[8] = [
        (f"{label}_{name}", ["ser", *a, *spreads, "--mod", "bpsk", "--snr", "0:30:2dB", "--samples", "0"])
        for label, a in _pairs([(2, 2), (2, 4)])
        for name, spreads in SCENARIOS.items()
    ]
    return out


def run(out_dir, only=None, samples=None, seed=0):
    out_dir = pathlib.Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    failures = 0
    for fig, jobs in recipes().items():
        if only and fig not in only:
            continue
        for label, argv in jobs:
            if samples is not None and "--samples" not in argv:
                argv = [*argv, "--samples", str(samples)]
            path = out_dir / f"fig{fig}_{label}.csv"
            start = time.perf_counter()
            status = main([*argv, "--seed", str(seed), "--out", str(path)])
            print(f"fig{fig} {label}: exit {status}, {time.perf_counter() - start:.1f} s -> {path}")
            failures += status != 0
    return failures


if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out-dir", default="results")
    p.add_argument("--only", type=int, nargs="*", help="figure numbers to run (default: all)")
    p.add_argument("--samples", type=int, help="Monte-Carlo samples where simulated (default: 100000)")
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()
    sys.exit(1 if run(args.out_dir, args.only, args.samples, args.seed) else 0)
