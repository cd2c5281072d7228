#!/usr/bin/env python3
"""Reproduce the heralded-fidelity experiment: F versus no-click window.

For each detector efficiency, runs the no-detection preparation protocol
over a grid of window lengths (in dark-timescale units) and writes
fidelity.csv with mean, standard error, and mean preparation time per
point.  The qualitative targets: F > 0.9 beyond 0.7 dark times at 20%
efficiency, F > 0.95 at 50%, and F >= 0.99 at unit efficiency for windows
of a dark time or longer.

Equivalent to:  macrojumps fidelity --eta 0.2,0.5,1.0 --t-wait ... [...]

Usage:  python scripts/run_fig4.py [--out DIR] [--seed N] [--n-traj N]
                                   [--eta F[,F...]] [--t-wait F[,F...]]

Note: the default grid is 3 x 8 points at 200 runs each; expect a few
minutes of wall time.
"""

import sys

from macrojumps.cli import main

DEFAULTS = {
    "--out": "out/fig4",
    "--seed": "4",
    "--n-traj": "200",
    "--horizon-tdark": "50",
    "--eta": "0.2,0.5,1.0",
    "--t-wait": "0.1,0.3,0.5,0.7,0.9,1.1,1.3,1.5",
}

if __name__ == "__main__":
    argv = sys.argv[1:]
    for flag, value in DEFAULTS.items():
        if flag not in argv:
            argv += [flag, value]
    sys.exit(main(["fidelity", *argv]))
