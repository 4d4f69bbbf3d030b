"""Classical and shot-noise beam wander over a log-spaced time grid.

The crossover time is where the two parts cross; the output brackets it by
``--decades`` on each side.
"""

import argparse
import csv
import pathlib
import sys
import warnings

import numpy as np

from beamkin import wandering as wd
from beamkin.errors import RegimeWarning
from beamkin.scenario import load_scenario

DEFAULT = pathlib.Path(__file__).resolve().parents[1] / "scenarios" / "baseline.ini"


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("scenario", nargs="?", default=str(DEFAULT))
    ap.add_argument("--decades", type=float, default=1.0)
    ap.add_argument("--points", type=int, default=21)
    args = ap.parse_args()
    sc = load_scenario(args.scenario)
    t_star = wd.wander_crossover_time(sc.beam, sc.spectrum)
    print(f"# crossover time {t_star:.9g} s", file=sys.stderr)
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["time", "t_over_t_star", "r2_cl", "r2_sh", "total"])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RegimeWarning)
        for s in np.logspace(-args.decades, args.decades, args.points):
            rep = wd.wander_report(sc.beam.with_time(s * t_star), sc.spectrum)
            w.writerow([f"{rep.time:.9g}", f"{s:.6g}", f"{rep.r2_cl:.9g}", f"{rep.r2_sh:.9g}", f"{rep.total:.9g}"])


if __name__ == "__main__":
    main()
