"""Deviation of the exact mean PDF from the saturated closed form versus nu t.

Writes ``nu_t,max_rel_dev`` rows for the scenario's beam and spectrum on an
n x n (r, q) grid around the conditional momentum centre.
"""

import argparse
import csv
import pathlib
import sys

from beamkin import validation
from beamkin.scenario import load_scenario

DEFAULT = pathlib.Path(__file__).resolve().parents[1] / "scenarios" / "baseline.ini"


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("scenario", nargs="?", default=str(DEFAULT))
    ap.add_argument("--nu-t", type=float, nargs="+", default=[10, 20, 50, 100, 200])
    ap.add_argument("--grid", type=int, default=5)
    args = ap.parse_args()
    sc = load_scenario(args.scenario)
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["nu_t", "max_rel_dev", "dev_times_nu_t"])
    for nt in args.nu_t:
        d = validation.cross_tier_deviation(sc.beam, sc.spectrum, nt, n=args.grid)
        w.writerow([f"{nt:g}", f"{d:.6g}", f"{d * nt:.6g}"])
        sys.stdout.flush()


if __name__ == "__main__":
    main()
