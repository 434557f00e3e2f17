#!/usr/bin/env python3
"""Sweep the flux step of the dwell-and-ramp scenario and dump phases to CSV.

The central prediction is phase = (flux step / 2 pi) * (cage azimuth gap),
with the arms never enclosing the solenoid and the packets parked inside
shielded cages while the current ramps.  Every route should land on the same
line; the CSV lets you plot them against each other.
"""

import argparse
import math
import sys

import numpy as np

import abphase as ab
from abphase.presets import ramp_tree

TWO_PI = 2.0 * math.pi


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--steps", type=int, default=9, help="number of flux values")
    parser.add_argument("--max-flux", type=float, default=2 * TWO_PI)
    parser.add_argument("--azimuth-gap", type=float, default=0.5 * math.pi)
    parser.add_argument("--out", default="-", help="CSV path, '-' for stdout")
    args = parser.parse_args(argv)

    rows = ["d_flux,oracle,decomposition,field_line,surface_direct,surface_around"]
    for d_flux in np.linspace(-args.max_flux, args.max_flux, args.steps):
        tree = ramp_tree(d_flux=float(d_flux),
                         azimuth_a=-0.5 * args.azimuth_gap,
                         azimuth_b=0.5 * args.azimuth_gap)
        scn = ab.scenario_from_tree(tree)
        kn = scn.config.knot_times()
        dec = ab.phase_decomposition(scn.interferometer, scn.config).total
        line = ab.phase_field_line(scn.interferometer, scn.config).total
        surf_d = ab.phase_surface(
            ab.build_surface(scn.interferometer, scn.strategies["direct"],
                             scn.grid_n, scn.grid_m, kn),
            scn.config, with_estimate=False).total
        surf_a = ab.phase_surface(
            ab.build_surface(scn.interferometer, scn.strategies["around"],
                             scn.grid_n, scn.grid_m, kn),
            scn.config, with_estimate=False).total
        oracle = (d_flux / TWO_PI) * args.azimuth_gap
        rows.append(",".join(repr(float(v)) for v in
                             (d_flux, oracle, dec, line, surf_d, surf_a)))
    text = "\n".join(rows) + "\n"
    if args.out == "-":
        sys.stdout.write(text)
    else:
        with open(args.out, "w") as fh:
            fh.write(text)


if __name__ == "__main__":
    main()
