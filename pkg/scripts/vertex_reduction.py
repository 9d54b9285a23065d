#!/usr/bin/env python3
"""Sweep the thickness threshold on a jagged blob and report vertex counts."""

import argparse

import numpy as np

from hypermap.segmentation import approximate_polygon_traced


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--vertices", type=int, default=500)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--thicknesses", type=float, nargs="+", default=[5, 10, 20, 50, 100])
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    angles = np.sort(rng.uniform(0.0, 2.0 * np.pi, args.vertices))
    radii = 400.0 + rng.uniform(-80.0, 80.0, args.vertices)
    blob = np.stack([radii * np.cos(angles), radii * np.sin(angles)], axis=1)

    print(f"{'thickness px':>13} {'vertices':>9} {'removed':>8} {'max removal dist':>17}")
    for t in args.thicknesses:
        poly, removed = approximate_polygon_traced(blob, t)
        worst = max((r.distance for r in removed), default=0.0)
        print(f"{t:>13.1f} {len(poly):>9} {len(removed):>8} {worst:>17.3f}")


if __name__ == "__main__":
    main()
