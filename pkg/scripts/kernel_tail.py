"""Fit the far-field power law of the transverse-delta kernel.

The raw kernel on a periodic box is contaminated by images at separations
comparable to the box; a supercell (padding) pushes them out.
"""

import argparse

from emlocal.brackets import commutator_kernel, tail_exponent
from emlocal.spectral import GridSpec


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--grids", type=int, nargs="+", default=[16, 32])
    p.add_argument("--paddings", type=int, nargs="+", default=[1, 2])
    p.add_argument("--smoothing", type=float, default=1.5, help="in lattice spacings")
    args = p.parse_args()
    print("grid  padding  exponent")
    for n in args.grids:
        g = GridSpec.cube(n)
        for pad in args.paddings:
            K = commutator_kernel("Aperp_D", g, smoothing=args.smoothing * g.spacing[0], padding=pad)
            print(f"{n:4d}  {pad:7d}  {tail_exponent(K, g):8.3f}")


if __name__ == "__main__":
    main()
