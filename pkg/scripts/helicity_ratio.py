"""Compare the literal helicity integral with the duality-generator normalization."""

import argparse

import numpy as np

from emlocal.brackets import ensemble_states
from emlocal.observables import helicity
from emlocal.spectral import GridSpec


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--grid", type=int, default=32)
    p.add_argument("--states", type=int, default=20)
    p.add_argument("--exponent", type=float, default=1.0)
    args = p.parse_args()
    g = GridSpec.cube(args.grid)
    r = np.array([helicity(s, "literal") / helicity(s) for s in ensemble_states(g, range(args.states), exponent=args.exponent)])
    print(f"mean ratio   {r.mean():.16f}")
    print(f"2/pi         {2 / np.pi:.16f}")
    print(f"spread       {(r.max() - r.min()) / abs(r.mean()):.2e}")


if __name__ == "__main__":
    main()
