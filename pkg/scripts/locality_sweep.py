"""Print the normalized-bracket matrix for every density component pair.

    python scripts/locality_sweep.py --grid 16 --states 8
"""

import argparse

from emlocal import brackets as br
from emlocal.config import DENSITY_NAMES
from emlocal.spectral import GridSpec


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--grid", type=int, default=16)
    p.add_argument("--states", type=int, default=8)
    p.add_argument("--offset", type=float, nargs=2, default=(0.15, 0.25), help="y, z of both smear centres")
    p.add_argument("--sharpness", type=float, default=0.1)
    args = p.parse_args()

    g = GridSpec.cube(args.grid)
    y, z = args.offset
    f = br.bump(g, (-0.25, y, z), 0.24, "left", args.sharpness)
    h = br.bump(g, (0.25, y, z), 0.24, "right", args.sharpness)
    states = br.ensemble_states(g, range(args.states))
    print(f"separation {br.separation(f, h):.4f}, {args.states} states on {args.grid}^3")
    print(f"{'':>10}" + "".join(f"{d:>11}" for d in DENSITY_NAMES))
    for a in DENSITY_NAMES:
        cells = []
        for b in DENSITY_NAMES:
            rep = br.locality_test(a, b, f, h, states=states)
            cells.append(f"{rep.median_abs:>9.1e}{rep.verdict[0]} ")
        print(f"{a:>10}" + "".join(cells))
    print("L = LOCAL, N = NONLOCAL, I = INCONCLUSIVE (median |normalized bracket| shown)")


if __name__ == "__main__":
    main()
