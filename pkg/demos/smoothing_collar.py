"""Whitney smoothing leaves no jump on the boundary of the smoothed region.

Take a function u on the unit square and a smaller open square A.  Replace u
inside A by a blend of its averages over the Whitney cubes of A.  Near the
boundary of A the cubes shrink, so the blend follows u more and more closely,
and the variation of (smoothed u - u) inside thin collars around the boundary
of A dies out as the collar gets thinner.  A function that jumps exactly on
the boundary of A shows no such decay.

Run:  python3 demos/smoothing_collar.py
"""

import numpy as np

from bvext.grid import CellSet, Grid, GridFunction
from bvext.whitney import (bv_norm, collar_variation_profile, partition_of_unity, smooth_bv,
                           whitney_decompose)

WIDTHS = [2.0 ** -k for k in range(2, 6)]


def setup(level):
    n = 2 ** level
    g = Grid(2, level, (n, n), (0.0, 0.0))
    x, y = g.mesh()
    A = CellSet(g, (x > .25) & (x < .75) & (y > .25) & (y < .75))
    return g, x, y, A


def main():
    print(f"collar widths: {', '.join(f'{w:g}' for w in WIDTHS)}\n")
    for level in (7, 8, 9):
        g, x, y, A = setup(level)
        W = whitney_decompose(A)
        P = partition_of_unity(W)
        u = GridFunction(g, np.sin(3 * x) * np.cos(2 * y))
        S = smooth_bv(u, g.full(), A, P)
        prof = [v for _, v in collar_variation_profile(S - u, A, WIDTHS)]
        print(f"L={level}: {len(W):5d} cubes, {W.floor_count:4d} at the cell floor, "
              f"gradient constant {P.gradient_bound_constant:.2f}")
        print(f"       BV(S u)/BV(u) = {bv_norm(S, g.full()) / bv_norm(u, g.full()):.4f}")
        print("       collar variation " + "  ".join(f"{v:.4f}" for v in prof)
              + f"   last/first {prof[-1] / prof[0]:.3f}")

    g, x, y, A = setup(9)
    jump = [v for _, v in collar_variation_profile(A.indicator(), A, WIDTHS)]
    print("\ncontrol, the indicator of A: " + "  ".join(f"{v:.4f}" for v in jump))
    print("the jump sits on the boundary itself, so every collar sees the full perimeter 2.")


if __name__ == "__main__":
    main()
