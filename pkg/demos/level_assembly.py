"""Rebuilding a function from a few of its superlevel sets.

For a grid function u, the total variation equals the integral over t of
the perimeter of {u > t}; on a grid both sides are finite sums and agree
exactly.  Cutting [0, 1] into 2^l intervals and keeping one well-chosen
superlevel set per interval gives a staircase u_l that is within 2^-l of u,
and whose variation is bounded by the perimeters of the chosen sets.

Run:  python3 demos/level_assembly.py
"""

import numpy as np

from bvext.coarea import assemble_extension, coarea_check, level_profile, select_levels
from bvext.gallery import domain
from bvext.grid import GridFunction, perimeter, total_variation


def main():
    D = domain("disk", 7, radius=0.9)
    g, omega = D.grid, D.omega
    x, y = g.mesh()
    u = GridFunction(g, np.where(omega.mask, 0.5 + 0.5 * np.sin(2.5 * x) * np.cos(1.5 * y), 0.0))

    tv, integral, err = coarea_check(u, omega)
    prof = level_profile(u, omega)
    print(f"u on a disk at L=7: {len(prof.thresholds)} distinct values")
    print(f"  TV(u) = {tv:.6f}, integral of level perimeters = {integral:.6f}, rel. err {err:.1e}\n")

    print(f"  {'l':>2} {'sup|u_l - u|':>13} {'2^-l':>7} {'TV(u_l)':>9} {'sum 2^-l P':>11} {'bad':>4}")
    for l in range(1, 6):
        sel = select_levels(u, omega, l)
        ul = assemble_extension(sel)
        err = np.abs(ul.values - u.values)[omega.mask].max()
        bound = sum(2.0 ** -l * perimeter(E, omega) for E in sel.extended)
        bad = sum(not ok for ok in sel.good_flags)
        print(f"  {l:>2} {err:13.4f} {2.0 ** -l:7.4f} {total_variation(ul, omega)[0]:9.4f} {bound:11.4f} {bad:>4}")
    print("\nAll variations are measured inside the disk.  The staircase's variation never")
    print("exceeds the weighted perimeter sum and climbs toward TV(u) as l grows, while")
    print("each refinement halves the approximation error.")


if __name__ == "__main__":
    main()
