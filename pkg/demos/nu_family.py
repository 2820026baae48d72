"""First-order partners of the oscillator at epsilon = 0 as nu varies.

For |nu| < 1 the seed u stays positive and the partner potential is
regular; it gains a level at epsilon = 0 below the untouched ladder.  At
|nu| >= 1 the seed develops a node (or the two growing pieces of u cancel
at infinity) and the scan reports where.

    python demos/nu_family.py
"""

import numpy as np

from susyosc.chain import FactorizationConfig, build_table, partner_potential, singularity_scan
from susyosc.numerics import Grid, build_hamiltonian, tridiagonal_eigensolve

grid = Grid(n_points=4801)

print("  nu    admissible   finding")
for nu in np.round(np.arange(-1.4, 1.41, 0.2), 10):
    rep = singularity_scan(FactorizationConfig.of((0.0, nu)), grid)
    note = ""
    if rep.fatal:
        f = rep.fatal[0]
        note = f"{f.kind} at x={f.x:.3f}"
    print(f"  {nu + 0.0:+.1f}  {str(rep.admissible):10s}   {note}")

print("\nlowest levels of the partner potential:")
for nu in (-0.9, 0.0, 0.5, 0.9):
    t = build_table(FactorizationConfig.of((0.0, nu)), grid)
    V = partner_potential(t, 1).values
    w = tridiagonal_eigensolve(build_hamiltonian(V), 5).eigenvalues
    # the potential well tilts with nu, the spectrum does not move
    j = int(np.argmin(V.values))
    print(f"  nu={nu:+.1f}  min V at x={float(grid.x[j]):+.2f}  E = {np.round(w, 4) + 0.0}")
