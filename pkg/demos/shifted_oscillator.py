"""The simplest chain: factorization energy -1/2 with nu = 0.

The seed solution is u = exp(x^2), so alpha_1 = x and the partner is the
oscillator pulled down by one unit.  The new ground state at -1/2 is the
Gaussian itself.

    python demos/shifted_oscillator.py
"""

import numpy as np

from susyosc.chain import FactorizationConfig, build_table, partner_potential
from susyosc.numerics import Grid, build_hamiltonian, tridiagonal_eigensolve
from susyosc.states import spectrum_assemble

grid = Grid()
table = build_table(FactorizationConfig.of((-0.5, 0.0)), grid)

alpha = table.diagonal(1).values
print("max |alpha_1 - x|        :", float(np.max(np.abs(alpha - grid.x))))

V1 = partner_potential(table, 1).values
inner = grid.interior
print("max |V_1 - (x^2/2 - 1)|  :",
      float(np.max(np.abs(V1.values - (grid.x ** 2 / 2 - 1))[inner])))

states = spectrum_assemble(table, 6)
oracle = tridiagonal_eigensolve(build_hamiltonian(V1), len(states)).eigenvalues

print("\n  state              assembled   eigensolver")
for s, w in zip(states, oracle):
    print(f"  {s.label:18s} {s.energy:9.4f}   {w:11.6f}")
