"""Higher-order supersymmetric partners of the harmonic oscillator.

Modules:
  specfun   log-gamma, gamma ratio, Kummer 1F1
  numerics  grids, banded finite-difference operators, eigensolver
  chain     superpotential tables and partner potentials
  states    oscillator, transformed and missing eigenstates
  algebra   ladder operators and polynomial Heisenberg algebra checks
  cli       batch runner (``susyosc`` / ``python -m susyosc``)
"""

__version__ = "0.1.0"

from .chain import (  # noqa: E402
    FactorizationConfig,
    alpha1,
    build_table,
    chain_step,
    partner_potential,
    riccati_ode_oracle,
    riccati_residual,
    singularity_scan,
)
from .numerics import Grid, GridFunction  # noqa: E402
from .states import spectrum_assemble  # noqa: E402
