"""Eigenstates of the oscillator and of its partner Hamiltonians.

Phase convention: every state is flipped so that its right-most sample
above 1e-6 of the peak is positive.  That is the usual Hermite-function
phase and also the phase that A_j^dagger produces naturally (at large x it
acts like multiplication by sqrt(2) x), so ladder coefficients come out
positive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .chain import SuperpotentialTable
from .errors import StateRangeError
from .numerics import (
    REAL,
    BandedOperator,
    Grid,
    GridFunction,
    first_order_operator,
    fix_sign,
    inner_product,
    interior_norm,
    norm,
)

N_MAX_OSCILLATOR = 60
NORMALIZABLE_EDGE = 1e-8


@dataclass(frozen=True, eq=False)
class EigenState:
    energy: float
    wavefunction: GridFunction
    provenance: tuple  # ("oscillator", n, 0) | ("transformed", n, level) | ("missing", j, level)
    normalizable: bool = True
    norm_deviation: float = 0.0  # |grid norm - 1| before renormalization

    @property
    def kind(self) -> str:
        return self.provenance[0]

    @property
    def index(self) -> int:
        return self.provenance[1]

    @property
    def level(self) -> int:
        return self.provenance[2]

    @property
    def grid(self) -> Grid:
        return self.wavefunction.grid

    @property
    def label(self) -> str:
        kind, idx, lvl = self.provenance
        if kind == "oscillator":
            return f"oscillator:{idx}"
        return f"{kind}:{idx}@{lvl}"


def oscillator_state(n: int, grid: Grid) -> EigenState:
    """Hermite function psi_n via the normalized three-term recurrence."""
    if not (0 <= int(n) <= N_MAX_OSCILLATOR) or int(n) != n:
        raise StateRangeError(f"oscillator index must be in 0..{N_MAX_OSCILLATOR}")
    n = int(n)
    x = grid.x
    prev = np.zeros_like(x)
    cur = np.pi ** REAL(-0.25) * np.exp(-x * x / 2)
    for k in range(n):
        nxt = np.sqrt(REAL(2) / (k + 1)) * x * cur - np.sqrt(REAL(k) / (k + 1)) * prev
        prev, cur = cur, nxt
    f = GridFunction(grid, cur)
    nrm = norm(f)
    return EigenState(n + 0.5, f / nrm, ("oscillator", n, 0), True, float(abs(nrm - 1)))


def _creation_ops(table: SuperpotentialTable, levels) -> list[BandedOperator]:
    return [first_order_operator(table.diagonal(j), "creation") for j in levels]


def _apply_all(ops, f: GridFunction) -> GridFunction:
    for op in ops:
        f = op.apply(f)
    return f


def _finish(values, energy, provenance, normalizable=True, analytic_norm=None):
    f = GridFunction(values.grid, fix_sign(values.values))
    if not normalizable:
        return EigenState(float(energy), f, provenance, False, float("nan"))
    nrm = norm(f)
    dev = abs(float(analytic_norm) - 1) if analytic_norm is not None else 0.0
    return EigenState(float(energy), f / nrm, provenance, True, dev)


def is_normalizable(values: np.ndarray) -> bool:
    peak = np.max(np.abs(values))
    if not np.isfinite(peak) or peak == 0:
        return False
    return bool(max(abs(values[0]), abs(values[-1])) < NORMALIZABLE_EDGE * peak)


def missing_state(table: SuperpotentialTable, level: int) -> EigenState:
    """exp(-int alpha_i(y, e_i) dy) for the level-i diagonal superpotential."""
    if not (1 <= level <= table.m):
        raise ValueError(f"level {level} outside 1..{table.m}")
    a = table.diagonal(level).values
    h = table.grid.h
    logpsi = -np.concatenate([[REAL(0)], np.cumsum((a[1:] + a[:-1]) * h / 2)])
    psi = np.exp(logpsi - np.max(logpsi))
    ok = is_normalizable(psi)
    return _finish(GridFunction(table.grid, psi), table.config.epsilons[level - 1],
                   ("missing", level, level), ok)


def transformed_state(table: SuperpotentialTable, n: int, level: int | None = None) -> EigenState:
    """A_i^dag ... A_1^dag psi_n / sqrt(prod (E_n - e_j)), renormalized on the grid.

    ``norm_deviation`` records how far the analytically normalized state is
    from unit grid norm.
    """
    level = table.m if level is None else level
    if not (0 <= level <= table.m):
        raise ValueError(f"level {level} outside 0..{table.m}")
    base = oscillator_state(n, table.grid)
    E = base.energy
    eps = table.config.epsilons[:level]
    factor = math.prod(E - e for e in eps)
    if level and factor <= 0:
        raise ValueError(
            f"E_{n} = {E} coincides with a factorization energy; the state is deleted"
        )
    if level == 0:
        return base
    psi = _apply_all(_creation_ops(table, range(1, level + 1)), base.wavefunction)
    psi = psi / np.sqrt(REAL(factor))
    return _finish(psi, E, ("transformed", int(n), level), True, norm(psi))


def intermediate_missing_state(table: SuperpotentialTable, j: int, level: int) -> EigenState:
    """Level-j missing state carried up to ``level`` by A_{j+1}^dag ... A_level^dag."""
    if not (1 <= j <= level <= table.m):
        raise ValueError("need 1 <= j <= level <= m")
    base = missing_state(table, j)
    if level == j:
        return base
    eps = table.config.epsilons
    factor = math.prod(eps[j - 1] - eps[k - 1] for k in range(j + 1, level + 1))
    psi = _apply_all(_creation_ops(table, range(j + 1, level + 1)), base.wavefunction)
    psi = psi / np.sqrt(REAL(factor))
    if not base.normalizable:
        return _finish(psi, base.energy, ("missing", j, level), False)
    return _finish(psi, base.energy, ("missing", j, level), is_normalizable(psi.values), norm(psi))


def spectrum_assemble(table: SuperpotentialTable, n_max: int) -> list[EigenState]:
    """Normalizable missing states plus transformed states n = 0..n_max, by energy."""
    m = table.m
    out = []
    for j in range(1, m + 1):
        s = intermediate_missing_state(table, j, m)
        if s.normalizable:
            out.append(s)
    eps = table.config.epsilons
    for n in range(n_max + 1):
        E = n + 0.5
        if any(E - e <= 0 for e in eps):
            continue  # the oscillator state deleted by an e = 1/2 step
        out.append(transformed_state(table, n, m))
    out.sort(key=lambda s: s.energy)
    return out


def eigen_residual(state: EigenState, H: BandedOperator) -> float:
    """Interior L2 norm of H psi - E psi."""
    r = H.apply(state.wavefunction) - state.energy * state.wavefunction
    return float(interior_norm(r))


def sign_changes(state: EigenState, rel_threshold: float = 1e-6) -> int:
    """Interior sign changes, ignoring samples below rel_threshold of the peak."""
    v = state.wavefunction.values[state.grid.interior]
    v = v[np.abs(v) > rel_threshold * np.max(np.abs(v))]
    return int(np.sum(np.sign(v[1:]) != np.sign(v[:-1])))


def overlap_matrix(states) -> np.ndarray:
    k = len(states)
    M = np.empty((k, k))
    for a in range(k):
        for b in range(a, k):
            M[a, b] = M[b, a] = float(inner_product(states[a].wavefunction,
                                                    states[b].wavefunction))
    return M
