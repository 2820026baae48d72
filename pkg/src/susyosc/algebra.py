"""Ladder operators of the partner Hamiltonians and checks of their algebra.

D = B^dag a B lowers the partner spectrum by one unit, D^dag = B^dag a^dag B
raises it.  On an eigenstate with energy E,

    D^dag D = N(E) = (E - 1/2) prod_i (E - e_i - 1)(E - e_i),

so the zeros of N mark the extremal states.  All checks act on states;
commutators are never formed as matrices because boundary rows of the
high-order products carry no meaning.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .chain import FactorizationConfig, SuperpotentialTable, oscillator_potential, partner_potential
from .errors import DuplicateRootError, OverlapError
from .numerics import (
    REAL,
    BandedOperator,
    GridFunction,
    build_hamiltonian,
    compose,
    first_order_operator,
    inner_product,
    interior_norm,
    norm,
)
from .states import EigenState

ROOT_TOL = 1e-9
ANNIHILATION_THRESHOLD = 1e-2
ENERGY_MATCH = 1e-6


@dataclass(frozen=True, eq=False)
class LadderOperatorSet:
    B_dagger: BandedOperator
    B: BandedOperator
    D: BandedOperator
    D_dagger: BandedOperator
    H_tilde: BandedOperator
    H0: BandedOperator
    config: FactorizationConfig
    a: BandedOperator = field(repr=False, default=None)
    a_dagger: BandedOperator = field(repr=False, default=None)

    @property
    def m(self) -> int:
        return self.config.m

    @property
    def grid(self):
        return self.H0.grid

    def transpose_defect(self) -> float:
        """max |D^dag - D^T| on interior rows, relative to the largest entry of D."""
        diff = np.abs(self.D_dagger.bands - self.D.transpose().bands)
        rows = self.grid.interior
        return float(np.max(diff[:, rows]) / np.max(np.abs(self.D.bands)))


@dataclass(frozen=True)
class NumberPolynomial:
    """N(E) = (E - 1/2) prod (E - e_i - 1)(E - e_i)."""

    epsilons: tuple

    @classmethod
    def from_config(cls, config: FactorizationConfig) -> "NumberPolynomial":
        return cls(tuple(config.epsilons))

    @property
    def degree(self) -> int:
        return 2 * len(self.epsilons) + 1

    @property
    def roots(self) -> list:
        r = [0.5]
        for e in self.epsilons:
            r += [e, e + 1]
        return sorted(r)


def number_eval(poly: NumberPolynomial, E: float) -> float:
    out = E - 0.5
    for e in poly.epsilons:
        out *= (E - e - 1) * (E - e)
    return out


@dataclass(frozen=True)
class LadderStructure:
    ladders: tuple  # ((start_energy, length), ...) sorted by start; length may be math.inf

    @property
    def starts(self):
        return [s for s, _ in self.ladders]

    @property
    def lengths(self):
        return [n for _, n in self.ladders]

    def matches(self, other: "LadderStructure", tol: float = 1e-6) -> bool:
        if len(self.ladders) != len(other.ladders):
            return False
        return all(abs(a - b) <= tol and la == lb
                   for (a, la), (b, lb) in zip(self.ladders, other.ladders))

    def to_list(self):
        return [[s, None if math.isinf(n) else n] for s, n in self.ladders]


@dataclass
class ResidualReport:
    check: str
    metrics: dict = field(default_factory=dict)  # name -> {state label: value}

    def add(self, metric: str, label: str, value: float):
        self.metrics.setdefault(metric, {})[label] = float(value)

    def max(self, metric: str | None = None) -> float:
        if metric is not None:
            vals = self.metrics.get(metric, {})
            return max(vals.values()) if vals else 0.0
        return max((self.max(k) for k in self.metrics), default=0.0)

    def to_dict(self):
        return {"check": self.check,
                "max": {k: self.max(k) for k in self.metrics},
                "values": self.metrics}


# ---------------------------------------------------------------------------

def build_ladder_set(table: SuperpotentialTable) -> LadderOperatorSet:
    grid = table.grid
    m = table.m
    x_alpha = GridFunction(grid, grid.x)
    a = first_order_operator(x_alpha, "annihilation")
    ad = first_order_operator(x_alpha, "creation")
    if m == 0:
        B_dag = B = BandedOperator.identity(grid)
    else:
        creators = [first_order_operator(table.diagonal(j), "creation") for j in range(1, m + 1)]
        annihilators = [first_order_operator(table.diagonal(j), "annihilation")
                        for j in range(1, m + 1)]
        B_dag = compose(creators[::-1])  # A_m^dag ... A_1^dag
        B = compose(annihilators)  # A_1 ... A_m
    D = compose([B_dag, a, B])
    D_dag = compose([B_dag, ad, B])
    H_tilde = build_hamiltonian(partner_potential(table, m).values)
    H0 = build_hamiltonian(oscillator_potential(grid))
    return LadderOperatorSet(B_dag, B, D, D_dag, H_tilde, H0, table.config, a, ad)


def verify_intertwining(ops: LadderOperatorSet, test_states) -> ResidualReport:
    """||(H~ B^dag - B^dag H0) psi|| / ||B^dag psi|| on the interior window."""
    rep = ResidualReport("intertwining")
    for s in test_states:
        psi = s.wavefunction
        up = ops.B_dagger.apply(psi)
        r = ops.H_tilde.apply(up) - ops.B_dagger.apply(ops.H0.apply(psi))
        rep.add("intertwining", s.label, interior_norm(r) / interior_norm(up))
    return rep


def verify_polynomial_algebra(ops: LadderOperatorSet, states) -> ResidualReport:
    """[H~, D] = -D, [H~, D^dag] = D^dag and [D, D^dag] = N(E+1) - N(E) on states.

    Missing states are additionally checked for annihilation by D and D^dag.
    """
    poly = NumberPolynomial.from_config(ops.config)
    H, D, Dd = ops.H_tilde, ops.D, ops.D_dagger
    rep = ResidualReport("algebra")
    for s in states:
        psi = s.wavefunction
        Hpsi = H.apply(psi)
        Dpsi = D.apply(psi)
        Ddpsi = Dd.apply(psi)
        r1 = H.apply(Dpsi) - D.apply(Hpsi) + Dpsi
        r2 = H.apply(Ddpsi) - Dd.apply(Hpsi) - Ddpsi
        rep.add("commutator_lower", s.label, interior_norm(r1) / (1 + interior_norm(Dpsi)))
        rep.add("commutator_raise", s.label, interior_norm(r2) / (1 + interior_norm(Ddpsi)))
        lhs = inner_product(psi, D.apply(Ddpsi)) - inner_product(psi, Dd.apply(Dpsi))
        rhs = number_eval(poly, s.energy + 1) - number_eval(poly, s.energy)
        rep.add("ladder_commutator", s.label, abs(float(lhs) - rhs) / (1 + abs(rhs)))
        if s.kind == "missing":
            rep.add("annihilation_D", s.label, interior_norm(Dpsi))
            rep.add("annihilation_D_dagger", s.label, interior_norm(Ddpsi))
    return rep


def verify_number_operator(ops: LadderOperatorSet, states) -> ResidualReport:
    """|<psi, D^dag D psi> - N(E)| / (1 + N(E))."""
    poly = NumberPolynomial.from_config(ops.config)
    rep = ResidualReport("number")
    for s in states:
        psi = s.wavefunction
        val = float(inner_product(psi, ops.D_dagger.apply(ops.D.apply(psi))))
        ne = number_eval(poly, s.energy)
        rep.add("number", s.label, abs(val - ne) / (1 + abs(ne)))
    return rep


def _bracket(eps, E_from, E_to) -> float:
    out = 1.0
    for e in eps:
        out *= (E_from - e) * (E_to - e)
    return out


def linearized_action(ops: LadderOperatorSet, basis, direction: str, n: int,
                      min_overlap: float = 0.999) -> tuple[float, int]:
    """Measured coefficient of D_L (``lower``) or D_L^dag (``raise``) on psi~_n.

    D psi~_n is projected on the basis, the neighbour's component is divided
    by sqrt(prod (E_{n-1} - e_i)(E_n - e_i)) (or the raising analogue) and
    returned with the neighbour index.  For n = 0 lowering the state is
    extremal: the returned coefficient is ||D psi~_0|| and the index is -1.
    """
    by_n = {s.index: s for s in basis if s.kind in ("transformed", "oscillator")}
    if n not in by_n:
        raise KeyError(f"basis has no state with index {n}")
    psi = by_n[n].wavefunction
    eps = ops.config.epsilons
    E = n + 0.5
    if direction == "lower":
        phi = ops.D.apply(psi)
        if n == 0:
            return float(norm(phi)), -1
        target, bracket = n - 1, _bracket(eps, E - 1, E)
    elif direction == "raise":
        phi = ops.D_dagger.apply(psi)
        target, bracket = n + 1, _bracket(eps, E, E + 1)
    else:
        raise ValueError("direction must be 'lower' or 'raise'")
    if target not in by_n:
        raise KeyError(f"basis has no state with index {target}")
    c = float(inner_product(by_n[target].wavefunction, phi))
    total = float(norm(phi))
    if total == 0 or abs(c) / total < min_overlap:
        raise OverlapError(
            f"D{'_dag' if direction == 'raise' else ''} psi~_{n} is not along psi~_{target} "
            f"(overlap {abs(c) / total if total else 0:.4f})"
        )
    return c / math.sqrt(bracket), target


def verify_linearized(ops: LadderOperatorSet, basis, n_values=range(6)) -> ResidualReport:
    rep = ResidualReport("linearized")
    for n in n_values:
        c, _ = linearized_action(ops, basis, "lower", n)
        rep.add("lower", f"n={n}", abs(c - math.sqrt(n)))
        c, _ = linearized_action(ops, basis, "raise", n)
        rep.add("raise", f"n={n}", abs(c - math.sqrt(n + 1)))
    return rep


def _block_ops(ops: LadderOperatorSet):
    """Q, Q^dag acting on (upper, lower) pairs; upper lives with H~, lower with H0."""
    def Q(v):
        u, l = v
        return (0 * u, ops.B.apply_array(u))

    def Qd(v):
        u, l = v
        return (ops.B_dagger.apply_array(l), 0 * l)

    return Q, Qd


def _prod_shifted(H: BandedOperator, eps, v: np.ndarray) -> np.ndarray:
    for e in eps:
        v = H.apply_array(v) - REAL(e) * v
    return v


def verify_susy_block(ops: LadderOperatorSet, test_states) -> ResidualReport:
    """Block realization Q = [[0, 0], [B, 0]], Q^dag = [[0, B^dag], [0, 0]].

    ``test_states`` is a list of (upper, lower) EigenState pairs; either entry
    may be None for a zero component.  Reports, relative to the size of
    H_ss v:
      anticommutator  ||{Q1, Q2} v||
      q_squared       ||2 Q_i^2 v - H_ss v||  (i = 1, 2)
      factorization   ||H_ss v - prod(H^p - e_i) v||   (interior window)
    and for each component the expectation value of H_ss against
    prod(E - e_i) (relative to max(1, |prod|)).
    """
    Q, Qd = _block_ops(ops)
    eps = ops.config.epsilons
    n = ops.grid.n_points
    sq2 = np.sqrt(REAL(2))
    mask = ops.grid.interior
    h = ops.grid.h
    rep = ResidualReport("susy_block")

    def add(v, w, c=1):
        return (v[0] + c * w[0], v[1] + c * w[1])

    def scale(v, c):
        return (v[0] * c, v[1] * c)

    def Q1(v):
        return scale(add(Qd(v), Q(v)), 1 / sq2)

    def Q2(v):
        # (Q^dag - Q)/(i sqrt 2), carried as complex arrays
        return scale(add(Qd(v), Q(v), -1), 1 / (1j * sq2))

    def bnorm(v, interior=False):
        sel = mask if interior else slice(None)
        return float(np.sqrt(sum(np.sum(np.abs(c[sel]) ** 2) for c in v) * h))

    for up, lo in test_states:
        u = up.wavefunction.values if up is not None else np.zeros(n, dtype=REAL)
        l = lo.wavefunction.values if lo is not None else np.zeros(n, dtype=REAL)
        label = f"({up.label if up else 0}|{lo.label if lo else 0})"
        v = (u.astype(np.clongdouble), l.astype(np.clongdouble))
        Hss = (ops.B_dagger.apply_array(ops.B.apply_array(u)),
               ops.B.apply_array(ops.B_dagger.apply_array(l)))
        ref = 1 + bnorm(Hss)
        anti = add(Q1(Q2(v)), Q2(Q1(v)))
        rep.add("anticommutator", label, bnorm(anti) / ref)
        for name, Qi in (("q1_squared", Q1), ("q2_squared", Q2)):
            r = add(scale(Qi(Qi(v)), 2), Hss, -1)
            rep.add(name, label, bnorm(r) / ref)
        prod = (_prod_shifted(ops.H_tilde, eps, u), _prod_shifted(ops.H0, eps, l))
        r = add(Hss, prod, -1)
        rep.add("factorization", label, bnorm(r, True) / (1 + bnorm(prod, True)))
        for comp, st, hv in ((0, up, Hss[0]), (1, lo, Hss[1])):
            if st is None:
                continue
            expect = math.prod(st.energy - e for e in eps)
            got = float(inner_product(st.wavefunction, GridFunction(ops.grid, hv)))
            rep.add("eigenvalue", f"{label}[{comp}]", abs(got - expect) / max(1.0, abs(expect)))
    return rep


# ---------------------------------------------------------------------------
# ladder structure
# ---------------------------------------------------------------------------

def analyze_ladder_structure(roots, normalizable_flags) -> LadderStructure:
    """Ladders implied by the zeros of a generalized number operator.

    Each normalizable root starts a ladder of spacing 1.  If some
    non-normalizable root lies a positive integer l above it, the ladder is
    finite with length l (the smallest such l); otherwise it is infinite.
    Equal roots with different flags are allowed; a repeated
    (energy, flag) pair is rejected.
    """
    roots = [float(r) for r in roots]
    flags = [bool(f) for f in normalizable_flags]
    if len(roots) != len(flags):
        raise ValueError("roots and flags differ in length")
    for i in range(len(roots)):
        for j in range(i + 1, len(roots)):
            if abs(roots[i] - roots[j]) <= ROOT_TOL and flags[i] == flags[j]:
                raise DuplicateRootError(f"root {roots[i]} appears twice")
    bad = [r for r, f in zip(roots, flags) if not f]
    ladders = []
    for r, f in zip(roots, flags):
        if not f:
            continue
        length = math.inf
        for b in bad:
            gap = b - r
            l = round(gap)
            if l >= 1 and abs(gap - l) <= ROOT_TOL:
                length = min(length, l)
        ladders.append((r, length))
    ladders.sort(key=lambda t: t[0])
    return LadderStructure(tuple(ladders))


def _annihilated(op: BandedOperator, s: EigenState) -> bool:
    return float(interior_norm(op.apply(s.wavefunction))) < ANNIHILATION_THRESHOLD


def root_flags(table: SuperpotentialTable) -> tuple[list, list]:
    """Roots of N together with the normalizability of the matching kernel function.

    The kernel of D is spanned by B^dag psi_0 (energy 1/2), the missing
    states (energies e_i) and functions built on exp(+int alpha_i) (energies
    e_i + 1).  Each is constructed on the grid and tested with the same edge
    criterion used for missing states.
    """
    from .states import is_normalizable, intermediate_missing_state

    eps = table.config.epsilons
    pairs = [(0.5, all(0.5 - e > 0 for e in eps))]
    h = table.grid.h
    for i in range(1, table.m + 1):
        pairs.append((eps[i - 1], bool(intermediate_missing_state(table, i, table.m).normalizable)))
        a = table.diagonal(i).values
        logphi = np.concatenate([[REAL(0)], np.cumsum((a[1:] + a[:-1]) * h / 2)])
        phi = np.exp(logphi - np.max(logphi))
        pairs.append((eps[i - 1] + 1, bool(is_normalizable(phi))))
    pairs.sort(key=lambda t: t[0])
    return [r for r, _ in pairs], [f for _, f in pairs]


def spectrum_ladders(states) -> LadderStructure:
    """Ladders of an assembled spectrum.

    Transformed states with consecutive indices form one ladder; it is
    reported as infinite because the assembled list is a truncation of an
    unbounded sequence.  Every missing state is a ladder on its own.
    """
    ladders = []
    tr = sorted((s for s in states if s.kind == "transformed"), key=lambda s: s.index)
    if tr:
        idx = [s.index for s in tr]
        if idx != list(range(idx[0], idx[0] + len(idx))):
            raise ValueError("transformed states do not form a contiguous ladder")
        ladders.append((float(tr[0].energy), math.inf))
    for s in states:
        if s.kind == "missing":
            ladders.append((float(s.energy), 1))
    ladders.sort(key=lambda t: t[0])
    return LadderStructure(tuple(ladders))


def operator_ladders(ops: LadderOperatorSet, states) -> LadderStructure:
    """Ladders read off an assembled spectrum by walking with D^dag.

    A ladder starts at every state annihilated by D and climbs while D^dag
    does not annihilate the current state and the next level is present.  A
    ladder that is still climbing at the top of the list counts as infinite.
    Needs D itself to be resolved on the grid, which holds for m <= 2.
    """
    states = sorted(states, key=lambda s: s.energy)
    ladders = []
    for s in states:
        if not _annihilated(ops.D, s):
            continue
        length, cur = 1, s
        while True:
            if _annihilated(ops.D_dagger, cur):
                break
            nxt = [t for t in states if abs(t.energy - cur.energy - 1) <= ENERGY_MATCH
                   and not _annihilated(ops.D, t)]
            if not nxt:
                length = math.inf
                break
            cur = nxt[0]
            length += 1
        ladders.append((float(s.energy), length))
    ladders.sort(key=lambda t: t[0])
    return LadderStructure(tuple(ladders))
