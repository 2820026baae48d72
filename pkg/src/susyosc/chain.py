"""Superpotential chains for the harmonic oscillator.

Level 1 comes from the closed-form general solution of the oscillator
Riccati equation,

    alpha_1(x, e) = -x + u'(x)/u(x),
    u(x) = M(a, 1/2, x^2) + 2 nu R(e) x M(a + 1/2, 3/2, x^2),
    a = (1 - 2e)/4,   R(e) = Gamma((3-2e)/4) / Gamma((1-2e)/4),

and higher levels follow from the algebraic (Backlund-type) step

    alpha_i(x, e_k) = -alpha_{i-1}(x, e_{i-1})
                      - 2 (e_{i-1} - e_k) / (alpha_{i-1}(x, e_{i-1}) - alpha_{i-1}(x, e_k)).

Only the diagonal entries alpha_i(., e_i) enter the partner potentials and
have to be regular.  Off-diagonal entries are intermediate quantities and
for m >= 2 they generally *must* carry poles: with two nodeless seeds at
e_1 > e_2 the Wronskian of the two transformation functions changes sign,
so the next denominator would vanish.  The usable chains alternate
nodeless / one-node / nodeless seeds, and the poles of the middle one are
cancelled by the step above.  The table records those poles and the
Riccati residual check skips a small neighbourhood around each.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from . import specfun
from .errors import (
    DegenerateEnergyError,
    InadmissibleError,
    PoleEncounteredError,
    SingularChainError,
    SingularSuperpotentialError,
    SusyOscError,
)
from .numerics import REAL, Grid, GridFunction, derivative_matrix

E0 = 0.5  # oscillator ground-state energy
DENOMINATOR_GUARD = 1e-10
EDGE_CANCELLATION = 1e-8
DEGENERATE_GAP = 1e-12
RICCATI_TOL = 1e-5
# build_table's own sanity bound; the strict 1e-5 bound is resolution-limited
# (stencil truncation h^2 alpha'''/6) and is checked on a fine grid instead.
BUILD_RICCATI_TOL = 1e-3
ODE_POLE_BOUND = 1e8
POLE_STANDIN = 1e-300


@dataclass(frozen=True)
class FactorizationConfig:
    """Ordered (epsilon_i, nu_i) pairs with e_m < ... < e_1 <= 1/2.

    An empty tuple is the identity chain (m = 0).
    """

    entries: tuple = ()

    def __post_init__(self):
        ent = tuple((float(e), float(n)) for e, n in self.entries)
        for e, n in ent:
            if not (math.isfinite(e) and math.isfinite(n)):
                raise ValueError("factorization parameters must be finite")
        if ent and ent[0][0] > E0:
            raise ValueError(f"epsilon_1 = {ent[0][0]} exceeds the ground energy 1/2")
        for (e1, _), (e2, _) in zip(ent, ent[1:]):
            if not e2 < e1:
                raise ValueError("factorization energies must be strictly decreasing")
        object.__setattr__(self, "entries", ent)

    @classmethod
    def of(cls, *pairs):
        return cls(tuple(pairs))

    @property
    def m(self) -> int:
        return len(self.entries)

    @property
    def epsilons(self) -> list:
        return [e for e, _ in self.entries]

    @property
    def nus(self) -> list:
        return [n for _, n in self.entries]

    def to_list(self):
        return [{"epsilon": e, "nu": n} for e, n in self.entries]


@dataclass(frozen=True, eq=False)
class SuperpotentialTable:
    """alpha[(i, k)] = level-i superpotential at energy e_k, 1 <= i <= k <= m."""

    grid: Grid
    config: FactorizationConfig
    alpha: dict
    poles: dict = field(default_factory=dict)
    residuals: dict = field(default_factory=dict)

    @property
    def m(self) -> int:
        return self.config.m

    def diagonal(self, i: int) -> GridFunction:
        return self.alpha[(i, i)]

    def entry(self, i: int, k: int) -> GridFunction:
        return self.alpha[(i, k)]


@dataclass(frozen=True, eq=False)
class PartnerPotential:
    grid: Grid
    level: int
    values: GridFunction
    config: FactorizationConfig


@dataclass
class Finding:
    level: int
    index: int
    kind: str
    x: float | None
    fatal: bool
    detail: str = ""

    def to_dict(self):
        return {
            "level": self.level,
            "index": self.index,
            "kind": self.kind,
            "x": self.x,
            "fatal": self.fatal,
            "detail": self.detail,
        }


@dataclass
class AdmissibilityReport:
    config: FactorizationConfig
    admissible: bool
    findings: list

    @property
    def fatal(self):
        return [f for f in self.findings if f.fatal]

    def sign_changes(self, level=1, index=1):
        return [f for f in self.findings
                if f.kind == "node" and f.level == level and f.index == index]

    def to_dict(self):
        return {
            "admissible": self.admissible,
            "config": self.config.to_list(),
            "findings": [f.to_dict() for f in self.findings],
        }


# ---------------------------------------------------------------------------
# level 1: closed form
# ---------------------------------------------------------------------------

def _logsum(terms, lref):
    acc = 0
    for lg, sg in terms:
        with np.errstate(invalid="ignore", over="ignore"):
            contrib = sg * np.exp(lg - lref)
        acc = acc + np.where(sg == 0, 0, contrib)
    return acc


def seed_function(epsilon: float, nu: float, x: np.ndarray, config=None):
    """u and u' on ``x`` sharing one (unknown) positive scale factor.

    Returns (u, du, cancellation) where ``cancellation`` is
    |u| / (|even part| + |odd part|); it collapses towards rounding level
    where the two growing pieces of u cancel (|nu| = 1 at large |x|).
    """
    if epsilon > E0:
        raise ValueError(f"epsilon = {epsilon} exceeds 1/2")
    x = np.asarray(x, dtype=REAL)
    z = x * x
    a1, b1 = (1 - 2 * epsilon) / 4, 0.5
    a2, b2 = (3 - 2 * epsilon) / 4, 1.5
    c = 2 * nu * specfun.gamma_ratio(epsilon)

    # symmetric grids repeat every z = x^2; evaluate the series once per value
    zu, inv = np.unique(z, return_inverse=True)

    def kummer(fn, a, b):
        lg, sg = fn(a, b, zu, config)
        return lg[inv], sg[inv]

    l1, s1 = kummer(specfun.log_kummer_1f1, a1, b1)
    l2, s2 = kummer(specfun.log_kummer_1f1, a2, b2)
    d1, t1 = kummer(specfun.log_kummer_1f1_dz, a1, b1)
    d2, t2 = kummer(specfun.log_kummer_1f1_dz, a2, b2)

    with np.errstate(divide="ignore"):
        lcx = np.log(np.abs(REAL(c) * x))
        l2x = np.log(np.abs(2 * x))
        lc = np.log(abs(c)) if c != 0 else -np.inf
        l2cx2 = np.log(np.abs(2 * REAL(c) * z))
    scx = np.sign(REAL(c) * x)
    sx = np.sign(x)
    sc = np.sign(c)

    even = (l1, s1)
    odd = (l2 + lcx, s2 * scx)
    du_terms = [(d1 + l2x, t1 * sx), (l2 + lc, s2 * sc), (d2 + l2cx2, t2 * sc)]

    lref = np.maximum(l1, odd[0])
    u = _logsum([even, odd], lref)
    du = _logsum(du_terms, lref)
    scale = _logsum([(l1, np.abs(s1)), (odd[0], np.abs(odd[1]))], lref)
    return u, du, np.abs(u) / scale


def _sign_change_indices(v: np.ndarray) -> np.ndarray:
    """j such that v[j] and v[j+1] have opposite sign (or v[j] == 0)."""
    s = np.sign(v)
    return np.flatnonzero((s[:-1] * s[1:] < 0) | (s[:-1] == 0))


def _crossings(v: np.ndarray, h) -> tuple[np.ndarray, np.ndarray]:
    """Split sign changes of ``v`` into zero crossings and pole crossings.

    Across a simple pole the two neighbouring samples are both O(1/h); across
    a smooth zero they are O(slope * h).
    """
    idx = _sign_change_indices(v)
    mag = np.abs(v[idx]) + np.abs(v[idx + 1])
    big = mag > 1 / h
    return idx[~big], idx[big]


def _mid(x, j):
    return float(0.5 * (x[j] + x[j + 1]))


def _level1(epsilon, nu, grid, allow_nodes, config, level=1, index=1):
    """Closed-form alpha_1 plus non-fatal findings; raises on fatal ones."""
    x = grid.x
    u, du, cancel = seed_function(epsilon, nu, x, config)
    findings = []
    for end in (0, -1):
        if cancel[end] < EDGE_CANCELLATION:
            raise SingularSuperpotentialError(
                f"growing parts of u cancel at x={float(x[end]):.4g} "
                f"(|nu| at the admissibility boundary)",
                level=level, index=index, x=float(x[end]),
            )
    nodes = _sign_change_indices(u)
    for j in nodes:
        if not allow_nodes:
            raise SingularSuperpotentialError(
                f"u changes sign near x={_mid(x, j):.6g}",
                level=level, index=index, x=_mid(x, j),
            )
        findings.append(Finding(level, index, "pole", _mid(x, j), False,
                                "node of u, pole of the off-diagonal superpotential"))
    u = np.where(u == 0, REAL(POLE_STANDIN), u)
    alpha = -x + du / u
    return GridFunction(grid, alpha), findings


def alpha1(epsilon: float, nu: float, grid: Grid, allow_nodes: bool = False,
           config: specfun.SpecfunConfig | None = None) -> GridFunction:
    """Level-1 superpotential from the closed-form seed solution.

    With ``allow_nodes`` a sign change of u is tolerated (the result then has
    poles); this is needed for intermediate table entries only.
    """
    return _level1(epsilon, nu, grid, allow_nodes, config)[0]


# ---------------------------------------------------------------------------
# recursion and potentials
# ---------------------------------------------------------------------------

def _step(prev_at_prev, prev_at_target, eps_prev, eps_target, allow_poles,
          level=None, index=None):
    if prev_at_prev.grid != prev_at_target.grid:
        from .errors import GridMismatchError
        raise GridMismatchError("chain_step inputs live on different grids")
    if abs(eps_prev - eps_target) < DEGENERATE_GAP:
        raise DegenerateEnergyError(
            f"energies {eps_prev} and {eps_target} coincide"
        )
    grid = prev_at_prev.grid
    x = grid.x
    den = prev_at_prev.values - prev_at_target.values
    zeros, _ = _crossings(den, grid.h)
    findings = []
    tiny = np.flatnonzero(np.abs(den) < DENOMINATOR_GUARD)
    if not allow_poles:
        if len(tiny):
            j = int(tiny[0])
            raise SingularChainError(
                f"chain denominator vanishes at x={float(x[j]):.6g}",
                level=level, index=index, x=float(x[j]),
            )
        if len(zeros):
            j = int(zeros[0])
            raise SingularChainError(
                f"chain denominator changes sign near x={_mid(x, j):.6g}",
                level=level, index=index, x=_mid(x, j),
            )
    for j in zeros:
        findings.append(Finding(level or 0, index or 0, "pole", _mid(x, j), False,
                                "zero of the chain denominator"))
    # a pole sitting exactly on a sample (x = 0 for symmetric chains) is
    # represented by a huge finite value; the next step only needs 1/alpha -> 0
    den = np.where(den == 0, REAL(POLE_STANDIN), den)
    out = -prev_at_prev.values - 2 * REAL(eps_prev - eps_target) / den
    return GridFunction(grid, out), findings


def chain_step(alpha_prev_at_prev: GridFunction, alpha_prev_at_target: GridFunction,
               eps_prev: float, eps_target: float, allow_poles: bool = False) -> GridFunction:
    """One application of the algebraic recursion."""
    return _step(alpha_prev_at_prev, alpha_prev_at_target, eps_prev, eps_target,
                 allow_poles)[0]


def pole_locations(alpha: GridFunction) -> list:
    _, poles = _crossings(alpha.values, alpha.grid.h)
    return [_mid(alpha.grid.x, j) for j in poles]


def pole_exclusion_mask(grid: Grid, poles, tol: float = RICCATI_TOL) -> np.ndarray:
    """True away from poles.

    Next to a pole alpha ~ 1/(x - p), so the stencil error h^2 alpha'''/6
    is h^2/(x - p)^4; samples closer than (2 h^2 / tol)^(1/4) are dropped.
    """
    keep = np.ones(grid.n_points, dtype=bool)
    if not poles:
        return keep
    r = float((2 * grid.h**2 / REAL(tol)) ** 0.25)
    x = grid.x
    for p in poles:
        keep &= np.abs(x - REAL(p)) > r
    return keep


def riccati_residual(alpha: GridFunction, V: GridFunction, epsilon: float,
                     exclude: np.ndarray | None = None) -> float:
    """max |alpha' + alpha^2 - 2(V - e)| over the interior window.

    ``exclude`` is an optional boolean mask of samples to drop.
    """
    if alpha.grid != V.grid:
        from .errors import GridMismatchError
        raise GridMismatchError("alpha and V live on different grids")
    D1 = derivative_matrix(alpha.grid, 1)
    a = alpha.values
    r = D1.apply_array(a) + a * a - 2 * (V.values - REAL(epsilon))
    mask = alpha.grid.interior.copy()
    if exclude is not None:
        mask &= ~np.asarray(exclude, dtype=bool)
    return float(np.max(np.abs(r[mask])))


def _potentials(grid: Grid, diagonals) -> list:
    x = grid.x
    D1 = derivative_matrix(grid, 1)
    V = [x * x / 2]
    for a in diagonals:
        V.append(V[-1] - D1.apply_array(a.values))
    return V


def oscillator_potential(grid: Grid) -> GridFunction:
    x = grid.x
    return GridFunction(grid, x * x / 2)


def _construct(config: FactorizationConfig, grid: Grid, spec_cfg, findings):
    """Fill the table, appending non-fatal findings; fatal ones raise."""
    m = config.m
    eps = config.epsilons
    alpha = {}
    for k in range(1, m + 1):
        a, f = _level1(eps[k - 1], config.nus[k - 1], grid, allow_nodes=k > 1,
                       config=spec_cfg, level=1, index=k)
        alpha[(1, k)] = a
        findings.extend(f)
    for i in range(2, m + 1):
        for k in range(i, m + 1):
            a, f = _step(alpha[(i - 1, i - 1)], alpha[(i - 1, k)], eps[i - 2], eps[k - 1],
                         allow_poles=k > i, level=i, index=k)
            alpha[(i, k)] = a
            findings.extend(f)
    return alpha


def _table_residuals(grid, config, alpha, tol=RICCATI_TOL):
    m = config.m
    V = _potentials(grid, [alpha[(i, i)] for i in range(1, m + 1)])
    poles, residuals = {}, {}
    for (i, k), a in alpha.items():
        p = pole_locations(a)
        poles[(i, k)] = p
        keep = pole_exclusion_mask(grid, p, tol)
        residuals[(i, k)] = riccati_residual(a, GridFunction(grid, V[i - 1]),
                                             config.epsilons[k - 1], exclude=~keep)
    return poles, residuals


def build_table(config: FactorizationConfig, grid: Grid,
                riccati_tol: float | None = BUILD_RICCATI_TOL,
                specfun_config: specfun.SpecfunConfig | None = None) -> SuperpotentialTable:
    """Triangular superpotential table for ``config`` on ``grid``.

    Every entry's Riccati residual (against the level potential, pole
    neighbourhoods excluded) is recorded in ``table.residuals``; if any
    exceeds ``riccati_tol`` an ArithmeticError is raised.
    """
    alpha = _construct(config, grid, specfun_config, [])
    poles, residuals = _table_residuals(grid, config, alpha)
    if riccati_tol is not None:
        for key, r in residuals.items():
            if r > riccati_tol:
                raise ArithmeticError(
                    f"table entry {key} has Riccati residual {r:.3e} > {riccati_tol:.1e}"
                )
    return SuperpotentialTable(grid, config, alpha, poles, residuals)


def partner_potential(table: SuperpotentialTable, level: int) -> PartnerPotential:
    """V_i = x^2/2 - sum_{j <= i} alpha_j'(x, e_j)."""
    if not (0 <= level <= table.m):
        raise ValueError(f"level {level} outside 0..{table.m}")
    V = _potentials(table.grid, [table.diagonal(i) for i in range(1, level + 1)])[level]
    return PartnerPotential(table.grid, level, GridFunction(table.grid, V), table.config)


def singularity_scan(config: FactorizationConfig, grid: Grid,
                     specfun_config: specfun.SpecfunConfig | None = None) -> AdmissibilityReport:
    """Never raises for inadmissible parameters; reports what went wrong."""
    findings = []
    ok = True
    try:
        _construct(config, grid, specfun_config, findings)
    except InadmissibleError as exc:
        ok = False
        kind = "node" if isinstance(exc, SingularSuperpotentialError) else "zero_denominator"
        if "cancel" in str(exc):
            kind = "edge_cancellation"
        findings.append(Finding(exc.level or 0, exc.index or 0, kind, exc.x, True, str(exc)))
    except SusyOscError as exc:
        ok = False
        findings.append(Finding(0, 0, "numerical", None, True, f"{type(exc).__name__}: {exc}"))
    if config.m and config.epsilons[0] == E0:
        findings.append(Finding(1, 1, "non_normalizable_missing_state", None, False,
                                "epsilon_1 = 1/2: the missing state is not normalizable"))
    return AdmissibilityReport(config, ok, findings)


# ---------------------------------------------------------------------------
# independent oracle
# ---------------------------------------------------------------------------

def _rk4_direction(Vs, x0, x_end_idx, idx0, xs, epsilon, a0, sub):
    """Integrate outward from index idx0 towards x_end_idx; returns samples."""
    n_steps = abs(x_end_idx - idx0)
    direction = 1 if x_end_idx > idx0 else -1
    h = float(xs[1] - xs[0]) * direction
    dt = h / sub
    # V at every half-step node, evaluated once up front
    t = x0 + dt * 0.5 * np.arange(2 * sub * n_steps + 1)
    vv = Vs(t).tolist()
    out = [a0]
    a = a0
    e2 = 2 * epsilon
    for s in range(n_steps):
        for q in range(sub):
            base = 2 * (s * sub + q)
            v0, vh, v1 = vv[base], vv[base + 1], vv[base + 2]
            k1 = 2 * v0 - e2 - a * a
            y = a + 0.5 * dt * k1
            k2 = 2 * vh - e2 - y * y
            y = a + 0.5 * dt * k2
            k3 = 2 * vh - e2 - y * y
            y = a + dt * k3
            k4 = 2 * v1 - e2 - y * y
            a = a + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            if not abs(a) <= ODE_POLE_BOUND:
                loc = x0 + dt * (s * sub + q + 1)
                return out, loc
        out.append(a)
    return out, None


def riccati_ode_oracle(V: GridFunction, epsilon: float, alpha_at_zero: float,
                       substeps: int = 10) -> GridFunction:
    """RK4 solution of alpha' = 2(V - e) - alpha^2 from x = 0 outwards.

    V is interpolated by a cubic spline between grid samples.  Raises
    PoleEncounteredError (carrying the location and the partial samples,
    NaN where invalid) if |alpha| exceeds 1e8 in either direction.
    """
    grid = V.grid
    xs = np.asarray(grid.x, dtype=np.float64)
    i0 = int(np.argmin(np.abs(xs)))
    if abs(xs[i0]) > 1e-12 * max(1.0, float(grid.h)):
        raise ValueError("riccati_ode_oracle needs x = 0 on the grid")
    if not math.isfinite(alpha_at_zero):
        raise ValueError("initial value must be finite")
    Vs = CubicSpline(xs, np.asarray(V.values, dtype=np.float64))
    n = grid.n_points
    result = np.full(n, np.nan)
    right, pole_r = _rk4_direction(Vs, 0.0, n - 1, i0, xs, float(epsilon),
                                   float(alpha_at_zero), substeps)
    left, pole_l = _rk4_direction(Vs, 0.0, 0, i0, xs, float(epsilon),
                                  float(alpha_at_zero), substeps)
    result[i0: i0 + len(right)] = right
    result[i0 - len(left) + 1: i0 + 1] = left[::-1]
    pole = pole_r if pole_r is not None else pole_l
    if pole is not None:
        raise PoleEncounteredError(f"Riccati solution blows up near x={pole:.6g}",
                                   x=pole, partial=result)
    return GridFunction(grid, result)
