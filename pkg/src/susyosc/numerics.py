"""Uniform grids, banded finite-difference operators and a tridiagonal
eigensolver.

Grid samples and operator bands are stored as ``np.longdouble``.  The
higher-order ladder operators are products of up to 4m+1 first-difference
matrices; each one multiplies rounding noise by ~1/h, so the extra mantissa
bits of the x87 extended type are what keep the m=2 chain usable.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import EigenConvergenceError, GridMismatchError, NonFiniteError

REAL = np.longdouble

DEFAULT_X_MAX = 12.0
DEFAULT_N_POINTS = 9601
INTERIOR_FRACTION = 0.8
SIGN_THRESHOLD = 1e-6


@dataclass(frozen=True)
class Grid:
    x_min: float = -DEFAULT_X_MAX
    x_max: float = DEFAULT_X_MAX
    n_points: int = DEFAULT_N_POINTS

    def __post_init__(self):
        if not (self.x_min < self.x_max):
            raise ValueError("grid needs x_min < x_max")
        if int(self.n_points) < 3:
            raise ValueError("grid needs at least 3 points")
        object.__setattr__(self, "n_points", int(self.n_points))

    @property
    def h(self):
        return (REAL(self.x_max) - REAL(self.x_min)) / REAL(self.n_points - 1)

    @property
    def x(self) -> np.ndarray:
        return REAL(self.x_min) + np.arange(self.n_points, dtype=REAL) * self.h

    @property
    def symmetric(self) -> bool:
        return self.x_min == -self.x_max

    @property
    def interior(self) -> np.ndarray:
        """Boolean mask of the window |x - c| <= 0.8 * half-width."""
        c = 0.5 * (REAL(self.x_min) + REAL(self.x_max))
        half = 0.5 * (REAL(self.x_max) - REAL(self.x_min))
        return np.abs(self.x - c) <= INTERIOR_FRACTION * half

    def index_of(self, x0: float) -> int:
        return int(np.argmin(np.abs(self.x - REAL(x0))))

    def function(self, values) -> "GridFunction":
        return GridFunction(self, values)

    def sample(self, f) -> "GridFunction":
        return GridFunction(self, f(self.x))


def refined(grid: Grid, n_points: int) -> Grid:
    return Grid(grid.x_min, grid.x_max, n_points)


@dataclass(frozen=True, eq=False)
class GridFunction:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=REAL)
        if v.shape != (self.grid.n_points,):
            raise GridMismatchError(
                f"expected {self.grid.n_points} samples, got shape {v.shape}"
            )
        if not np.all(np.isfinite(v)):
            bad = int(np.flatnonzero(~np.isfinite(v))[0])
            raise NonFiniteError(f"non-finite sample at x={float(self.grid.x[bad]):.6g}")
        object.__setattr__(self, "values", v)

    def _other(self, other):
        if isinstance(other, GridFunction):
            _same_grid(self, other)
            return other.values
        return other

    def __add__(self, other):
        return GridFunction(self.grid, self.values + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return GridFunction(self.grid, self.values - self._other(other))

    def __rsub__(self, other):
        return GridFunction(self.grid, self._other(other) - self.values)

    def __mul__(self, other):
        return GridFunction(self.grid, self.values * self._other(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return GridFunction(self.grid, self.values / self._other(other))

    def __neg__(self):
        return GridFunction(self.grid, -self.values)

    def __len__(self):
        return self.grid.n_points


def _same_grid(*objs):
    g = objs[0].grid
    for o in objs[1:]:
        if o.grid != g:
            raise GridMismatchError("objects live on different grids")
    return g


def inner_product(f: GridFunction, g: GridFunction) -> float:
    """Trapezoidal quadrature of f*g."""
    grid = _same_grid(f, g)
    p = f.values * g.values
    return (np.sum(p) - 0.5 * (p[0] + p[-1])) * grid.h


def norm(f: GridFunction):
    return np.sqrt(inner_product(f, f))


def interior_norm(f: GridFunction):
    """L2 norm restricted to the interior window."""
    m = f.grid.interior
    return np.sqrt(np.sum(f.values[m] ** 2) * f.grid.h)


def interior_max(f: GridFunction):
    return np.max(np.abs(f.values[f.grid.interior]))


def fix_sign(values: np.ndarray, threshold: float = SIGN_THRESHOLD) -> np.ndarray:
    """Flip ``values`` so that the last sample above ``threshold`` (relative to
    the peak) is positive; this is the usual Hermite-function phase."""
    peak = np.max(np.abs(values))
    if peak == 0:
        return values
    idx = np.flatnonzero(np.abs(values) > threshold * peak)
    if values[idx[-1]] < 0:
        return -values
    return values


@dataclass(frozen=True, eq=False)
class BandedOperator:
    """(2k+1)-diagonal matrix; ``bands[k + d, i]`` holds M[i, i + d]."""

    grid: Grid
    bandwidth: int
    bands: np.ndarray = field(repr=False)

    def __post_init__(self):
        b = np.asarray(self.bands, dtype=REAL)
        n = self.grid.n_points
        k = int(self.bandwidth)
        if b.shape != (2 * k + 1, n):
            raise ValueError(f"bands must have shape {(2 * k + 1, n)}, got {b.shape}")
        # zero out the slots that would point outside the matrix
        for d in range(-k, k + 1):
            if d > 0:
                b[k + d, n - d:] = 0
            elif d < 0:
                b[k + d, : -d] = 0
        object.__setattr__(self, "bands", b)
        object.__setattr__(self, "bandwidth", k)

    @classmethod
    def identity(cls, grid: Grid) -> "BandedOperator":
        return cls(grid, 0, np.ones((1, grid.n_points), dtype=REAL))

    @classmethod
    def diagonal(cls, f: GridFunction) -> "BandedOperator":
        return cls(f.grid, 0, f.values[None, :].copy())

    def diag(self, d: int = 0) -> np.ndarray:
        """The d-th diagonal as a row-indexed array (length n - |d|)."""
        k, n = self.bandwidth, self.grid.n_points
        if abs(d) > k:
            return np.zeros(n - abs(d), dtype=REAL)
        row = self.bands[k + d]
        return row[: n - d] if d >= 0 else row[-d:]

    def apply(self, f: GridFunction) -> GridFunction:
        _same_grid(self, f)
        return GridFunction(self.grid, self.apply_array(f.values))

    def apply_array(self, v: np.ndarray) -> np.ndarray:
        k, n = self.bandwidth, self.grid.n_points
        out = self.bands[k] * v
        for d in range(1, min(k, n - 1) + 1):
            out[: n - d] += self.bands[k + d, : n - d] * v[d:]
            out[d:] += self.bands[k - d, d:] * v[: n - d]
        return out

    def __call__(self, f: GridFunction) -> GridFunction:
        return self.apply(f)

    def __matmul__(self, other: "BandedOperator") -> "BandedOperator":
        return compose([self, other])

    def __mul__(self, c) -> "BandedOperator":
        return BandedOperator(self.grid, self.bandwidth, self.bands * REAL(c))

    __rmul__ = __mul__

    def __add__(self, other: "BandedOperator") -> "BandedOperator":
        _same_grid(self, other)
        k = max(self.bandwidth, other.bandwidth)
        out = np.zeros((2 * k + 1, self.grid.n_points), dtype=REAL)
        for op in (self, other):
            out[k - op.bandwidth: k + op.bandwidth + 1] += op.bands
        return BandedOperator(self.grid, k, out)

    def __sub__(self, other):
        return self + other * -1

    def transpose(self) -> "BandedOperator":
        k, n = self.bandwidth, self.grid.n_points
        out = np.zeros_like(self.bands)
        for d in range(-k, k + 1):
            # M^T[i, i+d] = M[i+d, i]
            if d >= 0:
                out[k + d, : n - d] = self.bands[k - d, d:]
            else:
                out[k + d, -d:] = self.bands[k - d, : n + d]
        return BandedOperator(self.grid, k, out)

    def to_dense(self) -> np.ndarray:
        n = self.grid.n_points
        m = np.zeros((n, n), dtype=REAL)
        for d in range(-self.bandwidth, self.bandwidth + 1):
            m += np.diag(self.diag(d), d)
        return m

    def norm_estimate(self) -> float:
        """Infinity norm (max absolute row sum)."""
        return float(np.max(np.sum(np.abs(self.bands), axis=0)))


def _product(A: BandedOperator, B: BandedOperator) -> BandedOperator:
    _same_grid(A, B)
    n = A.grid.n_points
    ka, kb = A.bandwidth, B.bandwidth
    k = min(ka + kb, n - 1)
    out = np.zeros((2 * k + 1, n), dtype=REAL)
    # C[i, i+e] = sum_d A[i, i+d] B[i+d, i+e]
    for d in range(-ka, ka + 1):
        a = A.bands[ka + d]
        lo, hi = max(0, -d), min(n, n - d)
        if lo >= hi:
            continue
        for dd in range(-kb, kb + 1):
            e = d + dd
            if abs(e) > k:
                continue
            out[k + e, lo:hi] += a[lo:hi] * B.bands[kb + dd, lo + d: hi + d]
    return BandedOperator(A.grid, k, out)


def compose(ops) -> BandedOperator:
    """Matrix product ops[0] @ ops[1] @ ... (the last factor acts first)."""
    ops = list(ops)
    if not ops:
        raise ValueError("compose needs at least one operator")
    _same_grid(*ops)
    out = ops[-1]
    for op in reversed(ops[:-1]):
        out = _product(op, out)
    return out


def derivative_matrix(grid: Grid, order: int = 1) -> BandedOperator:
    """Second-order central differences with one-sided boundary rows."""
    n, h = grid.n_points, grid.h
    if order == 1:
        b = np.zeros((3, n), dtype=REAL)
        b[0, :] = -1 / (2 * h)
        b[2, :] = 1 / (2 * h)
        # forward / backward difference in the first and last rows
        b[1, 0], b[2, 0] = -1 / h, 1 / h
        b[0, n - 1], b[1, n - 1] = -1 / h, 1 / h
        return BandedOperator(grid, 1, b)
    if order == 2:
        b = np.zeros((5, n), dtype=REAL)
        inv = 1 / h**2
        b[1, :] = inv
        b[2, :] = -2 * inv
        b[3, :] = inv
        b[1:4, 0] = 0
        b[1:4, n - 1] = 0
        b[2, 0], b[3, 0], b[4, 0] = inv, -2 * inv, inv
        b[0, n - 1], b[1, n - 1], b[2, n - 1] = inv, -2 * inv, inv
        return BandedOperator(grid, 2, b)
    raise ValueError("order must be 1 or 2")


def build_hamiltonian(V: GridFunction) -> BandedOperator:
    """-1/2 d^2/dx^2 + V with Dirichlet ends, as a symmetric tridiagonal."""
    v = np.asarray(V.values)
    if not np.all(np.isfinite(v)):
        raise NonFiniteError("potential has non-finite samples")
    n, h = V.grid.n_points, V.grid.h
    b = np.empty((3, n), dtype=REAL)
    b[0, :] = -0.5 / h**2
    b[2, :] = -0.5 / h**2
    b[1, :] = 1 / h**2 + v
    return BandedOperator(V.grid, 1, b)


def first_order_operator(alpha: GridFunction, sign: str) -> BandedOperator:
    """(1/sqrt 2)(+-d/dx + alpha): ``annihilation`` uses +d/dx, ``creation`` -d/dx."""
    if not np.all(np.isfinite(alpha.values)):
        raise NonFiniteError("superpotential has non-finite samples")
    if sign == "annihilation":
        s = 1
    elif sign == "creation":
        s = -1
    else:
        raise ValueError("sign must be 'annihilation' or 'creation'")
    D1 = derivative_matrix(alpha.grid, 1)
    b = D1.bands * s
    b[1] += alpha.values
    return BandedOperator(alpha.grid, 1, b / np.sqrt(REAL(2)))


@dataclass(frozen=True, eq=False)
class EigenDecomposition:
    eigenvalues: np.ndarray
    eigenvectors: list

    def __len__(self):
        return len(self.eigenvalues)


def tridiagonal_eigensolve(H: BandedOperator, k_lowest: int) -> EigenDecomposition:
    """Lowest ``k_lowest`` eigenpairs by Sturm bisection + inverse iteration.

    LAPACK's stebz/stein pair does the work.  Vectors are rescaled to unit
    trapezoidal grid norm and given the ``fix_sign`` phase.
    """
    if H.bandwidth != 1:
        raise ValueError("tridiagonal_eigensolve needs a bandwidth-1 operator")
    d = np.asarray(H.diag(0), dtype=np.float64)
    e = np.asarray(H.diag(1), dtype=np.float64)
    if np.max(np.abs(e - np.asarray(H.diag(-1), dtype=np.float64)), initial=0) != 0:
        raise ValueError("operator is not symmetric")
    n = H.grid.n_points
    k_lowest = int(k_lowest)
    if not (1 <= k_lowest <= n):
        raise ValueError("k_lowest out of range")
    try:
        w, v = scipy.linalg.eigh_tridiagonal(
            d, e, select="i", select_range=(0, k_lowest - 1), lapack_driver="stebz"
        )
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise EigenConvergenceError(str(exc)) from exc
    hnorm = max(np.max(np.abs(d) + np.r_[np.abs(e), 0] + np.r_[0, np.abs(e)]), 1.0)
    for j in range(len(w)):
        x = v[:, j]
        r = d * x
        r[:-1] += e * x[1:]
        r[1:] += e * x[:-1]
        if np.linalg.norm(r - w[j] * x) > 1e-9 * hnorm:
            raise EigenConvergenceError(f"eigenpair {j} failed the residual check")
    vecs = []
    for j in range(len(w)):
        f = GridFunction(H.grid, fix_sign(v[:, j].astype(REAL)))
        vecs.append(f / norm(f))
    return EigenDecomposition(np.asarray(w, dtype=np.float64), vecs)
