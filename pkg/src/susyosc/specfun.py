"""Special functions: log-gamma, the gamma ratio of the oscillator seed
solution, and Kummer's confluent hypergeometric function 1F1.

Everything here is written out by hand so the seed superpotential does not
depend on scipy.special (which has no log-magnitude 1F1 and loses accuracy
for large positive z in its own routines).

The 1F1 evaluation strategy:
  * z >= threshold (default 0): Taylor series summed directly.  For a, b > 0
    and z >= 0 every term is positive, so there is no cancellation, and the
    running sum is rescaled in powers of 1e200 to stay in range.
  * z < threshold: Kummer's transformation 1F1(a,b;z) = e^z 1F1(b-a,b;-z),
    which turns the alternating series into one with (eventually) a single
    sign.  The e^z factor is carried in the log.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import PoleError, SeriesConvergenceError

POLE_DISTANCE = 1e-12

_LANCZOS_G = 7.0
_LANCZOS_COEF = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


@dataclass(frozen=True)
class SpecfunConfig:
    """Tuning knobs for the 1F1 series.

    kummer_transform_threshold: the plain series is used for z at or above
    this value, the Kummer-transformed series below it.
    """

    series_term_cap: int = 5000
    series_rel_tol: float = 1e-16
    kummer_transform_threshold: float = 0.0

    def __post_init__(self):
        if int(self.series_term_cap) < 50:
            raise ValueError("series_term_cap must be at least 50")
        if not (0.0 < self.series_rel_tol < 1e-10):
            raise ValueError("series_rel_tol must lie in (0, 1e-10)")


DEFAULT_CONFIG = SpecfunConfig()


def _near_nonpositive_int(x: float) -> bool:
    if x > POLE_DISTANCE:
        return False
    return abs(x - round(x)) < POLE_DISTANCE


def ln_gamma(x: float) -> tuple[float, int]:
    """Return (ln|Gamma(x)|, sign Gamma(x)) using the Lanczos g=7 formula."""
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"ln_gamma needs a finite argument, got {x}")
    if _near_nonpositive_int(x):
        raise PoleError(f"Gamma has a pole at x={x}")
    if x < 0.5:
        # reflection: Gamma(x) Gamma(1-x) = pi / sin(pi x)
        s = math.sin(math.pi * x)
        lg, _ = ln_gamma(1.0 - x)
        return math.log(math.pi) - math.log(abs(s)) - lg, (1 if s > 0 else -1)
    y = x - 1.0
    acc = _LANCZOS_COEF[0]
    for i in range(1, len(_LANCZOS_COEF)):
        acc += _LANCZOS_COEF[i] / (y + i)
    t = y + _LANCZOS_G + 0.5
    return _HALF_LOG_2PI + (y + 0.5) * math.log(t) - t + math.log(acc), 1


def gamma_ratio(epsilon: float) -> float:
    """Gamma((3-2e)/4) / Gamma((1-2e)/4), with the value 0 at denominator poles."""
    epsilon = float(epsilon)
    if epsilon > 0.5:
        raise ValueError(f"factorization energy must be <= 1/2, got {epsilon}")
    p = (3.0 - 2.0 * epsilon) / 4.0
    q = (1.0 - 2.0 * epsilon) / 4.0
    if _near_nonpositive_int(p):
        raise PoleError(f"numerator Gamma({p}) is singular")
    if _near_nonpositive_int(q):
        return 0.0
    lp, sp = ln_gamma(p)
    lq, sq = ln_gamma(q)
    return sp * sq * math.exp(lp - lq)


def _work_dtype(z):
    return np.result_type(np.asarray(z).dtype, np.float64)


def _series_log(a, b, z, cfg):
    """log|sum| and sign of the plain 1F1 Taylor series (vectorized in z).

    Entries leave the working set once converged.  The cutoff is the smaller
    of ``series_rel_tol`` and the working precision, so every entry is summed
    to rounding level and the truncation error does not vary from one grid
    point to the next.
    """
    dt = z.dtype
    a = dt.type(a)
    b = dt.type(b)
    one = dt.type(1)
    big = dt.type(1e200)
    log_big = np.log(big)
    tol = dt.type(min(cfg.series_rel_tol, float(np.finfo(dt).eps)))
    out_s = np.ones_like(z)
    out_scale = np.zeros_like(z)
    act = np.arange(z.size)
    zz = z.ravel().copy()
    s = np.ones_like(zz)
    comp = np.zeros_like(zz)
    t = np.ones_like(zz)
    logscale = np.zeros_like(zz)
    for k in range(int(cfg.series_term_cap)):
        ratio = (a + k) / (b + k) * zz / (k + 1)
        t = t * ratio
        # Kahan-compensated accumulation
        y = t - comp
        tmp = s + y
        comp = (tmp - s) - y
        s = tmp
        # stop once terms decrease and the geometric tail bound is tiny
        r = np.abs((a + k + 1) / (b + k + 1) * zz / (k + 2))
        done = (r < 1) & (np.abs(t) / np.maximum(one - r, dt.type(1e-3)) <= tol * np.abs(s))
        done |= t == 0
        if np.any(done):
            out_s.flat[act[done]] = s[done]
            out_scale.flat[act[done]] = logscale[done]
            keep = ~done
            act, zz, s, comp, t, logscale = (v[keep] for v in (act, zz, s, comp, t, logscale))
            if act.size == 0:
                break
        huge = np.abs(s) > big
        if np.any(huge):
            s = np.where(huge, s / big, s)
            t = np.where(huge, t / big, t)
            comp = np.where(huge, comp / big, comp)
            logscale = np.where(huge, logscale + log_big, logscale)
    else:
        raise SeriesConvergenceError(
            f"1F1({float(a)}, {float(b)}; z) did not converge in {cfg.series_term_cap} terms"
        )
    with np.errstate(divide="ignore"):
        return out_scale + np.log(np.abs(out_s)), np.sign(out_s)


def _check_b(b):
    if _near_nonpositive_int(float(b)):
        raise PoleError(f"1F1 undefined for b={b}")


def log_kummer_1f1(a, b, z, config: SpecfunConfig | None = None):
    """Return (ln|1F1(a,b;z)|, sign) as arrays shaped like z."""
    cfg = config or DEFAULT_CONFIG
    _check_b(b)
    z_arr = np.atleast_1d(np.asarray(z, dtype=_work_dtype(z)))
    out_log = np.empty_like(z_arr)
    out_sign = np.empty_like(z_arr)
    direct = z_arr >= cfg.kummer_transform_threshold
    if np.any(direct):
        lg, sg = _series_log(a, b, z_arr[direct], cfg)
        out_log[direct] = lg
        out_sign[direct] = sg
    if np.any(~direct):
        zt = z_arr[~direct]
        lg, sg = _series_log(b - a, b, -zt, cfg)
        out_log[~direct] = zt + lg
        out_sign[~direct] = sg
    if np.ndim(z) == 0:
        return out_log[0], out_sign[0]
    return out_log, out_sign


def log_kummer_1f1_dz(a, b, z, config: SpecfunConfig | None = None):
    """Log-magnitude form of d/dz 1F1(a,b;z) = (a/b) 1F1(a+1,b+1;z)."""
    lg, sg = log_kummer_1f1(a + 1, b + 1, z, config)
    c = a / b
    if c == 0:
        return np.full_like(lg, -np.inf), np.zeros_like(sg)
    return lg + np.log(abs(c)), sg * np.sign(c)


def kummer_1f1(a, b, z, config: SpecfunConfig | None = None):
    """Kummer's function M(a, b, z)."""
    lg, sg = log_kummer_1f1(a, b, z, config)
    return sg * np.exp(lg)


def kummer_1f1_dz(a, b, z, config: SpecfunConfig | None = None):
    lg, sg = log_kummer_1f1_dz(a, b, z, config)
    return sg * np.exp(lg)
