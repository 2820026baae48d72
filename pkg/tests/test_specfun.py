import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from susyosc import specfun
from susyosc.errors import PoleError, SeriesConvergenceError
from susyosc.specfun import (
    SpecfunConfig,
    gamma_ratio,
    kummer_1f1,
    kummer_1f1_dz,
    ln_gamma,
    log_kummer_1f1,
)

# frozen from mpmath at 50 digits
LNGAMMA_4_7 = 2.7364051463155669376
RATIO_0 = 0.3379891200336423645  # Gamma(3/4)/Gamma(1/4)
RATIO_M3 = 1.2327812996619328718  # Gamma(9/4)/Gamma(7/4)
M_075_15_4 = 14.756875554296705642
DM_025_05_25 = 4.5632950040819261869


def test_ln_gamma_trivial():
    assert ln_gamma(1.0) == pytest.approx((0.0, 1), abs=1e-15)
    lg, s = ln_gamma(0.5)
    assert s == 1
    assert lg == pytest.approx(math.log(math.sqrt(math.pi)), abs=1e-14)
    assert ln_gamma(0.5)[0] == pytest.approx(0.5723649429, abs=1e-10)


def test_ln_gamma_frozen():
    lg, s = ln_gamma(4.7)
    assert s == 1
    assert abs(lg - LNGAMMA_4_7) <= 1e-13 * abs(LNGAMMA_4_7)


def test_ln_gamma_negative_arguments():
    # Gamma(-0.5) = -2 sqrt(pi)
    lg, s = ln_gamma(-0.5)
    assert s == -1
    assert lg == pytest.approx(math.log(2 * math.sqrt(math.pi)), rel=1e-13)
    lg, s = ln_gamma(-1.5)  # 4 sqrt(pi) / 3
    assert s == 1
    assert lg == pytest.approx(math.log(4 * math.sqrt(math.pi) / 3), rel=1e-13)


@pytest.mark.parametrize("x", [0.0, -1.0, -7.0, -3e-13])
def test_ln_gamma_poles(x):
    with pytest.raises(PoleError):
        ln_gamma(x)


@pytest.mark.parametrize("x", [math.nan, math.inf])
def test_ln_gamma_nonfinite(x):
    with pytest.raises(ValueError):
        ln_gamma(x)


def test_ln_gamma_matches_math_lgamma():
    xs = np.linspace(-9.7, 60.0, 777)
    for x in xs:
        lg, s = ln_gamma(x)
        assert abs(lg - math.lgamma(x)) <= 1e-13 * max(1.0, abs(math.lgamma(x)))
        assert s == (1 if math.gamma(x) > 0 else -1)


@settings(max_examples=200, deadline=None)
@given(st.floats(0.5, 30.0))
def test_ln_gamma_recurrence(x):
    assert abs(ln_gamma(x + 1)[0] - ln_gamma(x)[0] - math.log(x)) <= 1e-12


def test_gamma_ratio_examples():
    assert gamma_ratio(0.5) == 0.0
    assert gamma_ratio(-0.5) == pytest.approx(1 / math.sqrt(math.pi), abs=1e-10)
    assert abs(gamma_ratio(0.0) - RATIO_0) <= 1e-13
    assert abs(gamma_ratio(-3.0) - RATIO_M3) <= 1e-13 * RATIO_M3


def test_gamma_ratio_rejects_energy_above_ground():
    with pytest.raises(ValueError):
        gamma_ratio(0.6)


def test_gamma_ratio_vs_mpmath():
    mpmath = pytest.importorskip("mpmath")
    mpmath.mp.dps = 40
    for e in np.linspace(-6.0, 0.49, 41):
        ref = mpmath.gamma((3 - 2 * mpmath.mpf(e)) / 4) / mpmath.gamma((1 - 2 * mpmath.mpf(e)) / 4)
        assert abs(gamma_ratio(e) - float(ref)) <= 1e-13 * abs(float(ref))


def test_kummer_trivial():
    assert kummer_1f1(0.0, 0.5, 3.7) == pytest.approx(1.0, abs=1e-15)
    assert kummer_1f1(0.5, 0.5, 2.0) == pytest.approx(math.e ** 2, rel=1e-14)
    assert kummer_1f1(0.5, 0.5, -2.0) == pytest.approx(math.e ** -2, rel=1e-14)


def test_kummer_frozen():
    assert kummer_1f1(0.75, 1.5, 4.0) == pytest.approx(M_075_15_4, rel=1e-13)


def test_kummer_dz_examples():
    assert kummer_1f1_dz(0.0, 0.5, 1.3) == 0.0
    assert kummer_1f1_dz(0.5, 0.5, 1.0) == pytest.approx(math.e, rel=1e-14)
    assert kummer_1f1_dz(0.25, 0.5, 2.5) == pytest.approx(DM_025_05_25, rel=1e-13)


def test_kummer_dz_example_against_finite_difference():
    h = 1e-6
    fd = (kummer_1f1(0.25, 0.5, 2.5 + h) - kummer_1f1(0.25, 0.5, 2.5 - h)) / (2 * h)
    assert kummer_1f1_dz(0.25, 0.5, 2.5) == pytest.approx(fd, rel=1e-8)


def test_kummer_vs_mpmath_grid():
    mpmath = pytest.importorskip("mpmath")
    mpmath.mp.dps = 40
    worst = 0.0
    for a in (0.05, 0.25, 0.75, 1.3, 2.6):
        for b in (0.5, 1.5):
            for z in np.linspace(-150, 150, 61):
                ref = float(mpmath.hyp1f1(a, b, z))
                got = kummer_1f1(a, b, z)
                worst = max(worst, abs(got - ref) / abs(ref))
    assert worst <= 1e-12


def test_log_form_does_not_overflow():
    # M(a, b, z) ~ Gamma(b)/Gamma(a) e^z z^(a-b) for z -> infinity
    z = 2000.0
    lg, sg = log_kummer_1f1(0.25, 0.5, z)
    approx = math.lgamma(0.5) - math.lgamma(0.25) + z + (0.25 - 0.5) * math.log(z)
    assert sg == 1
    assert lg == pytest.approx(approx, rel=1e-6)
    with np.errstate(over="ignore"):
        assert math.isinf(kummer_1f1(0.25, 0.5, z))


def test_vectorized_matches_scalar():
    z = np.linspace(-20, 40, 31)
    vec = kummer_1f1(0.75, 1.5, z)
    assert vec.shape == z.shape
    for zi, vi in zip(z, vec):
        assert vi == kummer_1f1(0.75, 1.5, zi)


def test_longdouble_input_keeps_precision():
    z = np.array([4.0], dtype=np.longdouble)
    lg, _ = log_kummer_1f1(0.75, 1.5, z)
    assert lg.dtype == np.longdouble


def test_b_pole():
    with pytest.raises(PoleError):
        kummer_1f1(0.5, -2.0, 1.0)


def test_term_cap_exhaustion():
    cfg = SpecfunConfig(series_term_cap=50)
    with pytest.raises(SeriesConvergenceError):
        kummer_1f1(0.5, 0.5, 500.0, cfg)


@pytest.mark.parametrize("kw", [{"series_term_cap": 3}, {"series_rel_tol": 0.1}])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        SpecfunConfig(**kw)


def test_threshold_choice_only_matters_for_cancellation():
    # away from large |z| either branch is accurate
    z = np.linspace(-5, 5, 41)
    default = kummer_1f1(0.25, 0.5, z)
    other = kummer_1f1(0.25, 0.5, z, SpecfunConfig(kummer_transform_threshold=-np.inf))
    np.testing.assert_allclose(other, default, rtol=1e-10)


_abs = st.sampled_from([0.25, 0.5, 0.75, 1.5])


@settings(max_examples=150, deadline=None)
@given(st.floats(0.01, 4.0), st.floats(0.05, 4.0), st.floats(-100.0, 100.0))
def test_kummer_transform_self_consistency(a, b, z):
    lhs = kummer_1f1(a, b, z)
    rhs = math.exp(z) * kummer_1f1(b - a, b, -z)
    assert abs(lhs - rhs) <= 1e-9 * abs(lhs)


@settings(max_examples=150, deadline=None)
@given(_abs, _abs, st.floats(-10.0, 30.0))
def test_kummer_dz_vs_central_difference(a, b, z):
    h = 1e-6
    fd = (kummer_1f1(a, b, z + h) - kummer_1f1(a, b, z - h)) / (2 * h)
    d = kummer_1f1_dz(a, b, z)
    # the difference quotient itself carries ~1e-16 |M| / h rounding
    scale = abs(d) + abs(kummer_1f1(a, b, z)) * 1e-3
    assert abs(d - fd) <= 1e-7 * scale


def test_module_exports_pole_distance():
    assert specfun.POLE_DISTANCE == 1e-12
