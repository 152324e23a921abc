import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nstar_relay.errors import DomainError, NonConvergenceError
from nstar_relay.special import (
    ContourSpec,
    GKind,
    MeijerGParams,
    bessel_k0,
    ln_gamma,
    log_bessel_k0,
    log_upper_incomplete_gamma,
    meijer_g,
    regularized_lower_gamma,
    regularized_upper_gamma,
    upper_incomplete_gamma,
)

mp.mp.dps = 30


def _mp_pdf_kernel(N, b, z):
    return float(mp.meijerg([[], []], [[b] * N, []], z) / mp.gamma(b) ** N)


def _mp_cdf_kernel(N, b, z):
    return float(mp.meijerg([[1], []], [[b] * N, [0]], z) / mp.gamma(b) ** N)


@pytest.mark.parametrize("N", [1, 2, 3, 5])
@pytest.mark.parametrize("b", [0.7, 2.8, 9.5])
@pytest.mark.parametrize("z", [1e-4, 0.3, 4.0, 60.0])
def test_pdf_kernel_matches_mpmath(N, b, z):
    ref = _mp_pdf_kernel(N, b, z)
    got = meijer_g(MeijerGParams(N, b, GKind.PDF_KERNEL), z, normalized=True, method="contour")
    assert got == pytest.approx(ref, rel=1e-8)


@pytest.mark.parametrize("N", [1, 2, 3, 5])
@pytest.mark.parametrize("b", [0.7, 2.8, 9.5])
@pytest.mark.parametrize("z", [1e-4, 0.3, 4.0, 60.0])
def test_cdf_kernel_matches_mpmath(N, b, z):
    ref = _mp_cdf_kernel(N, b, z)
    got = meijer_g(MeijerGParams(N, b, GKind.CDF_KERNEL), z, normalized=True, method="contour")
    assert got == pytest.approx(ref, rel=1e-8)


@pytest.mark.parametrize("N,b,z", [(3, 1.5, 1e5), (4, 2.0, 1e7), (2, 3.3, 1e4)])
def test_cdf_complement_in_the_far_tail(N, b, z):
    ref = 1 - mp.meijerg([[1], []], [[b] * N, [0]], z) / mp.gamma(b) ** N
    got = meijer_g(MeijerGParams(N, b, GKind.CDF_KERNEL), z, complement=True)
    assert 0 < got < 1e-10
    assert got == pytest.approx(float(ref), rel=1e-7)


def test_unnormalized_scale():
    p = MeijerGParams(3, 1.7, GKind.PDF_KERNEL)
    assert meijer_g(p, 2.0) == pytest.approx(
        meijer_g(p, 2.0, normalized=True) * math.gamma(1.7) ** 3, rel=1e-12)


@given(N=st.integers(1, 2), b=st.floats(0.3, 12.0), logz=st.floats(-8.0, 5.0))
@settings(max_examples=40, deadline=None)
def test_closed_forms_agree_with_contour(N, b, logz):
    z = math.exp(logz)
    for kind in (GKind.PDF_KERNEL, GKind.CDF_KERNEL):
        p = MeijerGParams(N, b, kind)
        a = meijer_g(p, z, normalized=True, method="auto")
        c = meijer_g(p, z, normalized=True, method="contour")
        assert c == pytest.approx(a, rel=1e-8, abs=1e-300)


@given(N=st.integers(1, 5), b=st.floats(0.3, 8.0), logz=st.floats(-6.0, 8.0))
@settings(max_examples=40, deadline=None)
def test_cdf_and_complement_sum_to_one(N, b, logz):
    p = MeijerGParams(N, b, GKind.CDF_KERNEL)
    z = math.exp(logz)
    v = meijer_g(p, z, normalized=True)
    c = meijer_g(p, z, complement=True)
    assert 0.0 <= v <= 1.0 and 0.0 <= c <= 1.0
    assert v + c == pytest.approx(1.0, abs=1e-9)


def test_cdf_kernel_is_increasing():
    p = MeijerGParams(4, 1.3, GKind.CDF_KERNEL)
    vals = [meijer_g(p, z, normalized=True) for z in np.logspace(-3, 3, 40)]
    assert np.all(np.diff(vals) >= 0)


def test_explicit_contour_gives_same_value():
    p = MeijerGParams(3, 2.0, GKind.CDF_KERNEL)
    ref = meijer_g(p, 5.0, normalized=True)
    left = meijer_g(p, 5.0, ContourSpec(-1.0, 20.0, 64), normalized=True)
    right = meijer_g(p, 5.0, ContourSpec(0.7, 20.0, 64), normalized=True)
    assert left == pytest.approx(ref, rel=1e-9)
    assert right == pytest.approx(ref, rel=1e-9)


def test_convergence_certificate():
    p = MeijerGParams(3, 2.0, GKind.PDF_KERNEL)
    with pytest.raises(NonConvergenceError):
        meijer_g(p, 2.0, ContourSpec(0.5, 10.0, 64), max_refinements=0)


@pytest.mark.parametrize("bad", [
    lambda: MeijerGParams(0, 1.0),
    lambda: MeijerGParams(2, -1.0),
    lambda: ContourSpec(0.5, 1.0, 63),
    lambda: ContourSpec(0.5, -1.0),
    lambda: meijer_g(MeijerGParams(2, 1.0), 0.0),
    lambda: meijer_g(MeijerGParams(2, 1.0, GKind.CDF_KERNEL), 1.0, ContourSpec(0.0, 5.0)),
    lambda: meijer_g(MeijerGParams(2, 1.0, GKind.PDF_KERNEL), 1.0, ContourSpec(-2.0, 5.0)),
])
def test_domain_errors(bad):
    with pytest.raises(DomainError):
        bad()


def test_complement_requires_cdf_kernel():
    with pytest.raises(ValueError):
        meijer_g(MeijerGParams(2, 1.0), 1.0, complement=True)


@pytest.mark.parametrize("a,x", [(0.5, 0.1), (2.3, 1.7), (7.0, 30.0), (40.0, 12.0)])
def test_incomplete_gamma_against_mpmath(a, x):
    assert regularized_upper_gamma(a, x) == pytest.approx(float(mp.gammainc(a, x, regularized=True)), rel=1e-12)
    assert regularized_lower_gamma(a, x) == pytest.approx(
        float(mp.gammainc(a, 0, x, regularized=True)), rel=1e-12)
    assert upper_incomplete_gamma(a, x) == pytest.approx(float(mp.gammainc(a, x)), rel=1e-12)
    assert ln_gamma(a) == pytest.approx(float(mp.loggamma(a)), rel=1e-14)


@pytest.mark.parametrize("a,x", [(2.0, 800.0), (5.5, 2000.0), (0.4, 900.0)])
def test_log_upper_incomplete_gamma_deep_tail(a, x):
    ref = float(mp.log(mp.gammainc(a, x)))
    assert log_upper_incomplete_gamma(a, x) == pytest.approx(ref, rel=1e-12)


@pytest.mark.parametrize("x", [1e-6, 0.5, 3.0, 50.0, 700.0])
def test_bessel_k0_against_mpmath(x):
    assert log_bessel_k0(x) == pytest.approx(float(mp.log(mp.besselk(0, x))), rel=1e-12, abs=1e-14)
    if x < 600:
        assert bessel_k0(x) == pytest.approx(float(mp.besselk(0, x)), rel=1e-12)


def test_real_wrappers_reject_bad_domain():
    with pytest.raises(DomainError):
        ln_gamma(0.0)
    with pytest.raises(DomainError):
        regularized_upper_gamma(-1.0, 1.0)
    with pytest.raises(DomainError):
        bessel_k0(0.0)
