import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from nstar_relay.channel import (
    HopModel,
    mrc_amplitude_pdf,
    mrc_severity,
    mrc_snr_cdf,
    mrc_snr_pdf,
    sample_cascade_amplitude,
    sample_cascade_mrc_snr,
    sample_mrc_snr_approx,
    severity_params,
)
from nstar_relay.errors import DomainError

hops = st.builds(HopModel, st.integers(1, 6), st.floats(0.05, 500.0), st.floats(0.1, 20.0))


def test_severity_fit_values():
    m, omega = severity_params(1)
    assert m == pytest.approx(1.0365)
    assert omega == pytest.approx(2.0008)
    # single-hop Rayleigh amount of fading 1/m
    assert 1.0 / m == pytest.approx(0.9648, abs=1e-4)


def test_severity_constants():
    p = mrc_severity(HopModel(3, 10.0), 2)
    m, omega = severity_params(3)
    assert p.alpha == pytest.approx(2 * m / 3)
    assert p.beta == pytest.approx(2 * 2 * m / (omega * 20.0 ** (1 / 3)))
    assert p.shape == pytest.approx(2 * m)


@given(hop=hops, L=st.integers(1, 4))
@settings(max_examples=30, deadline=None)
def test_snr_pdf_integrates_to_one(hop, L):
    p = mrc_severity(hop, L)
    # integrate in u = beta gamma^(1/n) where the mass sits at O(L m)
    f = lambda u: mrc_snr_pdf(hop, L, (u / p.beta) ** hop.cascade_order) \
        * hop.cascade_order * (u / p.beta) ** (hop.cascade_order - 1) / p.beta
    total = integrate.quad(f, 0, np.inf, limit=200)[0]
    assert total == pytest.approx(1.0, rel=1e-6)


@given(hop=hops, L=st.integers(1, 4), q=st.floats(0.01, 0.99))
@settings(max_examples=30, deadline=None)
def test_cdf_derivative_is_pdf(hop, L, q):
    p = mrc_severity(hop, L)
    u = stats.gamma.ppf(q, p.shape)
    g = (u / p.beta) ** hop.cascade_order
    h = 1e-5 * g
    d = (mrc_snr_cdf(hop, L, g + h) - mrc_snr_cdf(hop, L, g - h)) / (2 * h)
    assert d == pytest.approx(mrc_snr_pdf(hop, L, g), rel=1e-5)


@given(hop=hops, L=st.integers(1, 3), x=st.floats(0.05, 5.0))
@settings(max_examples=30, deadline=None)
def test_amplitude_pdf_is_change_of_variables(hop, L, x):
    # gamma = avg_snr h^2 / lambda
    h = x * math.sqrt(hop.channel_gain)
    g = hop.avg_snr * h * h / hop.channel_gain
    jac = 2.0 * hop.avg_snr * h / hop.channel_gain
    assert mrc_amplitude_pdf(hop, L, h) == pytest.approx(mrc_snr_pdf(hop, L, g) * jac, rel=1e-10)


def test_pdf_at_zero():
    assert mrc_snr_pdf(HopModel(1, 1.0), 2, 0.0) == 0.0          # alpha > 1
    assert math.isinf(mrc_snr_pdf(HopModel(3, 1.0), 1, 0.0))     # alpha < 1
    assert mrc_snr_cdf(HopModel(3, 1.0), 1, 0.0) == 0.0


def test_array_and_scalar_shapes():
    hop = HopModel(2, 5.0)
    assert isinstance(mrc_snr_pdf(hop, 1, 1.0), float)
    assert mrc_snr_pdf(hop, 1, np.ones((2, 3))).shape == (2, 3)
    assert mrc_snr_cdf(hop, 1, [0.5, 1.0]).shape == (2,)


def test_approx_sampler_matches_cdf():
    hop = HopModel(3, 10.0)
    p = mrc_severity(hop, 2)
    x = sample_mrc_snr_approx(p, np.random.default_rng(1), 200_000)
    d, pval = stats.kstest(x, lambda g: mrc_snr_cdf(hop, 2, g))
    assert pval > 0.001


def test_true_cascade_moments():
    rng = np.random.default_rng(2)
    hop = HopModel(3, 4.0, 8.0)
    snr = sample_cascade_mrc_snr(hop, 2, rng, 400_000)
    assert snr.mean() == pytest.approx(2 * 4.0, rel=0.02)
    amp = sample_cascade_amplitude(hop, rng, 400_000)
    # E|h|^2 = lambda and E|h|^4 = 2^n lambda^2 for a product of n complex Gaussians
    assert np.mean(amp ** 2) == pytest.approx(8.0, rel=0.02)
    assert np.mean(amp ** 4) == pytest.approx(2 ** 3 * 64.0, rel=0.08)


def test_single_hop_true_cascade_is_exponential_for_n1():
    x = sample_cascade_mrc_snr(HopModel(1, 3.0), 1, np.random.default_rng(3), 100_000)
    assert stats.kstest(x, stats.expon(scale=3.0).cdf).pvalue > 0.001


@pytest.mark.parametrize("bad", [
    lambda: HopModel(0, 1.0),
    lambda: HopModel(1.5, 1.0),
    lambda: HopModel(2, -1.0),
    lambda: HopModel(2, 1.0, 0.0),
    lambda: severity_params(0),
    lambda: mrc_severity(HopModel(2, 1.0), 0),
    lambda: mrc_snr_pdf(HopModel(2, 1.0), 1, -1.0),
    lambda: mrc_amplitude_pdf(HopModel(2, 1.0), 1, -0.1),
])
def test_domain_errors(bad):
    with pytest.raises(DomainError):
        bad()
