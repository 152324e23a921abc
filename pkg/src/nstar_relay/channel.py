"""Per-hop n*Rayleigh channel: fitted severity, approximate densities, samplers.

A hop's complex gain is the product of ``n`` independent zero-mean complex
Gaussians.  Each stage has ``E|h_j|^2 = 2 sigma_j^2`` and the overall gain
``lambda = E|h|^2 = 2^n sigma^2`` with ``sigma^2 = prod sigma_j^2``.

The approximate law of the (MRC-combined) SNR is a power transform of a Gamma
variate: if ``u ~ Gamma(L m, rate beta)`` then ``u**n`` has the density returned
by :func:`mrc_snr_pdf`.  That identity is what :func:`sample_mrc_snr_approx`
uses, and it gives an exact sampler for every closed form built on the
approximation.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import special as sc

from .errors import DomainError

__all__ = [
    "HopModel",
    "SeverityParams",
    "severity_params",
    "mrc_severity",
    "hop_snr_pdf",
    "mrc_snr_pdf",
    "mrc_snr_cdf",
    "mrc_amplitude_pdf",
    "sample_cascade_amplitude",
    "sample_cascade_mrc_snr",
    "sample_mrc_snr_approx",
]

M_SLOPE, M_INTERCEPT = 0.6102, 0.4263
OMEGA_SCALE, OMEGA_EXPONENT, OMEGA_OFFSET = 0.8808, -0.9661, 1.12


@dataclass(frozen=True)
class HopModel:
    """One hop: cascade order ``n``, mean channel power ``lambda`` and average SNR (linear)."""

    cascade_order: int
    avg_snr: float
    channel_gain: float = 1.0

    def __post_init__(self):
        if int(self.cascade_order) != self.cascade_order or self.cascade_order < 1:
            raise DomainError("cascade_order must be an integer >= 1")
        if not self.channel_gain > 0:
            raise DomainError("channel_gain must be positive")
        if not self.avg_snr > 0:
            raise DomainError("avg_snr must be positive")

    @property
    def per_stage_variance(self):
        """sigma^2 = prod_j sigma_j^2, from lambda = 2^n sigma^2."""
        return self.channel_gain / 2.0 ** self.cascade_order

    def with_avg_snr(self, avg_snr):
        return HopModel(self.cascade_order, avg_snr, self.channel_gain)


@dataclass(frozen=True)
class SeverityParams:
    m: float
    omega: float
    alpha: float
    beta: float
    diversity: int
    cascade_order: int

    @property
    def shape(self):
        """Gamma shape ``L m`` of the underlying variate."""
        return self.diversity * self.m


def severity_params(n):
    """Fitted Nakagami-like severity ``(m, omega)`` for cascade order ``n``."""
    if not n >= 1:
        raise DomainError("cascade order must be >= 1")
    m = M_SLOPE * n + M_INTERCEPT
    omega = OMEGA_SCALE * n ** OMEGA_EXPONENT + OMEGA_OFFSET
    return m, omega


def mrc_severity(hop, diversity=1):
    """Severity and PDF constants for ``hop`` seen through an L-branch MRC combiner."""
    if int(diversity) != diversity or diversity < 1:
        raise DomainError("diversity must be an integer >= 1")
    n = hop.cascade_order
    m, omega = severity_params(n)
    shape = diversity * m
    beta = 2.0 * shape / (omega * (diversity * hop.avg_snr) ** (1.0 / n))
    return SeverityParams(m, omega, shape / n, beta, int(diversity), n)


def _log_density(params, gamma):
    b, n = params.shape, params.cascade_order
    return (
        b * math.log(params.beta)
        + (params.alpha - 1.0) * np.log(gamma)
        - params.beta * gamma ** (1.0 / n)
        - math.log(n)
        - sc.gammaln(b)
    )


def mrc_snr_pdf(hop, diversity, gamma_t):
    """Approximate density of the L-branch MRC output SNR.

    At ``gamma_t = 0`` the density is 0 when ``alpha > 1``, finite when
    ``alpha == 1`` and infinite when ``alpha < 1`` (e.g. ``L = 1, n >= 2``).
    """
    g = np.asarray(gamma_t, dtype=float)
    if np.any(~(g >= 0)):
        raise DomainError("gamma_t must be nonnegative")
    scalar = g.ndim == 0
    g = np.atleast_1d(g)
    p = mrc_severity(hop, diversity)
    out = np.empty_like(g)
    pos = g > 0
    with np.errstate(divide="ignore"):
        out[pos] = np.exp(_log_density(p, g[pos]))
    if p.alpha > 1:
        at_zero = 0.0
    elif p.alpha == 1:
        at_zero = p.beta ** p.shape / (p.cascade_order * sc.gamma(p.shape))
    else:
        at_zero = math.inf
    out[~pos] = at_zero
    return float(out[0]) if scalar else out


def hop_snr_pdf(hop, gamma):
    """Approximate density of one hop's instantaneous SNR (no diversity)."""
    return mrc_snr_pdf(hop, 1, gamma)


def mrc_snr_cdf(hop, diversity, gamma_t):
    """CDF of :func:`mrc_snr_pdf`: ``P(L m, beta gamma_t^(1/n))``."""
    g = np.asarray(gamma_t, dtype=float)
    if np.any(~(g >= 0)):
        raise DomainError("gamma_t must be nonnegative")
    p = mrc_severity(hop, diversity)
    out = sc.gammainc(p.shape, p.beta * g ** (1.0 / p.cascade_order))
    return float(out) if out.ndim == 0 else out


def mrc_amplitude_pdf(hop, diversity, h_t):
    """Approximate density of the combined fading amplitude ``h_t``.

    ``h_t`` relates to the combined SNR by ``gamma_t = avg_snr h_t^2 / lambda``,
    so ``h_t^2`` is the sum of the branch powers ``|h_l|^2``.  The stretched
    exponential term is ``(L m / Omega) (h_t^2 / (L sigma^2))^(1/n)``; this is
    the exact image of :func:`mrc_snr_pdf` under that change of variables and
    does not depend on ``avg_snr``.
    """
    h = np.asarray(h_t, dtype=float)
    if np.any(~(h >= 0)):
        raise DomainError("h_t must be nonnegative")
    scalar = h.ndim == 0
    h = np.atleast_1d(h)
    n = hop.cascade_order
    m, omega = severity_params(n)
    shape = diversity * m
    alpha = shape / n
    s2 = diversity * hop.per_stage_variance
    out = np.zeros_like(h)
    pos = h > 0
    hp = h[pos]
    out[pos] = np.exp(
        math.log(2.0)
        + shape * math.log(shape / omega)
        + (2.0 * alpha - 1.0) * np.log(hp)
        - math.log(n)
        - sc.gammaln(shape)
        - alpha * math.log(s2)
        - (shape / omega) * (hp * hp / s2) ** (1.0 / n)
    )
    if 2.0 * alpha < 1.0:
        out[~pos] = math.inf
    elif 2.0 * alpha == 1.0:
        out[~pos] = 2.0 * (shape / omega) ** shape / (n * sc.gamma(shape) * s2 ** alpha)
    return float(out[0]) if scalar else out


def sample_cascade_amplitude(hop, rng, size=None):
    """Draw ``|prod_j h_j|`` with each ``h_j`` a complex Gaussian of variance ``2 sigma_j^2``.

    All stages share ``sigma_j^2 = sigma^2^(1/n)`` so that ``E|h|^2 = lambda``.
    """
    n = hop.cascade_order
    shape = (() if size is None else tuple(np.atleast_1d(size))) + (n,)
    sigma_j = math.sqrt(hop.per_stage_variance ** (1.0 / n))
    stages = sigma_j * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
    amp = np.abs(np.prod(stages, axis=-1))
    return float(amp) if size is None else amp


def sample_cascade_mrc_snr(hop, diversity, rng, size=None):
    """Combined SNR of ``diversity`` i.i.d. branches under true cascaded fading.

    Each branch power ``|h_l|^2 / lambda`` is a product of ``n`` unit exponentials
    (the squared modulus of a complex Gaussian is exponential), so the MRC
    output is ``avg_snr * sum_l prod_j E_lj``.
    """
    shape = (() if size is None else tuple(np.atleast_1d(size))) + (diversity, hop.cascade_order)
    branch = rng.standard_exponential(shape).prod(axis=-1)
    snr = hop.avg_snr * branch.sum(axis=-1)
    return float(snr) if size is None else snr


def sample_mrc_snr_approx(params, rng, size=None):
    """Exact draw from the approximate combined-SNR law: ``Gamma(L m, rate beta) ** n``."""
    u = rng.gamma(params.shape, 1.0 / params.beta, size)
    out = u ** params.cascade_order
    return float(out) if size is None else out
