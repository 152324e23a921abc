"""End-to-end SNR combiners and closed-form performance of N-hop relay chains.

Amplify-and-forward (nonregenerative) chains are handled through the geometric
upper bound on the harmonic end-to-end SNR, ``(1/N) prod gamma_i^(1/N)``.  Under
the approximate per-hop law each ``gamma_i = u_i^n`` with ``u_i ~ Gamma(Lm,
rate beta_i)``, so the bound equals ``(1/N) prod (W_i / beta_i)^(n/N)`` for unit
Gamma variates ``W_i``.  Its moments, density and CDF follow from the product
of ``N`` Gamma variates, which is where the Meijer G kernels come in.

Decode-and-forward (regenerative) chains use the minimum hop SNR and allow a
different cascade order on every hop.
"""

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional

import numpy as np
from scipy import special as sc

from .channel import HopModel, mrc_severity, severity_params
from .errors import DomainError, MixedCascadeOrderError
from .special import GKind, MeijerGParams, log_bessel_k0, meijer_g

__all__ = [
    "Scheme",
    "RelayChain",
    "OutagePoint",
    "db_to_linear",
    "linear_to_db",
    "af_equivalent_snr",
    "af_geometric_bound",
    "df_equivalent_snr",
    "af_snr_moment",
    "af_pdf_bound",
    "af_cdf_bound",
    "af_ccdf_bound",
    "af_pdf_dualhop",
    "df_cdf",
    "outage_probability",
    "df_outage_asymptotic",
    "amount_of_fading",
]


def db_to_linear(db):
    out = np.power(10.0, np.asarray(db, dtype=float) / 10.0)
    return float(out) if out.ndim == 0 else out


def linear_to_db(x):
    out = 10.0 * np.log10(np.asarray(x, dtype=float))
    return float(out) if out.ndim == 0 else out


class Scheme(str, Enum):
    REGENERATIVE = "regenerative"
    NONREGENERATIVE = "nonregenerative"


@dataclass(frozen=True)
class RelayChain:
    """Ordered hops, the per-node MRC diversity ``L`` and the relaying scheme."""

    hops: tuple
    diversity: int = 1
    scheme: Scheme = Scheme.REGENERATIVE

    def __post_init__(self):
        hops = tuple(self.hops)
        if not hops:
            raise DomainError("a relay chain needs at least one hop")
        if not all(isinstance(h, HopModel) for h in hops):
            raise TypeError("hops must be HopModel instances")
        if int(self.diversity) != self.diversity or self.diversity < 1:
            raise DomainError("diversity must be an integer >= 1")
        object.__setattr__(self, "hops", hops)
        object.__setattr__(self, "scheme", Scheme(self.scheme))

    @classmethod
    def uniform(cls, num_hops, cascade_order, avg_snr, diversity=1,
                scheme=Scheme.REGENERATIVE, channel_gain=1.0):
        hop = HopModel(cascade_order, avg_snr, channel_gain)
        return cls((hop,) * num_hops, diversity, scheme)

    @property
    def num_hops(self):
        return len(self.hops)

    @property
    def cascade_orders(self):
        return tuple(h.cascade_order for h in self.hops)

    def common_cascade_order(self):
        orders = set(self.cascade_orders)
        if len(orders) != 1:
            raise MixedCascadeOrderError(
                f"closed form needs one cascade order across hops, got {sorted(orders)}"
            )
        return orders.pop()

    def severities(self):
        return [mrc_severity(h, self.diversity) for h in self.hops]

    def betas(self):
        return np.array([p.beta for p in self.severities()])

    def scaled(self, factor):
        """Same chain with every hop's average SNR multiplied by ``factor``."""
        return replace(self, hops=tuple(h.with_avg_snr(h.avg_snr * factor) for h in self.hops))

    def with_avg_snrs(self, avg_snrs):
        avg_snrs = np.broadcast_to(np.asarray(avg_snrs, dtype=float), (self.num_hops,))
        return replace(self, hops=tuple(h.with_avg_snr(float(g)) for h, g in zip(self.hops, avg_snrs)))


@dataclass
class OutagePoint:
    snr_db: float
    threshold: float
    analytic: float
    asymptotic: Optional[float] = None
    mc_estimate: Optional[float] = None
    mc_stderr: Optional[float] = None


# ---------------------------------------------------------------------------
# combiners


def _positive(values):
    arr = np.asarray(values, dtype=float)
    if arr.size == 0 or arr.shape[-1] == 0:
        raise DomainError("at least one hop SNR is required")
    if np.any(~(arr > 0)):
        raise DomainError("hop SNRs must be positive")
    return arr


def af_equivalent_snr(branch_snrs):
    """Harmonic end-to-end SNR ``(sum 1/gamma_i)^-1``; reduces over the last axis."""
    arr = _positive(branch_snrs)
    out = 1.0 / np.sum(1.0 / arr, axis=-1)
    return float(out) if np.ndim(out) == 0 else out


def af_geometric_bound(branch_snrs):
    """Upper bound ``(1/N) prod gamma_i^(1/N)`` on :func:`af_equivalent_snr`."""
    arr = _positive(branch_snrs)
    n = arr.shape[-1]
    out = np.exp(np.mean(np.log(arr), axis=-1)) / n
    return float(out) if np.ndim(out) == 0 else out


def df_equivalent_snr(branch_snrs):
    """Regenerative end-to-end SNR: the weakest hop."""
    arr = np.asarray(branch_snrs, dtype=float)
    if arr.size == 0 or arr.shape[-1] == 0:
        raise DomainError("at least one hop SNR is required")
    out = np.min(arr, axis=-1)
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# nonregenerative closed forms


def _af_setup(chain):
    n = chain.common_cascade_order()
    sev = chain.severities()
    return n, sev[0].shape, np.array([p.beta for p in sev])


def af_snr_moment(chain, k):
    """k-th moment of the geometric-bound SNR (an upper bound on the harmonic one)."""
    if not k > 0:
        raise DomainError("moment order must be positive")
    n, b, betas = _af_setup(chain)
    N = chain.num_hops
    e = n * k / N
    log_m = -k * math.log(N) - e * np.sum(np.log(betas)) + N * (sc.gammaln(e + b) - sc.gammaln(b))
    return math.exp(log_m)


def _af_argument(chain, gamma_t):
    n, b, betas = _af_setup(chain)
    N = chain.num_hops
    log_w = (N / n) * np.log(N * np.asarray(gamma_t, dtype=float)) + np.sum(np.log(betas))
    return n, b, N, log_w


def _check_positive_gamma(gamma_t):
    g = np.asarray(gamma_t, dtype=float)
    if np.any(~(g > 0)):
        raise DomainError("gamma_t must be positive")
    return g


def af_pdf_bound(chain, gamma_t, method="auto"):
    """Density of the geometric-bound end-to-end SNR.

    ``f(g) = (N/n) g^-1 G^{N,0}_{0,N}(w | -; Lm..Lm) / Gamma(Lm)^N`` with
    ``w = (N g)^(N/n) prod beta_i``.  The ``N/n`` factor is the Jacobian of
    ``g -> w``; without it the density would not integrate to one unless
    ``N = n``.
    """
    g = _check_positive_gamma(gamma_t)
    n, b, N, log_w = _af_argument(chain, g)
    params = MeijerGParams(N, b, GKind.PDF_KERNEL)
    kern = np.array([meijer_g(params, math.exp(lw), normalized=True, method=method)
                     if -700 < lw < 700 else 0.0 for lw in np.atleast_1d(log_w)])
    out = (N / n) * kern / np.atleast_1d(g)
    return float(out[0]) if g.ndim == 0 else out.reshape(g.shape)


def af_cdf_bound(chain, gamma_t, method="auto"):
    """CDF of the geometric-bound SNR; a lower bound on nonregenerative outage."""
    g = np.asarray(gamma_t, dtype=float)
    if np.any(~(g >= 0)):
        raise DomainError("gamma_t must be nonnegative")
    _, b, _ = _af_setup(chain)
    params = MeijerGParams(chain.num_hops, b, GKind.CDF_KERNEL)
    flat = np.atleast_1d(g)
    out = np.zeros(flat.shape)
    pos = flat > 0
    if np.any(pos):
        _, _, _, log_w = _af_argument(chain, flat[pos])
        out[pos] = [0.0 if lw < -700 else 1.0 if lw > 700
                    else meijer_g(params, math.exp(lw), normalized=True, method=method)
                    for lw in log_w]
    return float(out[0]) if g.ndim == 0 else out.reshape(g.shape)


def af_ccdf_bound(chain, gamma_t, method="auto"):
    """Survival function ``1 - af_cdf_bound``, accurate when the CDF is close to 1."""
    g = np.asarray(gamma_t, dtype=float)
    if np.any(~(g >= 0)):
        raise DomainError("gamma_t must be nonnegative")
    _, b, _ = _af_setup(chain)
    params = MeijerGParams(chain.num_hops, b, GKind.CDF_KERNEL)
    flat = np.atleast_1d(g)
    out = np.ones(flat.shape)
    pos = flat > 0
    if np.any(pos):
        _, _, _, log_w = _af_argument(chain, flat[pos])
        out[pos] = [1.0 if lw < -700 else 0.0 if lw > 700
                    else meijer_g(params, math.exp(lw), method=method, complement=True)
                    for lw in log_w]
    return float(out[0]) if g.ndim == 0 else out.reshape(g.shape)


def af_pdf_dualhop(chain, gamma_t):
    """Two-hop density via the Bessel reduction ``G^{2,0}_{0,2}(z|-;b,b) = 2 z^b K0(2 sqrt z)``.

    The Bessel argument is ``2 sqrt(z)`` with ``z = (2 g)^(2/n) beta_1 beta_2``,
    and the density carries the ``2/n`` Jacobian factor (see
    :func:`af_pdf_bound`).
    """
    if chain.num_hops != 2:
        raise DomainError("af_pdf_dualhop needs exactly two hops")
    g = _check_positive_gamma(gamma_t)
    n, b, _, log_z = _af_argument(chain, g)
    x = 2.0 * np.exp(0.5 * log_z)
    log_f = (math.log(2.0 / n) + math.log(2.0) - np.log(g) + b * log_z
             + log_bessel_k0(x) - 2.0 * sc.gammaln(b))
    out = np.exp(log_f)
    return float(out) if g.ndim == 0 else out


# ---------------------------------------------------------------------------
# regenerative closed forms


def df_cdf(chain, gamma_t):
    """Regenerative end-to-end CDF ``1 - prod_i Q(Lm_i, beta_i gamma_t^(1/n_i))``.

    Hops may have different cascade orders.  Computed as ``-expm1(sum log Q)``
    so that small outage probabilities keep full relative precision.
    """
    g = np.asarray(gamma_t, dtype=float)
    if np.any(~(g >= 0)):
        raise DomainError("gamma_t must be nonnegative")
    log_surv = np.zeros(g.shape)
    for p in chain.severities():
        x = p.beta * g ** (1.0 / p.cascade_order)
        log_surv = log_surv + _log_q(p.shape, x)
    out = 0.0 - np.expm1(log_surv)
    return float(out) if g.ndim == 0 else out


def _log_q(a, x):
    # log Q(a, x) that stays accurate both when Q ~ 1 and when Q underflows.
    x = np.asarray(x, dtype=float)
    p = sc.gammainc(a, x)
    q = sc.gammaincc(a, x)
    with np.errstate(divide="ignore"):
        out = np.where(p < 0.5, np.log1p(-p), np.log(q))
    return out


def outage_probability(chain, gamma_th, method="auto"):
    """``Pr(gamma_eq <= gamma_th)`` by the closed form matching the chain's scheme."""
    if not np.all(np.asarray(gamma_th) > 0):
        raise DomainError("gamma_th must be positive")
    if chain.scheme is Scheme.NONREGENERATIVE:
        return af_cdf_bound(chain, gamma_th, method=method)
    return df_cdf(chain, gamma_th)


def _iid(chain):
    n = chain.common_cascade_order()
    snrs = {h.avg_snr for h in chain.hops}
    if len(snrs) != 1:
        raise DomainError("the asymptotic form needs identical average SNR on every hop")
    return n


def df_outage_asymptotic(chain, gamma_th):
    """High-SNR regenerative outage ``N (beta gamma_th^(1/n))^(Lm) / (Lm Gamma(Lm))``."""
    n = _iid(chain)
    p = chain.severities()[0]
    b = p.shape
    x = p.beta * np.asarray(gamma_th, dtype=float) ** (1.0 / n)
    out = chain.num_hops * np.exp(b * np.log(x) - math.log(b) - sc.gammaln(b))
    return float(out) if np.ndim(out) == 0 else out


def amount_of_fading(chain):
    """Amount of fading of the geometric-bound SNR, independent of the average SNRs."""
    n = chain.common_cascade_order()
    N = chain.num_hops
    b = chain.diversity * severity_params(n)[0]
    log_ratio = sc.gammaln(b) + sc.gammaln(2.0 * n / N + b) - 2.0 * sc.gammaln(n / N + b)
    return math.expm1(N * log_ratio)

