"""Special functions backing the analytic performance expressions.

The real-argument gamma family and ``K0`` are domain-checked wrappers around
:mod:`scipy.special`.  The two Meijer G shapes needed for the
amplify-and-forward bounds,

    G^{N,0}_{0,N}(z | -; b, ..., b)          (PDF kernel)
    G^{N,1}_{1,N+1}(z | 1; b, ..., b, 0)     (CDF kernel)

are evaluated by trapezoidal quadrature of their Mellin-Barnes integrals

    (1/2 pi i) \\int_{c - i inf}^{c + i inf} Gamma(b + s)^N z^{-s} [-1/s] ds

along a vertical line.  The abscissa ``c`` is placed at the real saddle point of
the integrand, which keeps the quadrature accurate in relative terms far into
both tails.
"""

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import optimize
from scipy import special as sc

from .errors import DomainError, NonConvergenceError

__all__ = [
    "GKind",
    "MeijerGParams",
    "ContourSpec",
    "ln_gamma",
    "upper_incomplete_gamma",
    "log_upper_incomplete_gamma",
    "regularized_upper_gamma",
    "regularized_lower_gamma",
    "bessel_k0",
    "log_bessel_k0",
    "meijer_g",
]


def _as_float(x):
    arr = np.asarray(x, dtype=float)
    return arr, arr.ndim == 0


def _out(arr, scalar):
    return float(arr) if scalar else arr


def ln_gamma(x):
    """Natural log of the gamma function for positive real ``x``."""
    arr, scalar = _as_float(x)
    if np.any(~(arr > 0)):
        raise DomainError("ln_gamma requires x > 0")
    return _out(sc.gammaln(arr), scalar)


def regularized_upper_gamma(alpha, x):
    """Q(alpha, x) = Gamma(alpha, x) / Gamma(alpha)."""
    a, _ = _as_float(alpha)
    xx, scalar = _as_float(x)
    if np.any(~(a > 0)) or np.any(~(xx >= 0)):
        raise DomainError("regularized_upper_gamma requires alpha > 0 and x >= 0")
    return _out(sc.gammaincc(a, xx), scalar and a.ndim == 0)


def regularized_lower_gamma(alpha, x):
    """P(alpha, x) = 1 - Q(alpha, x)."""
    a, _ = _as_float(alpha)
    xx, scalar = _as_float(x)
    if np.any(~(a > 0)) or np.any(~(xx >= 0)):
        raise DomainError("regularized_lower_gamma requires alpha > 0 and x >= 0")
    return _out(sc.gammainc(a, xx), scalar and a.ndim == 0)


def _log_upper_gamma_cf(a, x, eps=1e-16, max_iter=10_000):
    # Legendre continued fraction, modified Lentz; valid for x > a + 1.
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, max_iter):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < eps:
            return -x + a * math.log(x) + math.log(h)
    raise NonConvergenceError(f"continued fraction for Gamma({a}, {x}) did not converge")


def log_upper_incomplete_gamma(alpha, x):
    """ln Gamma(alpha, x), finite even where Gamma(alpha, x) itself overflows or underflows."""
    alpha = float(alpha)
    x = float(x)
    if not alpha > 0 or not x >= 0:
        raise DomainError("log_upper_incomplete_gamma requires alpha > 0 and x >= 0")
    q = sc.gammaincc(alpha, x)
    if q > 1e-280:
        return math.log(q) + sc.gammaln(alpha)
    return _log_upper_gamma_cf(alpha, x)


def upper_incomplete_gamma(alpha, x):
    """Gamma(alpha, x) = integral of t^(alpha-1) e^-t over [x, inf).

    Returns ``inf`` when the value exceeds double range (alpha above ~171 with
    small x); use :func:`log_upper_incomplete_gamma` there.
    """
    a, _ = _as_float(alpha)
    xx, scalar = _as_float(x)
    if np.any(~(a > 0)) or np.any(~(xx >= 0)):
        raise DomainError("upper_incomplete_gamma requires alpha > 0 and x >= 0")
    a, xx = np.broadcast_arrays(a, xx)
    flat = [log_upper_incomplete_gamma(ai, xi) for ai, xi in zip(a.ravel(), xx.ravel())]
    with np.errstate(over="ignore"):
        res = np.exp(np.array(flat)).reshape(a.shape)
    return _out(res, scalar and a.ndim == 0)


def bessel_k0(x):
    """Modified Bessel function of the second kind, order zero."""
    arr, scalar = _as_float(x)
    if np.any(~(arr > 0)):
        raise DomainError("bessel_k0 requires x > 0")
    return _out(sc.k0(arr), scalar)


def log_bessel_k0(x):
    """ln K0(x), using the exponentially scaled form so large ``x`` does not underflow."""
    arr, scalar = _as_float(x)
    if np.any(~(arr > 0)):
        raise DomainError("log_bessel_k0 requires x > 0")
    return _out(np.log(sc.k0e(arr)) - arr, scalar)


# ---------------------------------------------------------------------------
# Meijer G via Mellin-Barnes quadrature
# ---------------------------------------------------------------------------


class GKind(Enum):
    PDF_KERNEL = "pdf"
    CDF_KERNEL = "cdf"


@dataclass(frozen=True)
class MeijerGParams:
    """One of the two G-function shapes, with ``shape`` repeated ``num_hops`` times."""

    num_hops: int
    shape: float
    kind: GKind = GKind.PDF_KERNEL

    def __post_init__(self):
        if int(self.num_hops) != self.num_hops or self.num_hops < 1:
            raise DomainError("num_hops must be a positive integer")
        if not self.shape > 0:
            raise DomainError("shape must be positive")


@dataclass(frozen=True)
class ContourSpec:
    """Initial vertical integration line Re(s) = abscissa, sampled on [0, half_span].

    Only the upper half of the line is sampled; conjugate symmetry supplies the
    rest.  Refinement starts from this grid.
    """

    abscissa: float
    half_span: float
    node_count: int = 64

    def __post_init__(self):
        if not self.half_span > 0:
            raise DomainError("half_span must be positive")
        if self.node_count < 64 or self.node_count % 2:
            raise DomainError("node_count must be even and at least 64")


# Sides of the s = 0 pole for the CDF kernel.
_PDF, _LEFT, _RIGHT = "pdf", "left", "right"
_MAX_NODES = 2_000_000


def _log_integrand(params, side, s, log_z):
    """Complex log of the scaled integrand Gamma(b+s)^N / Gamma(b)^N z^-s [+-1/s]."""
    n, b = params.num_hops, params.shape
    out = n * (sc.loggamma(b + s) - sc.gammaln(b)) - s * log_z
    if side == _LEFT:
        out = out + np.log(-1.0 / s)
    elif side == _RIGHT:
        out = out + np.log(1.0 / s)
    return out


def _real_log(params, side, c, log_z):
    n, b = params.num_hops, params.shape
    val = n * (sc.gammaln(b + c) - sc.gammaln(b)) - c * log_z
    if side != _PDF:
        val -= math.log(abs(c))
    return val


def _saddle(params, side, log_z):
    """Minimiser of the real log-integrand on the admissible interval for ``side``."""
    n, b = params.num_hops, params.shape

    def dphi(c):
        d = n * sc.digamma(b + c) - log_z
        if side != _PDF:
            d -= 1.0 / c
        return d

    if side == _PDF:
        lo, hi = -b * (1 - 1e-12), None
    elif side == _LEFT:
        lo, hi = -b * (1 - 1e-12), -b * 1e-12
    else:
        lo, hi = 1e-12, None
    if hi is None:
        hi = max(2.0, math.exp(min(log_z / n, 700.0)) + 2.0)
        while dphi(hi) < 0:
            hi *= 2.0
    if dphi(lo) > 0:
        return lo
    if dphi(hi) < 0:
        return hi
    return optimize.brentq(dphi, lo, hi, xtol=1e-14, rtol=1e-14, maxiter=500)


def _pick_contour(params, log_z):
    b = params.shape
    if params.kind is GKind.PDF_KERNEL:
        c = _saddle(params, _PDF, log_z)
        return _PDF, c, b + c
    cl = _saddle(params, _LEFT, log_z)
    cr = _saddle(params, _RIGHT, log_z)
    if _real_log(params, _LEFT, cl, log_z) <= _real_log(params, _RIGHT, cr, log_z):
        return _LEFT, cl, min(b + cl, -cl)
    return _RIGHT, cr, min(cr, b + cr)


def _initial_grid(params, side, c, dist, log_z):
    n, b = params.num_hops, params.shape
    curv = n * sc.polygamma(1, b + c)
    if side != _PDF:
        curv += 1.0 / (c * c)
    width = 1.0 / math.sqrt(curv)
    h = min(width / 3.0, math.pi * dist / 18.0, 0.5)
    phi0 = _real_log(params, side, c, log_z)
    span = 4.0 * width
    while True:
        tail = _log_integrand(params, side, complex(c, span), log_z).real - phi0
        if tail < -40.0 or span > 1e4:
            break
        span *= 1.5
    return h, span


def _trapezoid(params, side, c, log_z, h, span):
    k = int(math.ceil(span / h))
    k += k % 2
    if k > _MAX_NODES:
        raise NonConvergenceError(f"Meijer G quadrature needs more than {_MAX_NODES} nodes")
    t = h * np.arange(k + 1)
    phi0 = _real_log(params, side, c, log_z)
    vals = np.exp(_log_integrand(params, side, c + 1j * t, log_z) - phi0).real
    vals[0] *= 0.5
    return h / math.pi * vals.sum(), phi0


def _contour_value(params, z, contour, tol, max_refinements):
    log_z = math.log(z)
    if contour is None:
        side, c, dist = _pick_contour(params, log_z)
        h, span = _initial_grid(params, side, c, dist, log_z)
    else:
        c = float(contour.abscissa)
        b = params.shape
        if params.kind is GKind.PDF_KERNEL:
            if not c > -b:
                raise DomainError("PDF kernel contour needs abscissa > -shape")
            side = _PDF
        elif -b < c < 0:
            side = _LEFT
        elif c > 0:
            side = _RIGHT
        else:
            raise DomainError("CDF kernel contour must avoid the poles at 0 and -shape")
        span = float(contour.half_span)
        h = span / contour.node_count

    prev, phi0 = _trapezoid(params, side, c, log_z, h, span)
    for _ in range(max_refinements):
        h *= 0.5
        span *= 2.0
        cur, _ = _trapezoid(params, side, c, log_z, h, span)
        if abs(cur - prev) <= tol * abs(cur) + 1e-300:
            scaled = cur
            break
        prev = cur
    else:
        raise NonConvergenceError(
            f"Meijer G quadrature did not converge for z={z!r}, params={params!r}"
        )
    # Scaled integral times exp(phi0) gives the value, or on the right-hand
    # contour the complement 1 - value; return both.
    direct = math.exp(phi0) * scaled if phi0 < 700 else math.inf
    if side == _RIGHT:
        return max(1.0 - direct, 0.0), max(direct, 0.0)
    return max(direct, 0.0), 1.0 - direct


def _closed_form(params, z):
    n, b = params.num_hops, params.shape
    if params.kind is GKind.PDF_KERNEL:
        if n == 1:
            return math.exp(b * math.log(z) - z - sc.gammaln(b)), None
        if n == 2:
            x = 2.0 * math.sqrt(z)
            return math.exp(
                math.log(2.0) + b * math.log(z) + log_bessel_k0(x) - 2.0 * sc.gammaln(b)
            ), None
    elif n == 1:
        return float(sc.gammainc(b, z)), float(sc.gammaincc(b, z))
    return None


def meijer_g(params, z, contour=None, *, normalized=False, method="auto",
             tol=1e-10, max_refinements=8, complement=False):
    """Evaluate one of the two supported Meijer G shapes at positive real ``z``.

    Parameters
    ----------
    params : MeijerGParams
        Order ``N``, repeated bottom parameter ``b`` and kernel kind.
    z : float
        Positive argument.
    contour : ContourSpec, optional
        Starting integration line; supplying one forces the contour route.  By
        default the abscissa is put at the real saddle of the integrand and the
        grid is sized from its curvature.
    normalized : bool
        Return ``G / Gamma(b)**N``.  For the PDF kernel this is the density of a
        product of ``N`` unit-rate Gamma(b) variates times ``z``; for the CDF
        kernel it is their CDF.  The unnormalized value overflows for large
        ``N * b``.
    method : {"auto", "contour"}
        ``"auto"`` uses the exact reductions for ``N <= 2`` where one exists
        (``z**b e**-z``, ``2 z**b K0(2 sqrt z)``, the lower incomplete gamma);
        ``"contour"`` always integrates.
    tol : float
        Relative agreement demanded between successive refinements, each of
        which halves the node spacing and doubles the span.
    complement : bool
        CDF kernel only: return ``1 - G / Gamma(b)**N`` (implies
        ``normalized``).  Near 1 the complement is integrated directly rather
        than obtained by subtraction, so it keeps full relative precision.

    Raises
    ------
    DomainError
        For ``z <= 0`` or an inadmissible contour.
    NonConvergenceError
        If ``max_refinements`` refinements never agree to ``tol``.
    """
    if not isinstance(params, MeijerGParams):
        raise TypeError("params must be a MeijerGParams")
    z = float(z)
    if not z > 0 or not math.isfinite(z):
        raise DomainError("meijer_g requires finite z > 0")
    if method not in ("auto", "contour"):
        raise ValueError(f"unknown method {method!r}")

    if complement and params.kind is not GKind.CDF_KERNEL:
        raise ValueError("complement applies to the CDF kernel only")

    pair = _closed_form(params, z) if method == "auto" and contour is None else None
    if pair is None:
        pair = _contour_value(params, z, contour, tol, max_refinements)
    val, comp = pair
    if params.kind is GKind.CDF_KERNEL:
        if complement:
            return min(max(comp, 0.0), 1.0)
        val = min(val, 1.0)
    if normalized:
        return val
    scale = params.num_hops * sc.gammaln(params.shape)
    return val * math.exp(scale) if scale < 709 else val * math.inf if val else 0.0
