"""Outage-minimising power allocation for regenerative relay chains.

With hop SNR ``P_i lambda_i`` the regenerative outage is
``1 - prod_i Q(Lm_i, X_i)`` where ``X_i = beta_i gamma_th^(1/n_i)`` and
``beta_i`` depends on ``P_i``.  Setting the gradient of the Lagrangian to zero
under ``sum P_i = P_T`` gives ``P_i proportional to w_i`` with

    w_i = X_i^(Lm_i) exp(-X_i) / (n_i Gamma(Lm_i, X_i)),

a self-consistent system solved here by damped successive substitution.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .channel import HopModel, mrc_severity, severity_params
from .errors import DomainError, NonConvergenceError
from .multihop import RelayChain, Scheme, df_cdf
from .special import log_upper_incomplete_gamma

__all__ = [
    "PowerBudget",
    "PASolveReport",
    "allocation_weights",
    "stationarity_residual",
    "solve_pa",
    "pa_dualhop",
    "pa_asymptotic",
    "equal_power",
    "outage_under_allocation",
]


@dataclass(frozen=True)
class PowerBudget:
    total: float
    allocations: tuple
    ratios: tuple
    per_branch: tuple

    @classmethod
    def from_allocations(cls, total, allocations, diversity=1):
        alloc = np.asarray(allocations, dtype=float)
        if not total > 0 or np.any(~(alloc > 0)):
            raise DomainError("powers must be positive")
        if abs(alloc.sum() - total) > 1e-9 * total:
            raise DomainError("allocations must sum to the total power")
        return cls(float(total), tuple(map(float, alloc)), tuple(map(float, alloc / total)),
                   tuple(map(float, alloc / diversity)))


@dataclass(frozen=True)
class PASolveReport:
    budget: PowerBudget
    iterations: int
    residual: float
    converged: bool
    stationarity: float = math.nan


def _gains(chain, gains):
    lam = np.array([h.channel_gain for h in chain.hops] if gains is None else gains, dtype=float)
    if lam.shape != (chain.num_hops,) or np.any(~(lam > 0)):
        raise DomainError("need one positive channel gain per hop")
    return lam


def _check(chain, total_power, gamma_th):
    if chain.scheme is not Scheme.REGENERATIVE:
        raise DomainError("power allocation is defined for regenerative chains only")
    if not total_power > 0:
        raise DomainError("total power must be positive")
    if not gamma_th > 0:
        raise DomainError("gamma_th must be positive")


def _allocated_chain(chain, gains, powers):
    hops = tuple(HopModel(h.cascade_order, float(p * lam), float(lam))
                 for h, p, lam in zip(chain.hops, powers, gains))
    return RelayChain(hops, chain.diversity, chain.scheme)


def allocation_weights(chain, gains, powers, gamma_th=1.0):
    """Log-weights ``ln w_i`` at the given per-hop powers."""
    out = np.empty(chain.num_hops)
    for i, hop in enumerate(_allocated_chain(chain, gains, powers).hops):
        p = mrc_severity(hop, chain.diversity)
        n, b = p.cascade_order, p.shape
        x = p.beta * gamma_th ** (1.0 / n)
        out[i] = b * math.log(x) - x - math.log(n) - log_upper_incomplete_gamma(b, x)
    return out


def _target(chain, gains, powers, total, gamma_th):
    logw = allocation_weights(chain, gains, powers, gamma_th)
    w = np.exp(logw - logw.max())
    return total * w / w.sum()


def stationarity_residual(chain, gains, budget, gamma_th=1.0):
    """``max_i |P_i - P_T w_i / sum w| / P_T`` at ``budget``; zero at a stationary point."""
    lam = _gains(chain, gains)
    p = np.asarray(budget.allocations)
    t = _target(chain, lam, p, budget.total, gamma_th)
    return float(np.max(np.abs(p - t)) / budget.total)


def solve_pa(chain, gains=None, total_power=1.0, gamma_th=1.0, *, damping=0.5,
             tol=1e-10, max_iter=10_000, floor=1e-6):
    """Stationary allocation of ``total_power`` over the hops of a regenerative chain.

    Starts from equal power and iterates ``P <- (1-d) P + d P_T w(P)/sum w(P)``,
    clamping every iterate to ``[floor P_T, P_T]`` and renormalising.  Stops
    when the largest relative change falls to ``tol``.  ``gains`` defaults to
    the hops' own ``channel_gain``; their ``avg_snr`` is ignored.

    Raises NonConvergenceError after ``max_iter`` iterations, except for two
    hops where the scalar root finder of :func:`pa_dualhop` takes over.
    """
    _check(chain, total_power, gamma_th)
    lam = _gains(chain, gains)
    N = chain.num_hops
    p = np.full(N, total_power / N)
    residual = math.inf
    for it in range(1, max_iter + 1):
        new = (1.0 - damping) * p + damping * _target(chain, lam, p, total_power, gamma_th)
        new = np.clip(new, floor * total_power, total_power)
        new *= total_power / new.sum()
        residual = float(np.max(np.abs(new - p) / new))
        p = new
        if residual <= tol:
            budget = PowerBudget.from_allocations(total_power, p, chain.diversity)
            return PASolveReport(budget, it, residual, True,
                                 stationarity_residual(chain, lam, budget, gamma_th))
    if N == 2:
        budget = pa_dualhop(chain, lam, total_power, gamma_th)
        return PASolveReport(budget, max_iter, residual, True,
                             stationarity_residual(chain, lam, budget, gamma_th))
    raise NonConvergenceError(
        f"power allocation did not converge in {max_iter} iterations (residual {residual:.3g})"
    )


def pa_dualhop(chain, gains=None, total_power=1.0, gamma_th=1.0):
    """Two-hop allocation from the scalar equation ``P_1 = P_T / (1 + w_2 / w_1)``."""
    if chain.num_hops != 2:
        raise DomainError("pa_dualhop needs exactly two hops")
    _check(chain, total_power, gamma_th)
    lam = _gains(chain, gains)

    def g(p1):
        logw = allocation_weights(chain, lam, [p1, total_power - p1], gamma_th)
        return p1 - total_power / (1.0 + math.exp(logw[1] - logw[0]))

    eps = 1e-9 * total_power
    p1 = optimize.brentq(g, eps, total_power - eps, xtol=1e-15 * total_power, rtol=1e-15)
    return PowerBudget.from_allocations(total_power, [p1, total_power - p1], chain.diversity)


def pa_asymptotic(chain, total_power=1.0):
    """High-power allocation ``P_i proportional to m_i / n_i``; ignores the channel gains."""
    if not total_power > 0:
        raise DomainError("total power must be positive")
    w = np.array([severity_params(n)[0] / n for n in chain.cascade_orders])
    alloc = total_power * w / w.sum()
    alloc *= total_power / alloc.sum()
    return PowerBudget.from_allocations(total_power, alloc, chain.diversity)


def equal_power(chain, total_power=1.0):
    N = chain.num_hops
    return PowerBudget.from_allocations(total_power, [total_power / N] * N, chain.diversity)


def outage_under_allocation(chain, gains, budget, gamma_th=1.0):
    """Regenerative outage with hop SNRs ``P_i lambda_i``."""
    lam = _gains(chain, gains)
    return df_cdf(_allocated_chain(chain, lam, budget.allocations), gamma_th)
