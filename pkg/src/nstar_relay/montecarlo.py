"""Monte-Carlo simulation of relay chains, histograms and goodness-of-fit.

Every batch ``k`` of a run draws from its own counter-based stream
``Philox(SeedSequence(seed, spawn_key=(k,)))``, so results depend only on
``(seed, trials, batch_size)``: batches can run in any order or concurrently
and are always reduced in batch-index order.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .channel import mrc_severity
from .errors import DomainError
from .multihop import RelayChain, Scheme

__all__ = [
    "SourceLaw",
    "Combiner",
    "SimPlan",
    "OutageEstimate",
    "Histogram",
    "stream",
    "sample_hop_snrs",
    "sample_end_to_end",
    "run_outage_sim",
    "run_outage_curve",
    "run_pdf_sim",
    "empirical_af",
    "amount_of_fading_from_samples",
    "ks_distance",
    "ks_critical_value",
    "binomial_band_violations",
]

PILOT_STREAM = 2**62
MIN_FAILURES = 100


class SourceLaw(str, Enum):
    TRUE_CASCADE = "true_cascade"
    APPROX_GAMMA_POWER = "approx_gamma_power"


class Combiner(str, Enum):
    SCHEME = "scheme"          # harmonic for nonregenerative, min for regenerative
    HARMONIC = "harmonic"
    MIN = "min"
    GEOMETRIC = "geometric"    # the (1/N) prod gamma^(1/N) bound variate


@dataclass(frozen=True)
class SimPlan:
    chain: RelayChain
    source_law: SourceLaw = SourceLaw.TRUE_CASCADE
    trials: int = 1_000_000
    seed: int = 42
    batch_size: int = 100_000
    combiner: Combiner = Combiner.SCHEME

    def __post_init__(self):
        object.__setattr__(self, "source_law", SourceLaw(self.source_law))
        object.__setattr__(self, "combiner", Combiner(self.combiner))
        if self.trials < 1 or self.batch_size < 1:
            raise DomainError("trials and batch_size must be positive")
        if not 0 <= self.seed < 2**64:
            raise DomainError("seed must be an unsigned 64-bit integer")

    @property
    def resolved_combiner(self):
        if self.combiner is not Combiner.SCHEME:
            return self.combiner
        if self.chain.scheme is Scheme.NONREGENERATIVE:
            return Combiner.HARMONIC
        return Combiner.MIN

    def batch_sizes(self, trials=None, start=0):
        """Sizes of the batches covering ``trials`` draws, numbered from ``start``."""
        trials = self.trials if trials is None else trials
        full, rest = divmod(trials, self.batch_size)
        sizes = [self.batch_size] * full + ([rest] if rest else [])
        return list(enumerate(sizes, start=start))


@dataclass
class OutageEstimate:
    estimate: float
    stderr: float
    trials: int
    failures: int
    low_confidence: bool = False

    def __iter__(self):
        yield self.estimate
        yield self.stderr


@dataclass
class Histogram:
    bin_edges: np.ndarray
    counts: np.ndarray
    total: int
    below: int = 0
    above: int = 0

    def __post_init__(self):
        self.bin_edges = np.asarray(self.bin_edges, dtype=float)
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if np.any(np.diff(self.bin_edges) <= 0):
            raise DomainError("bin edges must be strictly increasing")
        if int(self.counts.sum()) + self.below + self.above != self.total:
            raise DomainError("counts do not add up to total")

    @property
    def centers(self):
        return 0.5 * (self.bin_edges[1:] + self.bin_edges[:-1])

    @property
    def widths(self):
        return np.diff(self.bin_edges)

    @property
    def fractions(self):
        return self.counts / self.total

    @property
    def density(self):
        return self.fractions / self.widths

    @property
    def density_stderr(self):
        p = self.fractions
        return np.sqrt(p * (1.0 - p) / self.total) / self.widths


def stream(seed, index):
    """Independent generator number ``index`` derived from ``seed``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(index,))))


# ---------------------------------------------------------------------------
# samplers


def sample_hop_snrs(chain, law, rng, size):
    """``(size, N)`` array of MRC-combined per-hop SNRs."""
    law = SourceLaw(law)
    L = chain.diversity
    cols = []
    for hop in chain.hops:
        if law is SourceLaw.TRUE_CASCADE:
            e = rng.standard_exponential((size, L, hop.cascade_order))
            cols.append(hop.avg_snr * e.prod(axis=-1).sum(axis=-1))
        else:
            p = mrc_severity(hop, L)
            cols.append(rng.gamma(p.shape, 1.0 / p.beta, size) ** p.cascade_order)
    return np.stack(cols, axis=-1)


def _combine(snrs, combiner):
    if combiner is Combiner.HARMONIC:
        return 1.0 / np.sum(1.0 / snrs, axis=-1)
    if combiner is Combiner.MIN:
        return np.min(snrs, axis=-1)
    if combiner is Combiner.GEOMETRIC:
        return np.exp(np.mean(np.log(snrs), axis=-1)) / snrs.shape[-1]
    raise ValueError(f"unresolved combiner {combiner}")


def _batch(plan, index, size):
    rng = stream(plan.seed, index)
    return _combine(sample_hop_snrs(plan.chain, plan.source_law, rng, size), plan.resolved_combiner)


def _map_batches(plan, fn, batches, workers):
    def job(item):
        index, size = item
        return fn(_batch(plan, index, size))

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            return list(pool.map(job, batches))
    return [job(b) for b in batches]


def sample_end_to_end(plan, workers=1):
    """All ``plan.trials`` end-to-end SNR draws, concatenated in batch order."""
    return np.concatenate(_map_batches(plan, lambda x: x, plan.batch_sizes(), workers))


# ---------------------------------------------------------------------------
# outage


def run_outage_curve(plan, thresholds, *, min_failures=MIN_FAILURES, max_trials=None, workers=1):
    """Empirical outage at each threshold, sharing one stream of trials.

    If any threshold has fewer than ``min_failures`` failures after
    ``plan.trials`` draws, more batches are added (continuing the stream index)
    until every threshold reaches it or ``max_trials`` is hit; thresholds still
    short are flagged ``low_confidence``.
    """
    th = np.atleast_1d(np.asarray(thresholds, dtype=float))
    max_trials = 10 * plan.trials if max_trials is None else max(int(max_trials), plan.trials)
    counts = np.zeros(th.shape, dtype=np.int64)

    def count(x):
        return np.count_nonzero(x[:, None] <= th[None, :], axis=0)

    done, next_index = 0, 0
    target = plan.trials
    while True:
        batches = plan.batch_sizes(target - done, start=next_index)
        for c in _map_batches(plan, count, batches, workers):
            counts += c
        done = target
        next_index += len(batches)
        short = counts < min_failures
        if not np.any(short) or done >= max_trials:
            break
        p = counts[short] / done
        if np.all(p > 0):
            need = int(math.ceil(1.05 * min_failures / p.min()))
        else:
            need = 10 * done
        target = min(max(need, done + plan.batch_size), max_trials)

    out = []
    for k in counts:
        p = k / done
        out.append(OutageEstimate(float(p), math.sqrt(p * (1.0 - p) / done), done, int(k),
                                  bool(k < min_failures)))
    return out


def run_outage_sim(plan, gamma_th, **kwargs):
    """Empirical ``Pr(gamma_eq <= gamma_th)`` with its binomial standard error."""
    if not gamma_th > 0:
        raise DomainError("gamma_th must be positive")
    return run_outage_curve(plan, [gamma_th], **kwargs)[0]


# ---------------------------------------------------------------------------
# densities and amount of fading


def _variate_fn(plan, variate):
    hop = plan.chain.hops[0]
    if variate == "snr":
        return lambda x: x
    if variate == "amplitude":
        scale = hop.channel_gain / hop.avg_snr
        return lambda x: np.sqrt(scale * x)
    raise ValueError(f"variate must be 'snr' or 'amplitude', not {variate!r}")


def run_pdf_sim(plan, bins=50, *, variate="amplitude", edges=None, pilot_trials=20_000, workers=1):
    """Histogram of the single-hop combined amplitude or SNR.

    Only the first hop of ``plan.chain`` is simulated (through its MRC
    combiner).  Without explicit ``edges`` a pilot run fixes the range to its
    0.1% and 99.9% quantiles, with linear bins for the amplitude and
    logarithmic bins for the SNR.
    """
    if bins < 10:
        raise DomainError("at least 10 bins are required")
    chain = RelayChain(plan.chain.hops[:1], plan.chain.diversity, plan.chain.scheme)
    single = SimPlan(chain, plan.source_law, plan.trials, plan.seed, plan.batch_size, Combiner.MIN)
    transform = _variate_fn(single, variate)
    if edges is None:
        rng = stream(plan.seed, PILOT_STREAM)
        pilot = transform(sample_hop_snrs(chain, plan.source_law, rng, pilot_trials)[:, 0])
        lo, hi = np.quantile(pilot, [0.001, 0.999])
        edges = np.geomspace(lo, hi, bins + 1) if variate == "snr" else np.linspace(lo, hi, bins + 1)
    edges = np.asarray(edges, dtype=float)

    def tally(x):
        x = transform(x)
        c, _ = np.histogram(x, edges)
        return c, int(np.count_nonzero(x < edges[0])), int(np.count_nonzero(x > edges[-1]))

    counts = np.zeros(len(edges) - 1, dtype=np.int64)
    below = above = 0
    for c, b, a in _map_batches(single, tally, single.batch_sizes(), workers):
        counts += c
        below += b
        above += a
    return Histogram(edges, counts, plan.trials, below, above)


def amount_of_fading_from_samples(samples):
    """Sample variance over squared sample mean."""
    x = np.asarray(samples, dtype=float)
    mean = x.mean()
    return float(x.var(ddof=1) / (mean * mean))


def empirical_af(plan, workers=1):
    """Amount of fading of the end-to-end SNR, accumulated batch by batch.

    Batch means and centred sums of squares are merged pairwise (Chan et al.)
    in batch order, so the result does not depend on ``workers``.
    """
    stats = _map_batches(plan, lambda x: (x.size, x.mean(), ((x - x.mean()) ** 2).sum()),
                         plan.batch_sizes(), workers)
    n, mean, m2 = stats[0]
    for nb, mb, m2b in stats[1:]:
        tot = n + nb
        delta = mb - mean
        mean += delta * nb / tot
        m2 += m2b + delta * delta * n * nb / tot
        n = tot
    return float(m2 / (n - 1) / (mean * mean))


# ---------------------------------------------------------------------------
# goodness of fit


def ks_critical_value(n, level=0.05):
    """Asymptotic Kolmogorov-Smirnov critical distance (1.358/sqrt(n) at 5%)."""
    c = {0.10: 1.224, 0.05: 1.358, 0.01: 1.628}[level]
    return c / math.sqrt(n)


def ks_distance(data, analytic_cdf, *, grid_points=None):
    """Sup-distance between an empirical CDF and ``analytic_cdf``.

    ``data`` is a 1-D sample (at least 10^4 draws) or a :class:`Histogram`; for a
    histogram the comparison is made at the bin edges.  When ``analytic_cdf``
    is expensive, ``grid_points`` evaluates it only at that many sample
    quantiles and interpolates linearly in ``log x`` in between (samples must be
    positive).
    """
    if isinstance(data, Histogram):
        emp = (data.below + np.concatenate([[0], np.cumsum(data.counts)])) / data.total
        return float(np.max(np.abs(emp - np.asarray(analytic_cdf(data.bin_edges), dtype=float))))
    x = np.sort(np.asarray(data, dtype=float))
    n = x.size
    if n < 10_000:
        raise DomainError("ks_distance needs at least 10^4 samples")
    if grid_points is None:
        f = np.asarray(analytic_cdf(x), dtype=float)
    else:
        probs = np.linspace(0.0, 1.0, int(grid_points))
        knots = np.unique(np.quantile(x, probs))
        fk = np.asarray(analytic_cdf(knots), dtype=float)
        f = np.interp(np.log(x), np.log(knots), fk)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - f), np.max(f - (i - 1) / n)))


def binomial_band_violations(hist, bin_probs, z=2.576):
    """Number of bins whose count falls outside ``n p +- z sqrt(n p (1-p))``."""
    p = np.asarray(bin_probs, dtype=float)
    mean = hist.total * p
    sd = np.sqrt(hist.total * p * (1.0 - p))
    return int(np.count_nonzero(np.abs(hist.counts - mean) > z * sd))
