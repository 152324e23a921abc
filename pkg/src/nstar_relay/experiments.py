"""Experiment presets and the runner that turns a config into CSV curves.

Each curve is one CSV file with the columns
``x, analytic, asymptotic, mc_estimate, mc_stderr, flag`` (12 significant
digits, LF line endings, empty cells where a column does not apply) plus one
``metadata.json`` per run.  CSV bodies depend only on the config, so two runs
with the same seed are byte-identical.

Preset axis ranges are estimates of the published figure ranges.
"""

import hashlib
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from typing import Optional

import numpy as np

from . import __version__
from .channel import HopModel, mrc_snr_cdf
from .config import EXPERIMENT_METRIC, PRESET_ALIASES, Experiment, ExperimentConfig, SweepSpec
from .montecarlo import Combiner, SimPlan, SourceLaw, empirical_af, run_outage_sim, run_pdf_sim
from .multihop import (
    RelayChain,
    Scheme,
    amount_of_fading,
    db_to_linear,
    df_outage_asymptotic,
    outage_probability,
)
from .power import equal_power, outage_under_allocation, pa_asymptotic, solve_pa

__all__ = ["CurvePoint", "Curve", "ExperimentResult", "run_experiment", "write_csv", "CSV_COLUMNS"]

CSV_COLUMNS = ("x", "analytic", "asymptotic", "mc_estimate", "mc_stderr", "flag")
LOW_CONFIDENCE = "LOW_CONFIDENCE"

DEFAULT_SWEEPS = {
    Experiment.OUTAGE_FIG2: SweepSpec("snr_db", 0.0, 30.0, 7),
    Experiment.OUTAGE_FIG3: SweepSpec("snr_db", 0.0, 40.0, 9),
    Experiment.AF_FIG4: SweepSpec("cascade_order", 1.0, 6.0, 6),
    Experiment.PA_FIG5: SweepSpec("total_power_db", 0.0, 30.0, 16),
}
DEFAULT_LAWS = {
    "pdf": SourceLaw.TRUE_CASCADE,
    "outage": SourceLaw.TRUE_CASCADE,
    "af": SourceLaw.APPROX_GAMMA_POWER,
    "pa": SourceLaw.APPROX_GAMMA_POWER,
}


@dataclass
class CurvePoint:
    x: float
    analytic: float
    asymptotic: Optional[float] = None
    mc_estimate: Optional[float] = None
    mc_stderr: Optional[float] = None
    flag: str = ""


@dataclass
class Curve:
    name: str
    x_label: str
    points: list
    info: dict = field(default_factory=dict)


@dataclass
class ExperimentResult:
    curves: list
    metadata: dict
    files: list = field(default_factory=list)


# ---------------------------------------------------------------------------
# helpers


def point_seed(seed, curve_index, point_index):
    """Deterministic 64-bit seed for one sweep point of one curve."""
    ss = np.random.SeedSequence([seed, curve_index, point_index])
    return int(ss.generate_state(1, np.uint64)[0])


def _map_points(fn, items, workers):
    # rows come back in sweep order whatever the completion order
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            return list(pool.map(fn, items))
    return [fn(it) for it in items]


def _law(config):
    return SourceLaw(config.source_law) if config.source_law else DEFAULT_LAWS[config.metric]


def _plan(config, chain, curve_index, point_index, **kwargs):
    return SimPlan(chain, _law(config), config.trials, point_seed(config.seed, curve_index, point_index),
                   min(config.batch_size, config.trials), **kwargs)


def _chain_from_spec(spec, snrs_db=None):
    snrs = spec.avg_snrs_db if snrs_db is None else snrs_db
    hops = tuple(HopModel(n, db_to_linear(s), g)
                 for n, g, s in zip(spec.cascade_orders, spec.channel_gains, snrs))
    return RelayChain(hops, spec.diversity, Scheme(spec.scheme))


def _sweep(config):
    sweep = config.sweep or DEFAULT_SWEEPS.get(config.experiment)
    return sweep.values()


# ---------------------------------------------------------------------------
# pdf


def _pdf_curve(config, name, hop, diversity, curve_index):
    chain = RelayChain((hop,), diversity)
    hist = run_pdf_sim(_plan(config, chain, curve_index, 0), config.bins, variate="amplitude",
                       workers=config.workers)
    # bin-averaged analytic density, from the amplitude CDF P(h <= x) = F_gamma(avg_snr x^2 / lambda)
    scale = hop.avg_snr / hop.channel_gain
    cdf = mrc_snr_cdf(hop, diversity, scale * hist.bin_edges ** 2)
    analytic = np.diff(cdf) / hist.widths
    dens, err = hist.density, hist.density_stderr
    points = [CurvePoint(float(x), float(a), None, float(d), float(e))
              for x, a, d, e in zip(hist.centers, analytic, dens, err)]
    l1 = float(np.sum(np.abs(analytic - dens) * hist.widths))
    info = {"cascade_order": hop.cascade_order, "diversity": diversity, "l1_distance": l1,
            "outside_range": hist.below + hist.above,
            "note": "analytic is the approximate density averaged over each bin"}
    return Curve(name, "amplitude", points, info)


def _pdf_curves(config):
    if config.experiment is Experiment.PDF_FIG1:
        # per-stage variance sigma^2 = 1, so lambda = 2^n
        return [_pdf_curve(config, f"pdf_n{n}_L2", HopModel(n, 1.0, 2.0 ** n), 2, i)
                for i, n in enumerate((3, 4, 5))]
    chain = _chain_from_spec(config.chain)
    return [_pdf_curve(config, "pdf_custom", chain.hops[0], chain.diversity, 0)]


# ---------------------------------------------------------------------------
# outage


def _outage_curve(config, name, base, curve_index, variable="snr_db"):
    xs = _sweep(config)
    combiner = Combiner.SCHEME

    def point(item):
        j, x = item
        if variable == "snr_db":
            per_hop = db_to_linear(x) / (base.num_hops if config.snr_axis == "total" else 1)
            chain = base.with_avg_snrs(per_hop)
            g_th = db_to_linear(config.threshold_db)
        else:
            chain, g_th = base, db_to_linear(x)
        analytic = float(outage_probability(chain, g_th))
        asym = None
        if chain.scheme is Scheme.REGENERATIVE and len(set(chain.cascade_orders)) == 1 \
                and len({h.avg_snr for h in chain.hops}) == 1:
            asym = float(df_outage_asymptotic(chain, g_th))
        est = run_outage_sim(_plan(config, chain, curve_index, j, combiner=combiner), g_th,
                             max_trials=config.max_trials)
        return CurvePoint(x, analytic, asym, est.estimate, est.stderr,
                          LOW_CONFIDENCE if est.low_confidence else "")

    points = _map_points(point, list(enumerate(xs)), config.workers)
    info = {"scheme": base.scheme.value, "num_hops": base.num_hops, "diversity": base.diversity,
            "cascade_orders": list(base.cascade_orders), "threshold_db": config.threshold_db,
            "source_law": _law(config).value}
    if variable == "snr_db":
        info["snr_axis"] = ("per-hop average SNR" if config.snr_axis == "per_hop"
                            else "total SNR, N times the per-hop average SNR")
    if base.scheme is Scheme.NONREGENERATIVE:
        info["note"] = "analytic is the CDF of the geometric upper bound on the end-to-end SNR"
    return Curve(name, variable, points, info)


def _outage_curves(config):
    if config.experiment is Experiment.OUTAGE_FIG2:
        specs = [(f"af_N4_L2_n{n}", RelayChain.uniform(4, n, 1.0, 2, Scheme.NONREGENERATIVE))
                 for n in (2, 3, 4)]
        specs += [(f"df_N6_L3_n{n}", RelayChain.uniform(6, n, 1.0, 3, Scheme.REGENERATIVE))
                  for n in (2, 3, 4)]
    elif config.experiment is Experiment.OUTAGE_FIG3:
        specs = []
        for n in (2, 3, 4):
            for scheme in (Scheme.REGENERATIVE, Scheme.NONREGENERATIVE):
                tag = "df" if scheme is Scheme.REGENERATIVE else "af"
                specs.append((f"{tag}_N3_L2_n{n}", RelayChain.uniform(3, n, 1.0, 2, scheme)))
    else:
        return [_outage_curve(config, "outage_custom", _chain_from_spec(config.chain), 0,
                              config.sweep.variable)]
    return [_outage_curve(config, name, chain, i) for i, (name, chain) in enumerate(specs)]


# ---------------------------------------------------------------------------
# amount of fading


def _af_curve(config, name, num_hops, diversity, curve_index, gains=None):
    xs = _sweep(config)
    gains = [1.0] * num_hops if gains is None else gains

    def point(item):
        j, x = item
        n = int(round(x))
        hops = tuple(HopModel(n, 1.0, g) for g in gains)
        chain = RelayChain(hops, diversity, Scheme.NONREGENERATIVE)
        plan = _plan(config, chain, curve_index, j, combiner=Combiner.GEOMETRIC)
        return CurvePoint(float(n), amount_of_fading(chain), None, empirical_af(plan))

    points = _map_points(point, list(enumerate(xs)), config.workers)
    info = {"num_hops": num_hops, "diversity": diversity, "source_law": _law(config).value,
            "note": "mc_estimate is the sample amount of fading of the geometric-bound SNR"}
    return Curve(name, "cascade_order", points, info)


def _af_curves(config):
    if config.experiment is Experiment.AF_FIG4:
        grid = [(N, L) for N in (1, 3) for L in (1, 2, 3)]
        return [_af_curve(config, f"af_N{N}_L{L}", N, L, i) for i, (N, L) in enumerate(grid)]
    spec = config.chain
    return [_af_curve(config, "af_custom", spec.num_hops, spec.diversity, 0, list(spec.channel_gains))]


# ---------------------------------------------------------------------------
# power allocation


def _pa_curves_for(config, chain, tag, index0):
    xs = _sweep(config)
    g_th = db_to_linear(config.threshold_db)
    gains = [h.channel_gain for h in chain.hops]

    def mc(budget, curve_index, j):
        hops = tuple(HopModel(h.cascade_order, p * h.channel_gain, h.channel_gain)
                     for h, p in zip(chain.hops, budget.allocations))
        plan = _plan(config, RelayChain(hops, chain.diversity), curve_index, j)
        return run_outage_sim(plan, g_th, max_trials=config.max_trials)

    def point(item):
        j, x = item
        total = db_to_linear(x)
        pa = solve_pa(chain, gains, total, g_th).budget
        epa = equal_power(chain, total)
        asym = pa_asymptotic(chain, total)
        e_pa, e_epa = mc(pa, index0, j), mc(epa, index0 + 1, j)
        return (
            CurvePoint(x, outage_under_allocation(chain, gains, pa, g_th),
                       outage_under_allocation(chain, gains, asym, g_th),
                       e_pa.estimate, e_pa.stderr, LOW_CONFIDENCE if e_pa.low_confidence else ""),
            CurvePoint(x, outage_under_allocation(chain, gains, epa, g_th), None,
                       e_epa.estimate, e_epa.stderr, LOW_CONFIDENCE if e_epa.low_confidence else ""),
            [round(r, 12) for r in pa.ratios],
        )

    rows = _map_points(point, list(enumerate(xs)), config.workers)
    base = {"channel_gains": gains, "cascade_orders": list(chain.cascade_orders),
            "diversity": chain.diversity, "threshold_db": config.threshold_db,
            "source_law": _law(config).value}
    pa_info = dict(base, ratios=[r[2] for r in rows],
                   asymptotic_ratios=[round(r, 12) for r in pa_asymptotic(chain).ratios],
                   note="asymptotic is the outage under the high-power allocation")
    return [Curve(f"pa_{tag}", "total_power_db", [r[0] for r in rows], pa_info),
            Curve(f"epa_{tag}", "total_power_db", [r[1] for r in rows], dict(base))]


def _pa_curves(config):
    if config.experiment is Experiment.PA_FIG5:
        curves = []
        for i, L in enumerate((1, 3)):
            hops = tuple(HopModel(n, 1.0, lam) for n, lam in zip((3, 3, 2), (1.0, 1.0, 10.0)))
            curves += _pa_curves_for(config, RelayChain(hops, L), f"L{L}", 2 * i)
        return curves
    return _pa_curves_for(config, _chain_from_spec(config.chain), "custom", 0)


_RUNNERS = {"pdf": _pdf_curves, "outage": _outage_curves, "af": _af_curves, "pa": _pa_curves}


# ---------------------------------------------------------------------------
# output


def _fmt(v):
    if v is None:
        return ""
    v = float(v)
    if math.isnan(v):
        return "nan"
    return format(v, ".12g")


def csv_text(curve):
    lines = [",".join(CSV_COLUMNS)]
    for p in curve.points:
        lines.append(",".join([_fmt(p.x), _fmt(p.analytic), _fmt(p.asymptotic),
                               _fmt(p.mc_estimate), _fmt(p.mc_stderr), p.flag]))
    return "\n".join(lines) + "\n"


def write_csv(curve, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(csv_text(curve))


def config_hash(config):
    blob = json.dumps(config.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def run_experiment(config, *, write=True):
    """Compute every curve of ``config`` and, if ``write``, save CSVs and metadata.

    Files go to ``config.output``: ``<curve>.csv`` per curve and
    ``metadata.json`` with the config, its hash, seed, tool version and wall
    time.  Module errors (DomainError, NonConvergenceError) propagate.
    """
    if config.metric not in _RUNNERS:
        raise ValueError(f"config has no metric to run: {config.metric!r}")
    if config.sweep is None and config.experiment is Experiment.CUSTOM and config.metric != "pdf":
        raise ValueError("custom experiments need a sweep")
    start = time.perf_counter()
    curves = _RUNNERS[config.metric](config)
    wall = time.perf_counter() - start

    metadata = {
        "tool": "nstar_relay",
        "version": __version__,
        "experiment": config.experiment.value,
        "metric": config.metric,
        "config": config.to_dict(),
        "config_hash": config_hash(config),
        "seed": config.seed,
        "trials": config.trials,
        "wall_time_s": round(wall, 3),
        "created_utc": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "columns": list(CSV_COLUMNS),
        "curves": [{"name": c.name, "file": f"{c.name}.csv", "x": c.x_label,
                    "rows": len(c.points), **c.info} for c in curves],
    }
    result = ExperimentResult(curves, metadata)
    if write:
        os.makedirs(config.output, exist_ok=True)
        for c in curves:
            path = os.path.join(config.output, f"{c.name}.csv")
            write_csv(c, path)
            result.files.append(path)
        meta_path = os.path.join(config.output, "metadata.json")
        with open(meta_path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(metadata, fh, indent=2, sort_keys=True)
            fh.write("\n")
        result.files.append(meta_path)
    return result


def preset_config(name, **overrides):
    """Default config for a preset name such as ``"fig2"`` or ``"outage_fig2"``."""
    exp = PRESET_ALIASES.get(name) or Experiment(name)
    if exp is Experiment.CUSTOM:
        raise ValueError("custom experiments need a config file")
    return replace(ExperimentConfig(exp, EXPERIMENT_METRIC[exp]), **overrides)
