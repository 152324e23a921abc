"""Experiment configuration: YAML documents parsed into validated dataclasses.

Schema (all keys optional except ``experiment``; ``chain``, ``sweep`` and
``metric`` are required for ``experiment: custom``)::

    experiment: outage_fig2     # pdf_fig1 | outage_fig2 | outage_fig3 | af_fig4 | pa_fig5 | custom
    metric: outage              # custom only: pdf | outage | af | pa
    chain:
      num_hops: 4
      cascade_order: 4          # one value or one per hop
      channel_gain: 1.0         # lambda; one value or one per hop
      avg_snr_db: 10            # per-hop average SNR when it is not swept
      diversity: 2
      scheme: nonregenerative   # or regenerative
    sweep:
      variable: snr_db          # snr_db | threshold_db | total_power_db | cascade_order
      start: 0
      stop: 30
      points: 7
    threshold_db: 0.0
    snr_axis: per_hop           # or total: x is N times the per-hop average SNR
    source_law: true_cascade    # or approx_gamma_power; default depends on the experiment
    trials: 1000000
    seed: 42
    batch_size: 100000
    max_trials: null            # cap for adaptive tail runs; default 10 * trials
    bins: 50                    # pdf only
    workers: 1
    output: results
"""

from dataclasses import asdict, dataclass
from enum import Enum
from typing import Optional

import yaml

from .errors import ConfigError

__all__ = ["Experiment", "ChainSpec", "SweepSpec", "ExperimentConfig", "parse_config", "load_config"]


class Experiment(str, Enum):
    PDF_FIG1 = "pdf_fig1"
    OUTAGE_FIG2 = "outage_fig2"
    OUTAGE_FIG3 = "outage_fig3"
    AF_FIG4 = "af_fig4"
    PA_FIG5 = "pa_fig5"
    CUSTOM = "custom"


PRESET_ALIASES = {
    "fig1": Experiment.PDF_FIG1,
    "fig2": Experiment.OUTAGE_FIG2,
    "fig3": Experiment.OUTAGE_FIG3,
    "fig4": Experiment.AF_FIG4,
    "fig5": Experiment.PA_FIG5,
}

METRICS = ("pdf", "outage", "af", "pa")
SWEEP_VARIABLES = ("snr_db", "threshold_db", "total_power_db", "cascade_order")
SOURCE_LAWS = ("true_cascade", "approx_gamma_power")
SCHEMES = ("regenerative", "nonregenerative")
SNR_AXES = ("per_hop", "total")

# which metric each experiment computes and which sweep variables it accepts
EXPERIMENT_METRIC = {
    Experiment.PDF_FIG1: "pdf",
    Experiment.OUTAGE_FIG2: "outage",
    Experiment.OUTAGE_FIG3: "outage",
    Experiment.AF_FIG4: "af",
    Experiment.PA_FIG5: "pa",
}
METRIC_SWEEPS = {
    "pdf": (),
    "outage": ("snr_db", "threshold_db"),
    "af": ("cascade_order",),
    "pa": ("total_power_db",),
}


@dataclass(frozen=True)
class ChainSpec:
    num_hops: int
    cascade_orders: tuple
    channel_gains: tuple
    avg_snrs_db: tuple = (10.0,)
    diversity: int = 1
    scheme: str = "regenerative"


@dataclass(frozen=True)
class SweepSpec:
    variable: str
    start: float
    stop: float
    points: int

    def values(self):
        if self.points == 1:
            return [float(self.start)]
        step = (self.stop - self.start) / (self.points - 1)
        return [float(self.start + i * step) for i in range(self.points)]


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: Experiment
    metric: Optional[str] = None
    chain: Optional[ChainSpec] = None
    sweep: Optional[SweepSpec] = None
    threshold_db: float = 0.0
    snr_axis: str = "per_hop"
    source_law: Optional[str] = None
    trials: int = 1_000_000
    seed: int = 42
    batch_size: int = 100_000
    max_trials: Optional[int] = None
    bins: int = 50
    workers: int = 1
    output: str = "results"

    def to_dict(self):
        d = asdict(self)
        d["experiment"] = self.experiment.value
        return d


_TOP_KEYS = {
    "experiment", "metric", "chain", "sweep", "threshold_db", "snr_axis", "source_law", "trials",
    "seed", "batch_size", "max_trials", "bins", "workers", "output",
}
_CHAIN_KEYS = {"num_hops", "cascade_order", "channel_gain", "avg_snr_db", "diversity", "scheme"}
_SWEEP_KEYS = {"variable", "start", "stop", "points"}


def _yaml_lines(text):
    """Map top-level and nested key names to their source line numbers."""
    lines = {}
    try:
        root = yaml.compose(text)
    except yaml.YAMLError:
        return lines
    if isinstance(root, yaml.MappingNode):
        for k, v in root.value:
            lines[k.value] = k.start_mark.line + 1
            if isinstance(v, yaml.MappingNode):
                for kk, _ in v.value:
                    lines[f"{k.value}.{kk.value}"] = kk.start_mark.line + 1
    return lines


def _is_int(x):
    return isinstance(x, int) and not isinstance(x, bool)


def _is_num(x):
    return isinstance(x, (int, float)) and not isinstance(x, bool)


def parse_config(text):
    """Parse and validate a YAML experiment document.

    Raises ConfigError with kind ``PARSE_ERROR`` for malformed YAML, unknown keys
    or a non-mapping document, and ``VALIDATION_ERROR`` for out-of-range values.
    Every issue names its field (and line, when known).
    """
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"line {mark.line + 1}: " if mark is not None else ""
        raise ConfigError("PARSE_ERROR", [f"{where}{getattr(exc, 'problem', exc)}"]) from None
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise ConfigError("PARSE_ERROR", ["document must be a mapping of keys to values"])

    lines = _yaml_lines(text)

    def at(key):
        return f" (line {lines[key]})" if key in lines else ""

    unknown = [f"unknown key '{k}'{at(k)}" for k in doc if k not in _TOP_KEYS]
    for section, allowed in (("chain", _CHAIN_KEYS), ("sweep", _SWEEP_KEYS)):
        sub = doc.get(section)
        if sub is not None and not isinstance(sub, dict):
            unknown.append(f"'{section}' must be a mapping{at(section)}")
        elif sub:
            unknown += [f"unknown key '{section}.{k}'{at(section + '.' + k)}"
                        for k in sub if k not in allowed]
    if unknown:
        raise ConfigError("PARSE_ERROR", unknown)

    issues = []

    def bad(key, msg):
        issues.append(f"{key}: {msg}{at(key)}")

    exp_raw = doc.get("experiment")
    experiment = None
    if exp_raw is None:
        bad("experiment", "is required")
    else:
        name = str(exp_raw).lower()
        experiment = PRESET_ALIASES.get(name)
        if experiment is None:
            try:
                experiment = Experiment(name)
            except ValueError:
                bad("experiment", f"must be one of {[e.value for e in Experiment]}")

    metric = doc.get("metric")
    if metric is not None and metric not in METRICS:
        bad("metric", f"must be one of {list(METRICS)}")
    if experiment is Experiment.CUSTOM and metric is None:
        bad("metric", "is required for custom experiments")

    chain = None
    if "chain" in doc and doc["chain"] is not None:
        chain = _parse_chain(doc["chain"], bad)
    elif experiment is Experiment.CUSTOM:
        bad("chain", "is required for custom experiments")
    if chain is not None and experiment in EXPERIMENT_METRIC:
        bad("chain", "presets fix their own chains; use experiment: custom")

    sweep = None
    if "sweep" in doc and doc["sweep"] is not None:
        sweep = _parse_sweep(doc["sweep"], bad)
    elif experiment is Experiment.CUSTOM and metric != "pdf":
        bad("sweep", "is required for custom experiments")

    resolved = EXPERIMENT_METRIC.get(experiment, metric)
    if resolved in METRIC_SWEEPS and sweep is not None and sweep.variable not in METRIC_SWEEPS[resolved]:
        allowed = list(METRIC_SWEEPS[resolved]) or "no sweep (bins set the rows)"
        bad("sweep.variable", f"{resolved} experiments accept {allowed}")
    if experiment in EXPERIMENT_METRIC and metric is not None and metric != resolved:
        bad("metric", f"{experiment.value} computes {resolved}")
    if resolved == "pa" and chain is not None and chain.scheme != "regenerative":
        bad("chain.scheme", "power allocation needs a regenerative chain")

    kwargs = {}
    for key, check, msg in (
        ("trials", lambda v: _is_int(v) and v >= 1, "must be a positive integer"),
        ("seed", lambda v: _is_int(v) and 0 <= v < 2**64, "must be an unsigned 64-bit integer"),
        ("batch_size", lambda v: _is_int(v) and v >= 1, "must be a positive integer"),
        ("max_trials", lambda v: v is None or (_is_int(v) and v >= 1), "must be a positive integer"),
        ("bins", lambda v: _is_int(v) and v >= 10, "must be an integer >= 10"),
        ("workers", lambda v: _is_int(v) and v >= 1, "must be a positive integer"),
        ("threshold_db", _is_num, "must be a number"),
        ("snr_axis", lambda v: v in SNR_AXES, f"must be one of {list(SNR_AXES)}"),
        ("output", lambda v: isinstance(v, str) and v, "must be a nonempty path"),
        ("source_law", lambda v: v is None or v in SOURCE_LAWS, f"must be one of {list(SOURCE_LAWS)}"),
    ):
        if key in doc:
            if check(doc[key]):
                kwargs[key] = doc[key]
            else:
                bad(key, msg)

    if issues:
        raise ConfigError("VALIDATION_ERROR", issues)
    if "threshold_db" in kwargs:
        kwargs["threshold_db"] = float(kwargs["threshold_db"])
    return ExperimentConfig(experiment=experiment, metric=resolved, chain=chain, sweep=sweep, **kwargs)


def _per_hop(value, count, key, bad, check, msg):
    values = value if isinstance(value, list) else [value] * count
    if len(values) != count:
        bad(key, f"needs {count} entries, got {len(values)}")
        return None
    if not all(check(v) for v in values):
        bad(key, msg)
        return None
    return tuple(values)


def _parse_chain(raw, bad):
    num_hops = raw.get("num_hops", 1)
    if not (_is_int(num_hops) and num_hops >= 1):
        bad("chain.num_hops", "must be a positive integer")
        return None
    orders = _per_hop(raw.get("cascade_order", 1), num_hops, "chain.cascade_order", bad,
                      lambda v: _is_int(v) and v >= 1, "must be an integer >= 1")
    gains = _per_hop(raw.get("channel_gain", 1.0), num_hops, "chain.channel_gain", bad,
                     lambda v: _is_num(v) and v > 0, "must be positive")
    snrs = _per_hop(raw.get("avg_snr_db", 10.0), num_hops, "chain.avg_snr_db", bad,
                    _is_num, "must be a number")
    diversity = raw.get("diversity", 1)
    if not (_is_int(diversity) and diversity >= 1):
        bad("chain.diversity", "must be a positive integer")
    scheme = raw.get("scheme", "regenerative")
    if scheme not in SCHEMES:
        bad("chain.scheme", f"must be one of {list(SCHEMES)}")
    if orders is None or gains is None or snrs is None:
        return None
    return ChainSpec(num_hops, orders, tuple(float(g) for g in gains),
                     tuple(float(s) for s in snrs), diversity, scheme)


def _parse_sweep(raw, bad):
    ok = True
    variable = raw.get("variable")
    if variable not in SWEEP_VARIABLES:
        bad("sweep.variable", f"must be one of {list(SWEEP_VARIABLES)}")
        ok = False
    for key in ("start", "stop"):
        if not _is_num(raw.get(key)):
            bad(f"sweep.{key}", "must be a number")
            ok = False
    points = raw.get("points")
    if not (_is_int(points) and points >= 1):
        bad("sweep.points", "must be a positive integer")
        ok = False
    if ok and points > 1 and raw["start"] == raw["stop"]:
        bad("sweep", "range is empty (start == stop with several points)")
        ok = False
    if ok and variable == "cascade_order":
        if not (float(raw["start"]).is_integer() and float(raw["stop"]).is_integer()
                and raw["start"] >= 1 and (points == 1 or (raw["stop"] - raw["start"]) % (points - 1) == 0)):
            bad("sweep", "cascade_order sweeps need integer values >= 1")
            ok = False
    return SweepSpec(variable, float(raw["start"]), float(raw["stop"]), points) if ok else None


def load_config(path):
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
