import pytest

from nstar_relay.config import Experiment, parse_config
from nstar_relay.errors import ConfigError


def _err(text):
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    return info.value


def test_minimal_preset_gets_defaults():
    cfg = parse_config("experiment: pdf_fig1\n")
    assert cfg.experiment is Experiment.PDF_FIG1
    assert cfg.metric == "pdf"
    assert cfg.trials == 1_000_000 and cfg.seed == 42
    assert parse_config("experiment: fig5").experiment is Experiment.PA_FIG5


def test_custom_config_round_trip():
    cfg = parse_config("""
experiment: custom
metric: outage
chain:
  num_hops: 3
  cascade_order: [2, 3, 2]
  channel_gain: 1.5
  diversity: 2
  scheme: regenerative
sweep: {variable: snr_db, start: 0, stop: 20, points: 5}
trials: 5000
""")
    assert cfg.chain.cascade_orders == (2, 3, 2)
    assert cfg.chain.channel_gains == (1.5, 1.5, 1.5)
    assert cfg.sweep.values() == [0.0, 5.0, 10.0, 15.0, 20.0]
    assert cfg.to_dict()["experiment"] == "custom"


def test_unknown_key_is_a_parse_error():
    e = _err("experiment: fig1\ntrails: 10\n")
    assert e.kind == "PARSE_ERROR"
    assert "trails" in str(e) and "line 2" in str(e)
    e = _err("experiment: custom\nmetric: af\nchain: {num_hops: 2, colour: red}\n")
    assert e.kind == "PARSE_ERROR" and "chain.colour" in str(e)


def test_malformed_yaml_reports_line():
    e = _err("experiment: fig1\nchain: [1, 2\n")
    assert e.kind == "PARSE_ERROR" and "line" in str(e)
    assert _err("- just\n- a list\n").kind == "PARSE_ERROR"


def test_negative_gain_names_channel_gain():
    e = _err("""
experiment: custom
metric: outage
chain: {num_hops: 2, channel_gain: -1.0}
sweep: {variable: snr_db, start: 0, stop: 10, points: 3}
""")
    assert e.kind == "VALIDATION_ERROR"
    assert any("channel_gain" in i for i in e.issues)


@pytest.mark.parametrize("text,field", [
    ("experiment: fig2\ntrials: 0\n", "trials"),
    ("experiment: fig2\nseed: -3\n", "seed"),
    ("experiment: fig9\n", "experiment"),
    ("trials: 10\n", "experiment"),
    ("experiment: fig2\nsweep: {variable: snr_db, start: 5, stop: 5, points: 3}\n", "sweep"),
    ("experiment: fig2\nsweep: {variable: total_power_db, start: 0, stop: 5, points: 3}\n", "sweep.variable"),
    ("experiment: custom\nmetric: outage\n", "chain"),
    ("experiment: custom\n", "metric"),
    ("experiment: fig1\nchain: {num_hops: 1}\n", "chain"),
    ("experiment: custom\nmetric: pa\nchain: {num_hops: 2, scheme: nonregenerative}\n"
     "sweep: {variable: total_power_db, start: 0, stop: 5, points: 3}\n", "chain.scheme"),
    ("experiment: custom\nmetric: outage\nchain: {num_hops: 2, cascade_order: [1, 2, 3]}\n"
     "sweep: {variable: snr_db, start: 0, stop: 5, points: 3}\n", "chain.cascade_order"),
    ("experiment: fig2\nsource_law: exact\n", "source_law"),
])
def test_validation_errors_name_the_field(text, field):
    e = _err(text)
    assert e.kind == "VALIDATION_ERROR"
    assert any(i.startswith(field) for i in e.issues), e.issues
