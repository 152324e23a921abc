import json
import os

import pytest

from nstar_relay import cli
from nstar_relay.config import SweepSpec, parse_config
from nstar_relay.errors import NonConvergenceError
from nstar_relay.experiments import CSV_COLUMNS, preset_config, run_experiment

SMALL = dict(trials=5_000, batch_size=2_500)


def _read(path):
    with open(path, "rb") as fh:
        return fh.read()


@pytest.mark.parametrize("name,curves,rows", [
    ("fig1", 3, 50),
    ("fig2", 6, 7),
    ("fig3", 6, 9),
    ("fig4", 6, 6),
    ("fig5", 4, 16),
])
def test_presets_write_csv_and_metadata(tmp_path, name, curves, rows):
    cfg = preset_config(name, output=str(tmp_path), **SMALL)
    res = run_experiment(cfg)
    assert len(res.curves) == curves
    csvs = sorted(p for p in os.listdir(tmp_path) if p.endswith(".csv"))
    assert len(csvs) == curves
    for c in csvs:
        body = _read(tmp_path / c)
        assert b"\r" not in body and body.endswith(b"\n")
        lines = body.decode("utf-8").splitlines()
        assert lines[0] == ",".join(CSV_COLUMNS)
        assert len(lines) - 1 == rows
        for line in lines[1:]:
            cells = line.split(",")
            assert len(cells) == 6
            for cell in cells[:5]:
                if cell:
                    digits = cell.lower().split("e")[0].replace("-", "").replace(".", "").lstrip("0")
                    assert len(digits) <= 12
    meta = json.loads(_read(tmp_path / "metadata.json"))
    for key in ("config_hash", "seed", "version", "wall_time_s", "curves"):
        assert key in meta
    assert meta["seed"] == 42 and len(meta["curves"]) == curves


def test_sweep_override_and_row_count(tmp_path):
    cfg = preset_config("fig2", output=str(tmp_path), sweep=SweepSpec("snr_db", 0, 10, 3), **SMALL)
    res = run_experiment(cfg, write=False)
    assert all(len(c.points) == 3 for c in res.curves)
    assert [p.x for p in res.curves[0].points] == [0.0, 5.0, 10.0]
    # regenerative curves carry the asymptote, nonregenerative ones leave it empty
    assert res.curves[0].points[0].asymptotic is None
    assert res.curves[-1].points[0].asymptotic is not None


def test_custom_experiments_run(tmp_path):
    base = "chain: {num_hops: 2, cascade_order: [2, 3], channel_gain: [1, 4], diversity: 2}\n"
    for metric, sweep in (("outage", "{variable: threshold_db, start: -5, stop: 5, points: 3}"),
                          ("pa", "{variable: total_power_db, start: 0, stop: 10, points: 2}"),
                          ("af", "{variable: cascade_order, start: 1, stop: 3, points: 3}")):
        text = f"experiment: custom\nmetric: {metric}\n{base}sweep: {sweep}\ntrials: 2000\n"
        res = run_experiment(parse_config(text), write=False)
        assert all(len(c.points) == int(sweep.split("points: ")[1][0]) for c in res.curves)
    text = f"experiment: custom\nmetric: pdf\n{base}trials: 5000\nbins: 20\n"
    assert len(run_experiment(parse_config(text), write=False).curves[0].points) == 20


def test_reruns_are_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out, workers in ((a, 1), (b, 3)):
        run_experiment(preset_config("fig3", output=str(out), workers=workers, **SMALL))
    for name in os.listdir(a):
        if name.endswith(".csv"):
            assert _read(a / name) == _read(b / name)
    ma, mb = json.loads(_read(a / "metadata.json")), json.loads(_read(b / "metadata.json"))
    assert ma["config_hash"] != mb["config_hash"]   # workers is part of the config
    c = tmp_path / "c"
    run_experiment(preset_config("fig3", output=str(c), seed=7, **SMALL))
    assert _read(a / "df_N3_L2_n2.csv") != _read(c / "df_N3_L2_n2.csv")


def test_cli_preset_run(tmp_path, capsys):
    code = cli.main(["af", "--preset", "fig4", "--trials", "2000", "--seed", "9", "--out", str(tmp_path)])
    assert code == 0
    meta = json.loads(_read(tmp_path / "metadata.json"))
    assert meta["seed"] == 9 and meta["trials"] == 2000
    assert "metadata.json" in capsys.readouterr().out


def test_cli_config_errors(tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text("experiment: fig2\nbogus: 1\n")
    assert cli.main(["outage", "--config", str(bad)]) == cli.EXIT_CONFIG
    assert "bogus" in capsys.readouterr().err
    wrong = tmp_path / "wrong.yaml"
    wrong.write_text("experiment: fig4\n")
    assert cli.main(["outage", "--config", str(wrong)]) == cli.EXIT_CONFIG


def test_cli_io_errors(tmp_path):
    assert cli.main(["outage", "--config", str(tmp_path / "missing.yaml")]) == cli.EXIT_IO
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert cli.main(["af", "--preset", "fig4", "--trials", "100", "--out", str(blocker / "sub")]) \
        == cli.EXIT_IO


def test_cli_nonconvergence(tmp_path, monkeypatch):
    def fail(*args, **kwargs):
        raise NonConvergenceError("stuck")

    monkeypatch.setattr("nstar_relay.experiments.solve_pa", fail)
    assert cli.main(["pa", "--preset", "fig5", "--trials", "100", "--out", str(tmp_path)]) \
        == cli.EXIT_NONCONVERGENCE


def test_cli_validate_subset(capsys):
    assert cli.main(["validate", "--only", "1,9"]) == cli.EXIT_FAILED
    out = capsys.readouterr().out.splitlines()
    assert out[0].startswith("[PASS] criterion  1")
    assert out[1].startswith("[FAIL] criterion  9")
    assert out[2] == "1/2 criteria passed"


def test_total_snr_axis_shifts_by_hop_count():
    sweep = SweepSpec("snr_db", 10, 10, 1)
    per = run_experiment(preset_config("fig3", sweep=sweep, **SMALL), write=False)
    tot = run_experiment(preset_config("fig3", sweep=SweepSpec("snr_db", 10 + 10 * 0.47712125472, 0, 1),
                                       snr_axis="total", **SMALL), write=False)
    assert tot.curves[0].points[0].analytic == pytest.approx(per.curves[0].points[0].analytic, rel=1e-9)
    assert per.metadata["curves"][0]["snr_axis"] == "per-hop average SNR"
