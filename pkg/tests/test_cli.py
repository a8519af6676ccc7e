import json
from pathlib import Path

import numpy as np
import pytest

from phident.cli import main
from phident.cli.config import ConfigError, parse_config, resolve_output_dir
from phident.cli.export import error_table, trajectory_table, verify_manifest, write_csv
from phident.cli.plot import Series, error_plot, render_plot
from phident.datasets import read_csv

TINY = """
[dataset]
kind = "pendulum"
params = {{ n_train = 3, n_test = 2, n_t_train = 40, n_t_test = 60 }}

[model]
mode = "{mode}"
r = 2
layers = [8]

[loss]
rec = 1.0
ph = 0.1
con = 0.001
l1 = 1e-10

[optimizer]
lr = 1e-3
batch_size = 32
epochs = 3

[run]
seed = 0
name = "tiny"
"""


def write_cfg(tmp_path, mode="aphin_nonlinear", text=None):
    p = tmp_path / "cfg.toml"
    p.write_text(text if text is not None else TINY.format(mode=mode))
    return p


def test_parse_defaults():
    cfg = parse_config(TINY.format(mode="aphin_nonlinear"))
    assert cfg.train.patience == 200 and cfg.train.min_delta == 1e-6 and cfg.train.val_fraction == 0.1
    assert cfg.loss.ph == 0.1 and cfg.model.layers == [8]


@pytest.mark.parametrize(
    "edit",
    [
        lambda s: s.replace('kind = "pendulum"', 'kind = "brake"'),
        lambda s: s.replace("r = 2", "r = 0"),
        lambda s: s.replace("epochs = 3", "epochs = 0"),
        lambda s: s + "\n[extra]\nx = 1\n",
        lambda s: s.replace("lr = 1e-3", "lr = 1e-3\nmomentum = 0.9"),
        lambda s: s.replace("n_train = 3", "n_trains = 3"),
        lambda s: s.replace("[model]", "[model"),
    ],
)
def test_config_errors(edit):
    with pytest.raises(ConfigError):
        parse_config(edit(TINY.format(mode="aphin_nonlinear")))


def test_output_dir_resolution(monkeypatch):
    cfg = parse_config(TINY.format(mode="aphin_linear"))
    monkeypatch.setenv("PH_IDENT_OUT", "/tmp/somewhere")
    assert resolve_output_dir(cfg) == Path("/tmp/somewhere/tiny")
    assert resolve_output_dir(cfg, "x") == Path("x")


def test_plot_constant_series():
    svg = render_plot([Series(np.arange(5.0), np.ones(5), "c")])
    assert svg.startswith("<svg") and "<path d=\"M" in svg
    ys = {seg.split(",")[1] for seg in svg.split('<path d="M')[1].split('"')[0].split(" L")}
    assert len(ys) == 1


def test_plot_errors():
    with pytest.raises(ValueError):
        render_plot([])
    with pytest.raises(ValueError):
        render_plot([Series(np.arange(3.0), np.array([1.0, 0.0, 2.0]))], logy=True)


def test_error_plot_style():
    svg = error_plot(np.linspace(0, 1, 10), np.abs(np.random.default_rng(0).standard_normal((3, 10))) + 1e-3)
    assert svg.count('stroke="#999999"') >= 3 and 'stroke="#d62728"' in svg


def test_csv_header_only_and_roundtrip(tmp_path):
    p = write_csv(tmp_path / "empty.csv", ["t", "a"], np.zeros((0, 2)))
    assert p.read_bytes() == b"t,a\n"
    rows = np.random.default_rng(1).standard_normal((4, 2)) * 1e-7
    p = write_csv(tmp_path / "r.csv", ["t", "a"], rows)
    header, data = read_csv(p)
    assert header == ["t", "a"] and np.array_equal(data, rows)
    assert b"\r" not in p.read_bytes()


def test_table_column_names():
    t = np.arange(3.0)
    X = [np.zeros((3, 2))] * 2
    header, _ = trajectory_table(t, X, X, [0, 4])
    assert header == ["t", "x_0_0", "x_1_0", "x_0_dt_0", "x_1_dt_0", "x_0_4", "x_1_4", "x_0_dt_4", "x_1_dt_4"]
    header, data = error_table(t, np.ones((2, 3)), "position")
    assert header == ["t", "error_state_error_position_0", "error_state_error_position_1", "mean_error_state_error_position"]


def test_run_generate_evaluate_report(tmp_path, capsys):
    cfg = write_cfg(tmp_path)
    out = tmp_path / "run"
    assert main(["run", "--config", str(cfg), "--out", str(out)]) == 0
    for name in ("config.toml", "metrics.json", "model.json", "loss_curve.csv", "reference.csv", "nonlinear.csv",
                 "manifest.json", "timings.json", "loss_curve.svg", "error_state_position.svg"):
        assert (out / name).exists(), name
    assert (out / "config.toml").read_bytes() == cfg.read_bytes()
    assert verify_manifest(out) == []
    header = (out / "reference.csv").read_text().splitlines()[0].split(",")
    assert header[0] == "t" and "x_0_0" in header and "x_0_dt_0" in header

    data = tmp_path / "data"
    assert main(["generate", "--dataset", "pendulum", "--out", str(data), "--param", "n_train=2",
                 "--param", "n_test=2", "--param", "n_t_test=60"]) == 0
    assert (data / "train" / "meta.json").exists()
    assert main(["evaluate", "--model", str(out / "model.json"), "--data", str(data / "test")]) == 0
    capsys.readouterr()
    assert main(["report", "--run", str(out)]) == 0
    assert "mean_e_x" in capsys.readouterr().out

    (out / "metrics.json").write_text("{}")
    assert main(["report", "--run", str(out)]) != 0


def test_exit_codes(tmp_path):
    bad = write_cfg(tmp_path, text=TINY.format(mode="aphin_nonlinear").replace("r = 2", "r = 0"))
    assert main(["run", "--config", str(bad), "--out", str(tmp_path / "x")]) == 2
    assert main(["run", "--config", str(tmp_path / "missing.toml")]) == 2
    assert main(["generate", "--dataset", "msd", "--param", "bogus=1", "--out", str(tmp_path / "d")]) == 2
    diverge = TINY.format(mode="aphin_nonlinear").replace("lr = 1e-3", "lr = 1e300")
    with np.errstate(all="ignore"):
        code = main(["run", "--config", str(write_cfg(tmp_path, text=diverge)), "--out", str(tmp_path / "dv")])
    assert code == 3
    assert (tmp_path / "dv" / "model_checkpoint.json").exists()
