import subprocess
import sys

import numpy as np
import pytest

from nmunravel.cli import main
from nmunravel.output import read_csv
from nmunravel.scenario import load_scenario

SMALL = """
method = "{method}"
M = 40
dt = 0.01
t_end = 1.5
seed = 5
observables = ["sigma_x", "sigma_z"]
epsilon_sweep = [1.0, 0.5]

[system]
omega = 2.0
Omega = 0.5

[bath]
g = 0.8
omega_c = 5.5
"""


def scenario(tmp_path, method="jump", extra="", body=None):
    path = tmp_path / f"{method}.toml"
    path.write_text(extra + (body if body is not None else SMALL.format(method=method)))
    return str(path)


def test_bundled_fig2_scenario():
    scen = load_scenario("fig2")
    cfg = scen.config
    assert (cfg.M, cfg.dt, cfg.t_end, cfg.epsilon, cfg.m) == (3000, 1e-3, 5.0, 0.5, 2)
    assert (cfg.system.omega, cfg.system.Omega) == (2.0, 0.5)
    assert (cfg.bath.g, cfg.bath.Gamma, cfg.bath.omega_c) == (0.8, 1.0, 5.5)
    np.testing.assert_allclose(cfg.initial_state, np.array([1, 1]) / np.sqrt(2))
    assert scen.epsilon_sweep == [1.0, 0.5, 0.25, 0.125]


@pytest.mark.parametrize("method", ["jump", "diffusion", "qsd", "master"])
def test_run_writes_schema(tmp_path, method, capsys):
    out = tmp_path / "out.csv"
    assert main(["run", "--scenario", scenario(tmp_path, method), "--out", str(out), "--quiet"]) == 0
    cols = read_csv(out)
    assert list(cols) == ["t", "sigma_x", "sigma_x_se", "sigma_z", "sigma_z_se", "trace", "trace_se",
                          "flagged_fraction"]
    assert cols["t"].size == 151
    assert cols["sigma_x"][0] == pytest.approx(1.0)


def test_rerun_byte_identical_and_workers(tmp_path):
    path = scenario(tmp_path, "jump")
    outs = []
    for i, w in enumerate(["1", "1", "4"]):
        out = tmp_path / f"o{i}.csv"
        assert main(["run", "--scenario", path, "--out", str(out), "--workers", w, "--quiet"]) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1] == outs[2]
    out = tmp_path / "other.csv"
    main(["run", "--scenario", path, "--out", str(out), "--seed", "6", "--quiet"])
    assert out.read_bytes() != outs[0]


def test_raw_and_dump(tmp_path):
    path = scenario(tmp_path, "diffusion")
    raw, dump = tmp_path / "raw.csv", tmp_path / "dump.csv"
    assert main(["run", "--scenario", path, "--out", str(tmp_path / "o.csv"), "--raw-out", str(raw),
                 "--dump", str(dump), "--quiet"]) == 0
    assert list(read_csv(raw)) == ["t", "sigma_x_raw", "sigma_x_raw_se", "sigma_z_raw", "sigma_z_raw_se"]
    d = read_csv(dump)
    assert list(d) == ["t", "trajectory", "sigma_x", "sigma_z"]
    assert d["t"].size == 151 * 40


def test_rates_command(tmp_path, capsys):
    out = tmp_path / "rates.csv"
    assert main(["rates", "--scenario", "fig2", "--out", str(out)]) == 0
    assert "negative decay-rate windows" in capsys.readouterr().out
    cols = read_csv(out)
    assert list(cols) == ["t", "re_F", "im_F", "gamma_plus", "gamma_minus"]
    assert cols["gamma_minus"].max() > 0


def test_compare_command(tmp_path, capsys):
    out = tmp_path / "cmp.csv"
    assert main(["compare", "--scenario", scenario(tmp_path, "qsd"), "--out", str(out), "--quiet"]) == 0
    text = capsys.readouterr().out
    assert "max |deviation|" in text
    cols = read_csv(out)
    assert {"sigma_x_master", "sigma_x_deviation", "sigma_x_deviation_over_se"} <= set(cols)
    np.testing.assert_allclose(cols["sigma_x_deviation"], cols["sigma_x"] - cols["sigma_x_master"],
                               atol=1e-15)


def test_sweep_command(tmp_path, capsys):
    out = tmp_path / "sweep.csv"
    assert main(["sweep-eps", "--scenario", scenario(tmp_path, "jump"), "--out", str(out), "--quiet",
                 "--eps", "1", "0.5"]) == 0
    cols = read_csv(out)
    np.testing.assert_array_equal(cols["epsilon"], [1.0, 0.5])
    assert "eps 1 -> 0.5" in capsys.readouterr().out


@pytest.mark.parametrize("body,code", [
    (SMALL.format(method="jump").replace("M = 40", "M = 40\nbogus = 1"), 2),
    (SMALL.format(method="euler"), 2),
    (SMALL.format(method="jump").replace("omega_c = 5.5", ""), 2),
    (SMALL.format(method="jump").replace("dt = 0.01", "dt = -1"), 2),
    (SMALL.format(method="jump").replace("M = 40", "M = 1"), 2),
    ("method = [", 2),
    (SMALL.format(method="jump").replace("g = 0.8", "g = 100.0").replace("omega_c = 5.5", "omega_c = 2.0"), 4),
])
def test_exit_codes(tmp_path, body, code, capsys):
    path = scenario(tmp_path, body=body)
    assert main(["run", "--scenario", path, "--out", str(tmp_path / "o.csv"), "--quiet"]) == code
    assert "error:" in capsys.readouterr().err


def test_error_messages_name_the_field(tmp_path, capsys):
    body = SMALL.format(method="jump").replace('method = "jump"', "")
    main(["run", "--scenario", scenario(tmp_path, body=body), "--out", str(tmp_path / "o.csv")])
    assert "method: missing required key" in capsys.readouterr().err


def test_io_errors_exit_3(tmp_path):
    assert main(["run", "--scenario", str(tmp_path / "missing.toml"), "--out", "x.csv"]) == 3
    bad_out = tmp_path / "no" / "such" / "dir" / "o.csv"
    assert main(["run", "--scenario", scenario(tmp_path), "--out", str(bad_out), "--quiet"]) == 3


def test_console_entry_point(tmp_path):
    out = tmp_path / "r.csv"
    res = subprocess.run([sys.executable, "-m", "nmunravel.cli", "rates", "--scenario", "fig2", "--out", str(out)],
                         capture_output=True, text=True)
    assert res.returncode == 0, res.stderr
    assert out.exists()
