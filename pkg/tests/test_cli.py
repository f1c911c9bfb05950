import json
from pathlib import Path

import numpy as np
import pytest

from fracpn.cli import main
from fracpn.io import read_field_csv, write_json


def run_cli(*argv):
    return main(list(argv))


def test_particles_canonical_collision(tmp_path):
    out = tmp_path / "p"
    code = run_cli("particles", "--positions", "0,1", "--orient", "+,-",
                   "--s", "0.5", "--gamma", str(2 * np.pi),
                   "--t-end", "1.0", "--out", str(out))
    assert code == 0
    coll = json.loads((out / "collision.json").read_text())
    assert coll["collision"]["T_c"] == pytest.approx(1.0 / (8.0 * np.pi), abs=1e-6)
    traj = (out / "trajectory.csv").read_text().splitlines()
    assert traj[0] == "t,x1,x2"
    assert (out / "manifest.json").exists()


def test_run_config_and_determinism(tmp_path):
    cfg = {"experiment": "particles", "positions": [0.0, 1.0],
           "orientations": [1, -1], "s": 0.5, "gamma": 2 * np.pi,
           "t_end": 1.0}
    cfg_path = tmp_path / "collide-two.json"
    write_json(cfg, cfg_path)
    out1, out2 = tmp_path / "r1", tmp_path / "r2"
    assert run_cli("run", str(cfg_path), "--out", str(out1)) == 0
    assert run_cli("run", str(cfg_path), "--out", str(out2)) == 0
    assert (out1 / "trajectory.csv").read_bytes() == (out2 / "trajectory.csv").read_bytes()
    assert (out1 / "collision.json").read_bytes() == (out2 / "collision.json").read_bytes()


def test_validation_exit_code(tmp_path):
    code = run_cli("heteroclinic", "--s", "1.5", "--out", str(tmp_path / "x"))
    assert code == 2
    cfg_path = tmp_path / "bad.json"
    write_json({"experiment": "nope"}, cfg_path)
    assert run_cli("run", str(cfg_path)) == 2
    assert run_cli("run", str(tmp_path / "missing.json")) == 2


def test_heteroclinic_outputs(tmp_path):
    out = tmp_path / "het"
    code = run_cli("heteroclinic", "--s", "0.5", "--L", "100",
                   "--n", str(2**12 + 1), "--out", str(out))
    assert code == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["gamma_norm_sq"] == pytest.approx(2 * np.pi, abs=1e-3)
    field = read_field_csv(out / "profile.csv")
    assert field.far.l_plus == 1.0
    x = field.grid.nodes
    assert np.max(np.abs(field.values - (0.5 + np.arctan(x) / np.pi))) < 1e-3


def test_cell_cli(tmp_path):
    out = tmp_path / "cell"
    code = run_cli("cell", "--s", "0.5", "--p", "0", "--L", str(1 / np.pi),
                   "--tau-end", "2000", "--out", str(out))
    assert code == 0
    rows = (out / "hbar.csv").read_text().splitlines()
    assert rows[0] == "p,L,lambda,spread"
    lam = float(rows[1].split(",")[2])
    assert lam == pytest.approx(np.sqrt(3) / (2 * np.pi), abs=2e-3)


def test_meanfield_cli(tmp_path):
    init = tmp_path / "ramp.json"
    write_json({"kind": "tanh-ramp", "L": 6.0, "n": 513, "width": 1.0}, init)
    out = tmp_path / "mf"
    code = run_cli("meanfield", "--init", str(init), "--t-end", "0.01",
                   "--gamma", str(2 * np.pi), "--out", str(out))
    assert code == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["monotone_preserved"]
    assert summary["mass_drift"] < 1e-6


def test_parabolic_cli(tmp_path):
    cfg = tmp_path / "run.json"
    write_json({"positions": [0.0], "orientations": [1], "s": 0.5,
                "eps": 0.1, "t_end": 0.2, "dt_out": 0.05, "pad": 6.0,
                "L_het": 100.0, "n_het": 2**12 + 1}, cfg)
    out = tmp_path / "pb"
    code = run_cli("parabolic", "--config", str(cfg), "--out", str(out))
    assert code == 0
    assert (out / "cores.csv").exists()
    assert (out / "snapshot_0000.csv").exists()
    summary = json.loads((out / "summary.json").read_text())
    assert summary["classification"] is not None


def test_orowan_cli_single_eps(tmp_path):
    out = tmp_path / "or"
    code = run_cli("orowan", "--s", "0.5", "--p0", "1", "--L0", "1",
                   "--eps", "0.4", "--gamma", str(2 * np.pi), "--out", str(out))
    assert code == 0
    rows = (out / "orowan.csv").read_text().splitlines()
    assert rows[0] == "eps,lambda,ratio"


def test_multibump_cli(tmp_path):
    out = tmp_path / "mb"
    code = run_cli("multibump", "--levels", "0,1", "--s", "0.75",
                   "--amp", "0.3", "--period", "10", "--out", str(out))
    assert code == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["detachment_margin"] > 0
    assert summary["residual"] < 1e-5


def test_unknown_suite_exits_2(tmp_path, capsys):
    with pytest.raises(SystemExit):
        run_cli("suite", "nope", "--out", str(tmp_path))
