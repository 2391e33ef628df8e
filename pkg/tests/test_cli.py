import logging
import xml.etree.ElementTree as ET

import numpy as np
import pytest

import main
from config import settings
from models import ZeroNorm
from services import analytic_states, commands, scenarios, validation
from utils import csv_io
from utils.config_file import load_scenario_config

SVG_ROOT = "{http://www.w3.org/2000/svg}svg"


@pytest.fixture
def small_run(config_dir, tmp_path):
    """argv for a fast two-slit run into tmp_path/run."""

    def argv(out="run", *extra):
        return ["run", "--config", str(config_dir / "two_slit.cfg"), "--out", str(tmp_path / out),
                "--set", "n_trajectories=30", "--set", "grid_nx=12", "--set", "grid_ny=12",
                "--set", "t_final=4", *extra]

    return argv


def test_run_writes_run_directory(small_run, tmp_path):
    assert main.main(small_run()) == 0
    run_dir = tmp_path / "run"
    assert sorted(p.name for p in run_dir.iterdir()) == ["q_surface.csv", "summary.txt",
                                                         "trajectories.csv"]
    ensemble = csv_io.read_trajectories(run_dir / "trajectories.csv")
    assert ensemble.size == 30
    assert csv_io.read_summary(run_dir / "summary.txt")["n_trajectories"] == 30
    assert csv_io.read_scalar_field(run_dir / "q_surface.csv").grid.shape == (12, 12)
    assert not [p for p in tmp_path.iterdir() if p.name.startswith(".run.")]


def test_two_body_run_dumps_wavefields(config_dir, tmp_path):
    argv = ["run", "--config", str(config_dir / "two_body.cfg"), "--out", str(tmp_path / "run"),
            "--set", "n_trajectories=20", "--set", "grid_nx=12", "--set", "grid_ny=10",
            "--set", "t_final=0.5"]
    assert main.main(argv) == 0
    run_dir = tmp_path / "run"
    names = {p.name for p in run_dir.iterdir()}
    assert {"wavefield.csv", "wavefield_product.csv"} <= names
    config = load_scenario_config(config_dir / "two_body.cfg", ["grid_nx=12", "grid_ny=10"])
    state = scenarios.two_body_states(config)["antisymmetric"]
    dumped = csv_io.read_wavefield(run_dir / "wavefield.csv")
    surface = csv_io.read_scalar_field(run_dir / "q_surface.csv")
    assert dumped.grid.shape == surface.grid.shape == (12, 10)
    expected = analytic_states.to_wavefield(state, dumped.grid, config.probe_time)
    np.testing.assert_allclose(dumped.psi, expected.psi, rtol=1e-10, atol=1e-12)


def test_run_is_deterministic(small_run, tmp_path):
    assert main.main(small_run("a", "--set", "seed=7")) == 0
    assert main.main(small_run("b", "--set", "seed=7")) == 0
    for name in ("trajectories.csv", "q_surface.csv", "summary.txt"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_run_replaces_previous_run(small_run, tmp_path):
    assert main.main(small_run()) == 0
    assert main.main(small_run("run", "--set", "n_trajectories=5")) == 0
    assert csv_io.read_trajectories(tmp_path / "run" / "trajectories.csv").size == 5


def test_run_refuses_foreign_directory(small_run, tmp_path):
    (tmp_path / "run").mkdir()
    (tmp_path / "run" / "notes.txt").write_text("keep me")
    assert main.main(small_run()) == 2
    assert (tmp_path / "run" / "notes.txt").read_text() == "keep me"


def test_missing_key_exits_2(config_dir, tmp_path, caplog):
    text = (config_dir / "two_slit.cfg").read_text()
    broken = "\n".join(line for line in text.splitlines() if not line.startswith("sigma0"))
    path = tmp_path / "broken.cfg"
    path.write_text(broken)
    with caplog.at_level(logging.ERROR):
        assert main.main(["run", "--config", str(path), "--out", str(tmp_path / "out")]) == 2
    assert "sigma0" in caplog.text
    assert not (tmp_path / "out").exists()


def test_unknown_override_exits_2(small_run, caplog):
    with caplog.at_level(logging.ERROR):
        assert main.main(small_run("run", "--set", "colour=blue")) == 2
    assert "colour" in caplog.text


def test_numerical_failure_exits_3(small_run, tmp_path, monkeypatch, caplog):
    def explode(config, base_dir=None):
        raise ZeroNorm("sum |psi|^2 dx dy = 0")

    monkeypatch.setattr(scenarios, "run_scenario", explode)
    with caplog.at_level(logging.ERROR):
        assert main.main(small_run()) == 3
    assert "nonzero norm" in caplog.text
    assert not (tmp_path / "run").exists()


def test_plot_writes_valid_svg(small_run, tmp_path):
    assert main.main(small_run()) == 0
    run_dir = tmp_path / "run"
    assert main.main(["plot", str(run_dir)]) == 0
    for name in ("trajectories.svg", "q_surface.svg"):
        root = ET.parse(run_dir / name).getroot()
        assert root.tag == SVG_ROOT
    first = (run_dir / "trajectories.svg").read_bytes()
    assert main.main(["plot", "--out", str(run_dir)]) == 0
    assert (run_dir / "trajectories.svg").read_bytes() == first


def test_plot_of_empty_dump(tmp_path):
    run_dir = tmp_path / "empty"
    run_dir.mkdir()
    (run_dir / "trajectories.csv").write_text("traj_id,t,x1,x2,v1,v2,q,ke,flag\n")
    (run_dir / "q_surface.csv").write_text(
        "i,j,x,y,value,masked\n" + "".join(f"{i},{j},{i},{j},0,1\n" for i in range(8) for j in range(8)))
    assert main.main(["plot", str(run_dir)]) == 0
    root = ET.parse(run_dir / "trajectories.svg").getroot()
    assert root.tag == SVG_ROOT


def test_plot_without_dumps_exits_2(tmp_path):
    assert main.main(["plot", str(tmp_path)]) == 2


def test_validate_rejects_unknown_group():
    assert main.main(["validate", "--only", "astrology"]) == 2


def test_validate_only_symplectic(capsys):
    assert main.main(["validate", "--only", "symplectic"]) == 0
    table = capsys.readouterr().out
    rows = [line for line in table.splitlines() if " PASS " in line or " FAIL " in line]
    assert rows and all(line.startswith("symplectic") for line in rows)
    assert "0 failed" in table


@pytest.mark.slow
def test_validate_detects_velocity_bias(monkeypatch, capsys):
    monkeypatch.setattr(settings, "velocity_bias", 1.01)
    assert main.main(["validate", "--only", "equivariance"]) == 1
    rows = [line for line in capsys.readouterr().out.splitlines() if " FAIL " in line]
    assert any("moving_packet_ks" in line for line in rows)


@pytest.mark.slow
def test_validate_passes_every_check(capsys):
    assert main.main(["validate"]) == 0
    last = capsys.readouterr().out.strip().splitlines()[-1]
    assert last == f"{len(validation.checks())} passed, 0 failed"


def test_command_dispatch_table():
    assert set(commands.HANDLERS) == {"run", "validate", "plot"}


def test_unknown_log_level_exits_2(monkeypatch):
    monkeypatch.setattr(settings, "log_level", "chatty")
    assert main.main(["validate", "--only", "symplectic"]) == 2
