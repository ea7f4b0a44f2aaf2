import csv

import pytest

from holowdm import cli
from holowdm.experiments import (EXPERIMENTS, ExperimentError, ExperimentSpec, default_grid,
                                 hardware_noise, run)
from holowdm.scenario import Scenario


def _read(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def test_default_grids_cover_axes():
    for exp in EXPERIMENTS:
        var, full = default_grid(exp)
        _, fast = default_grid(exp, fast=True)
        if var is not None:
            assert len(full) >= 3 and len(fast) <= len(full)
    assert len(default_grid("se-vs-lr")[1]) >= 20
    assert len(default_grid("nbar")[1]) >= 20


def test_spec_validation():
    with pytest.raises(ValueError, match="unknown experiment"):
        ExperimentSpec("fig99")
    with pytest.raises(ValueError, match="strictly increasing"):
        ExperimentSpec("coupling", grid=(2.0, 1.0))


def test_run_is_deterministic(tmp_path):
    spec = ExperimentSpec("nbar", grid=(5.0, 10.0), out_dir=tmp_path / "a")
    first = run(spec)
    second = run(ExperimentSpec("nbar", grid=(5.0, 10.0), out_dir=tmp_path / "b"))
    assert first.csv_path.read_bytes() == second.csv_path.read_bytes()
    rows = _read(first.csv_path)
    assert rows[0] == ["Lr_m", "d_m", "nbar", "paraxial_dof"]
    assert [r[2] for r in rows[1:]] == ["3", "17", "1", "9"]
    manifest = first.manifest_path.read_text()
    for key in ("version", "wall_time_s", "quadrature_rel_tol", "scenario.Ls", "status = ok"):
        assert key in manifest


def test_failure_writes_marker(tmp_path):
    # The first point is shorter than the source and fails validation.
    spec = ExperimentSpec("coupling", scenario=Scenario(N=5), variable="Lr", grid=(0.1, 0.5),
                          out_dir=tmp_path)
    with pytest.raises(ExperimentError, match="Lr=0.1"):
        run(spec)
    rows = _read(tmp_path / "coupling.csv")
    assert rows[-1][0] == "FAILED"
    assert "status = FAILED" in (tmp_path / "coupling.manifest.txt").read_text()


def test_power_check_rows(tmp_path):
    res = run(ExperimentSpec("power-check", draws=5, out_dir=tmp_path))
    assert len(res.rows) == 5
    assert all(r["ratio"] <= 1 for r in res.rows)


def test_hardware_noise_reference():
    sc = Scenario()
    R = [[2.0, 0.0], [0.0, 4.0]]
    assert hardware_noise(R, sc, 10, "absolute") == pytest.approx(10 * sc.noise_emi)
    assert hardware_noise(R, sc, 10, "chain") == pytest.approx(30 * sc.noise_emi)


def test_cli_runs_and_reports(tmp_path, capsys):
    cfg = tmp_path / "link.cfg"
    cfg.write_text("Ls = 0.2\nLr = 1\nd = 5\nlambda = 0.01\n")
    assert cli.main(["nbar", "--config", str(cfg), "--grid", "5,10", "--out", str(tmp_path)]) == 0
    assert "nbar.csv" in capsys.readouterr().out
    assert cli.main(["coupling", "--set", "N=5", "--set", "Lr=0.1", "--grid", "0.1",
                     "--out", str(tmp_path)]) == 1
    assert "error" in capsys.readouterr().err
    assert cli.main(["green", "--set", "bogus=1", "--out", str(tmp_path)]) == 1


@pytest.mark.parametrize("kind, name, header", [
    ("dump-green", "green.csv", ["domain", "z_or_kz", "re", "im", "mag_db"]),
    ("dump-coupling", "coupling.csv", ["n", "m", "re", "im"]),
    ("dump-emi", "emi_covariance.csv", ["n", "m", "re", "im"]),
])
def test_dump_commands(tmp_path, kind, name, header):
    assert cli.main([kind, "--set", "N=5", "--out", str(tmp_path)]) == 0
    rows = _read(tmp_path / name)
    assert rows[0] == header
    assert len(rows) > 1
