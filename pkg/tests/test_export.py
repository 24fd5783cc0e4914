import numpy as np
import pytest

from overcrane import export
from overcrane.simulate import ForceProfile, Trajectory


def _traj(model, n_rows=5):
    n, m = {"varying6": (6, 3), "constant4": (4, 1)}[model]
    rng = np.random.default_rng(0)
    t = np.linspace(0, 1, n_rows)
    return Trajectory(model, t, rng.standard_normal((n_rows, n)) / 3, rng.standard_normal((n_rows, m)),
                      rng.standard_normal((n_rows, m)) * 1e5)


@pytest.mark.parametrize("model", ["varying6", "constant4"])
def test_trajectory_round_trip_is_exact(tmp_path, model):
    tr = _traj(model)
    path = export.write_trajectory_csv(tr, tmp_path / "t.csv")
    back = export.read_trajectory_csv(path)
    assert back.model == model
    for name in ("times", "states", "controls", "forces"):
        assert np.array_equal(getattr(back, name), getattr(tr, name))


def test_trajectory_csv_format(tmp_path):
    path = export.write_trajectory_csv(_traj("constant4", 2), tmp_path / "t.csv")
    raw = path.read_bytes()
    assert b"\r" not in raw
    lines = raw.decode().splitlines()
    assert lines[0] == "t,x1,x3,x4,x6,u1,Fz"
    assert len(lines) == 3
    assert all(len(line.split(",")) == 7 for line in lines)
    assert export.TRAJECTORY_COLUMNS["varying6"] == (
        "t", "x1", "x2", "x3", "x4", "x5", "x6", "u1", "u2", "u3", "Fz", "Fl", "Ftheta")


def test_profile_round_trip(tmp_path):
    prof = ForceProfile("varying6", np.array([0.0, 0.5, 1.0]), np.arange(9.0).reshape(3, 3) / 7)
    back = export.read_profile_csv(export.write_profile_csv(prof, tmp_path / "f.csv"))
    assert back.model == "varying6"
    assert np.array_equal(back.forces, prof.forces)
    assert (tmp_path / "f.csv").read_text().splitlines()[0] == "t,Fz,Fl,Ftheta"


def test_bad_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("a,b\n1,2\n")
    with pytest.raises(ValueError, match="unexpected header"):
        export.read_profile_csv(path)


def test_gain_round_trip(tmp_path):
    k = np.arange(18.0).reshape(3, 6)
    path = export.write_gain(tmp_path / "g.json", "varying6", k, -k)
    model, gain, gain_tilde = export.read_gain(path)
    assert model == "varying6"
    assert np.array_equal(gain, k) and np.array_equal(gain_tilde, -k)


@pytest.mark.parametrize("model, n_panels", [("varying6", 9), ("constant4", 5)])
def test_gnuplot_script_has_one_panel_per_series(tmp_path, model, n_panels):
    path = export.write_gnuplot_script(tmp_path / "plot.gp", "trajectory.csv", model)
    text = path.read_text()
    assert text.count("plot 'trajectory.csv'") == n_panels
    assert text.count("\nset multiplot") == 2
