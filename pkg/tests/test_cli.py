import json

import numpy as np
import pytest

from overcrane import cli, export
from overcrane.config import bundled_text
from overcrane.synthesis import REF_GAIN4, REF_GAIN6


def run(capsys, *argv):
    code = cli.main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def write_config(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


CONSTANT = bundled_text("constant")
VARYING = bundled_text("varying")


def test_synthesize_varying(tmp_path, capsys):
    code, out, err = run(capsys, "synthesize", "bundled:varying", "--out", tmp_path)
    assert code == 0 and err == ""
    assert "controllable: yes (rank 6 of 6)" in out
    _, gain, gain_tilde = export.read_gain(tmp_path / "gain.json")
    assert np.array_equal(np.round(gain, 4), REF_GAIN6)
    assert np.array_equal(gain_tilde, gain)
    for row in REF_GAIN6:
        assert "  ".join(f"{v:10.4f}" for v in row) in out


def test_synthesize_constant(tmp_path, capsys):
    code, out, _ = run(capsys, "synthesize", "bundled:constant", "--out", tmp_path)
    assert code == 0
    assert "99.1882" in out and "-2.1061" in out
    _, gain, _ = export.read_gain(tmp_path / "gain.json")
    assert np.abs(gain - REF_GAIN4).max() <= 1e-3


def test_positive_pole_exit_2(tmp_path, capsys):
    cfg = write_config(tmp_path, "bad.ini", CONSTANT.replace("-0.35", "0.35"))
    code, out, err = run(capsys, "synthesize", cfg, "--out", tmp_path)
    assert code == cli.EXIT_CONFIG
    assert "0.35" in err and out == ""


def test_unknown_key_exit_2(tmp_path, capsys):
    cfg = write_config(tmp_path, "bad.ini", CONSTANT + "\nbogus = 1\n")
    code, _, err = run(capsys, "simulate", cfg, "--out", tmp_path)
    assert code == 2 and "bogus" in err and "line" in err


def test_uncontrollable_exit_3(tmp_path, capsys):
    cfg = write_config(tmp_path, "u.ini", CONSTANT.replace("rope_length = 3", "rope_length = 1e-9"))
    code, _, err = run(capsys, "synthesize", cfg, "--out", tmp_path)
    assert code == cli.EXIT_UNCONTROLLABLE and "controllable" in err


def test_wrong_gain_exit_4(tmp_path, capsys):
    gain = export.write_gain(tmp_path / "g.json", "varying6", 2 * REF_GAIN6, 2 * REF_GAIN6)
    code, _, err = run(capsys, "simulate", "bundled:varying", "--gain", gain, "--horizon", 1, "--out", tmp_path)
    assert code == cli.EXIT_PLACEMENT and "does not place" in err


def test_divergence_exit_5(tmp_path, capsys):
    code, _, err = run(capsys, "simulate", "bundled:constant", "--step", 20, "--horizon", 200, "--out", tmp_path)
    assert code == cli.EXIT_INTEGRATION and "integration failed" in err


def test_simulate_varying_with_playback(tmp_path, capsys):
    code, out, _ = run(capsys, "simulate", "bundled:varying", "--playback", "--out", tmp_path)
    assert code == 0
    report = json.loads((tmp_path / "simulation_report.json").read_text())
    assert report["playback_max_deviation"] <= 1e-6
    assert report["settle_time"] is not None and "settle time:" in out
    tr = export.read_trajectory_csv(tmp_path / "trajectory.csv")
    assert tr.states.shape[1] == 6
    assert np.linalg.norm(tr.states[-1] - [10, 3, 0, 0, 0, 0]) < 1e-2
    # report numbers are reproducible from the CSV
    assert tr.states[-1].tolist() == report["final_state"]
    assert np.abs(tr.states[:, 2]).max() == report["peak_sway"]
    prof = export.read_profile_csv(tmp_path / "forces.csv")
    assert np.array_equal(prof.forces, tr.forces)
    assert (tmp_path / "plot.gp").exists()


def test_simulate_constant(tmp_path, capsys):
    code, _, _ = run(capsys, "simulate", "bundled:constant", "--export-forces", "--out", tmp_path)
    assert code == 0
    header = (tmp_path / "trajectory.csv").read_text().splitlines()[0]
    assert header == "t,x1,x3,x4,x6,u1,Fz"
    report = json.loads((tmp_path / "simulation_report.json").read_text())
    assert report["settle_time"] is not None
    assert (tmp_path / "forces.csv").read_text().startswith("t,Fz\n")


def test_simulate_adaptive(tmp_path, capsys):
    code, out, _ = run(capsys, "simulate", "bundled:constant", "--adaptive", "--step", 0.1, "--out", tmp_path)
    assert code == 0
    report = json.loads((tmp_path / "simulation_report.json").read_text())
    assert report["final_time"] == pytest.approx(100.0)
    assert report["steps"] < 10000


def test_analyze_varying(tmp_path, capsys):
    code, out, _ = run(capsys, "analyze", "bundled:varying", "--out", tmp_path)
    assert code == 0
    report = json.loads((tmp_path / "stability_report.json").read_text())
    assert report["radius"] > 0 and report["margin"] > 0
    assert "certified radius" in out and "P eigenvalues" in out


def test_analyze_linear_hook(tmp_path, capsys):
    text = VARYING.replace("r_max = 1", "r_max = 2.5") + "dynamics = linear\n"
    cfg = write_config(tmp_path, "lin.ini", text)
    code, _, _ = run(capsys, "analyze", cfg, "--out", tmp_path)
    assert code == 0
    report = json.loads((tmp_path / "stability_report.json").read_text())
    assert report["radius"] == 2.5 and report["sigma"] == 0.0


def test_analyze_unstable_gain_exit_6(tmp_path, capsys):
    gain = export.write_gain(tmp_path / "g.json", "varying6", -REF_GAIN6, -REF_GAIN6)
    code, _, err = run(capsys, "analyze", "bundled:varying", "--gain", gain, "--out", tmp_path)
    assert code == cli.EXIT_UNCERTIFIED and "NotHurwitz" in err


def test_gain_file_model_mismatch(tmp_path, capsys):
    gain = export.write_gain(tmp_path / "g.json", "constant4", REF_GAIN4, REF_GAIN4)
    code, _, err = run(capsys, "analyze", "bundled:varying", "--gain", gain, "--out", tmp_path)
    assert code == 2 and "constant4" in err


def test_compare_bundled(tmp_path, capsys):
    code, out, _ = run(capsys, "compare", "bundled:varying", "bundled:constant", "--out", tmp_path)
    assert code == 0
    report = json.loads((tmp_path / "comparison_report.json").read_text())
    assert report["ratio"] <= 0.7
    assert report["peak_sway_a"] > report["peak_sway_b"]
    lines = (tmp_path / "comparison.csv").read_text().splitlines()
    assert lines[0] == "scenario,t,z,theta,z_dot,theta_dot"
    assert {line.split(",")[0] for line in lines[1:]} == {"A", "B"}


def test_compare_self_and_mismatch(tmp_path, capsys):
    code, out, _ = run(capsys, "compare", "bundled:constant", "bundled:constant", "--out", tmp_path)
    assert code == 0 and "ratio 1.0000" in out
    other = write_config(tmp_path, "far.ini", CONSTANT.replace("target = 10,", "target = 12,"))
    code, _, err = run(capsys, "compare", "bundled:constant", other, "--out", tmp_path)
    assert code == cli.EXIT_INCOMPATIBLE and "incompatible" in err


def test_parser_requires_command(capsys):
    with pytest.raises(SystemExit):
        cli.main([])
