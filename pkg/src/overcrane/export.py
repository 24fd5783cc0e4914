"""CSV, gain-file and plot-script output."""

import csv
import json
from pathlib import Path

import numpy as np

from .simulate import ForceProfile, Trajectory

TRAJECTORY_COLUMNS = {
    "varying6": ("t", "x1", "x2", "x3", "x4", "x5", "x6", "u1", "u2", "u3", "Fz", "Fl", "Ftheta"),
    "constant4": ("t", "x1", "x3", "x4", "x6", "u1", "Fz"),
}
PROFILE_COLUMNS = {
    "varying6": ("t", "Fz", "Fl", "Ftheta"),
    "constant4": ("t", "Fz"),
}
_SIZES = {"varying6": (6, 3), "constant4": (4, 1)}


def _fmt(v):
    return format(float(v), ".17g")


def _write_rows(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _read_rows(path, expected_headers):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        model = next((m for m, cols in expected_headers.items() if cols == header), None)
        if model is None:
            raise ValueError(f"{path}: unexpected header {','.join(header)}")
        data = np.array([[float(v) for v in row] for row in reader if row], dtype=float)
    return model, data.reshape(-1, len(header))


def write_trajectory_csv(tr, path):
    header = TRAJECTORY_COLUMNS[tr.model]
    rows = np.column_stack([tr.times, tr.states, tr.controls, tr.forces])
    _write_rows(path, header, rows)
    return Path(path)


def read_trajectory_csv(path):
    model, data = _read_rows(path, TRAJECTORY_COLUMNS)
    n, m = _SIZES[model]
    return Trajectory(
        model, data[:, 0], data[:, 1:1 + n], data[:, 1 + n:1 + n + m], data[:, 1 + n + m:],
    )


def write_profile_csv(profile, path):
    _write_rows(path, PROFILE_COLUMNS[profile.model], np.column_stack([profile.times, profile.forces]))
    return Path(path)


def read_profile_csv(path):
    model, data = _read_rows(path, PROFILE_COLUMNS)
    return ForceProfile(model, data[:, 0], data[:, 1:])


def write_gain(path, model, gain, gain_tilde):
    payload = {
        "model": model,
        "gain": np.asarray(gain).tolist(),
        "gain_tilde": np.asarray(gain_tilde).tolist(),
    }
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    return Path(path)


def read_gain(path):
    """Return ``(model, gain, gain_tilde)`` from a gain file."""
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    gain = np.array(payload["gain"], dtype=float)
    gain_tilde = np.array(payload.get("gain_tilde", payload["gain"]), dtype=float)
    return payload["model"], np.atleast_2d(gain), np.atleast_2d(gain_tilde)


_LABELS = {
    "x1": "z~ [m]", "x2": "l~ [m]", "x3": "theta~ [rad]", "x4": "z~' [m/s]",
    "x5": "l~' [m/s]", "x6": "theta~' [rad/s]",
    "Fz": "F~_z [kN]", "Fl": "F~_l [kN]", "Ftheta": "F~_theta [kN m]",
}


def write_gnuplot_script(path, csv_name, model):
    """Gnuplot script with one panel per state and one per force.

    Run it from the output directory with ``gnuplot plot.gp``.
    """
    cols = TRAJECTORY_COLUMNS[model]
    n, m = _SIZES[model]
    states = cols[1:1 + n]
    forces = cols[1 + n + m:]
    stem = Path(csv_name).stem

    def panel_block(names, layout):
        out = [f"set multiplot layout {layout}"]
        for name in names:
            col = cols.index(name) + 1
            out.append(f"set title '{_LABELS[name]}'")
            out.append(f"plot '{csv_name}' using 1:{col} with lines notitle")
        out.append("unset multiplot")
        return out

    lines = [
        "# generated by overcrane",
        "set datafile separator ','",
        "set key autotitle columnhead",
        "set xlabel 't [s]'",
        "set grid",
        "set terminal pngcairo size 1000,1200",
        f"set output '{stem}_states.png'",
        *panel_block(states, f"{(n + 1) // 2},2"),
        "set terminal pngcairo size 1000,800",
        f"set output '{stem}_forces.png'",
        *panel_block(forces, f"{(len(forces) + 1) // 2},2" if len(forces) > 1 else "1,1"),
        "",
    ]
    Path(path).write_text("\n".join(lines), encoding="utf-8")
    return Path(path)
