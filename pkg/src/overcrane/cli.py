"""Command-line interface.

Exit codes: 0 success, 2 configuration error, 3 uncontrollable pair,
4 placement verification failure, 5 integration failure, 6 no certified
radius, 7 incompatible scenarios.
"""

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import export, stability, synthesis
from .config import load_config
from .errors import (
    ConfigError,
    IncompatibleScenarios,
    NonFiniteState,
    NotControllable,
    NotHurwitz,
    StepUnderflow,
)
from .simulate import compare_scenarios, design, integrate_closed_loop, integrate_open_loop, settle_time

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_UNCONTROLLABLE = 3
EXIT_PLACEMENT = 4
EXIT_INTEGRATION = 5
EXIT_UNCERTIFIED = 6
EXIT_INCOMPATIBLE = 7


class CliFailure(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


def _matrix_lines(name, k):
    k = np.atleast_2d(k)
    rows = ["  [" + "  ".join(f"{v:10.4f}" for v in row) + "]" for row in k]
    return [f"{name} ="] + rows


def _load(args):
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        raise CliFailure(EXIT_CONFIG, f"config error: {exc}") from None
    sc = cfg.scenario
    overrides = {}
    if getattr(args, "step", None) is not None:
        overrides["step"] = args.step
    if getattr(args, "horizon", None) is not None:
        overrides["horizon"] = args.horizon
    if getattr(args, "adaptive", False):
        overrides["adaptive"] = True
    if overrides:
        try:
            sc = replace(sc, **overrides)
        except ValueError as exc:
            raise CliFailure(EXIT_CONFIG, f"config error: {exc}") from None
    return cfg, sc


def _design(sc):
    try:
        d = design(sc)
    except NotControllable as exc:
        raise CliFailure(EXIT_UNCONTROLLABLE, f"not controllable: {exc}") from None
    return d


def _gain(args, sc, d):
    """Gain acting on the model coordinates: from ``--gain`` or synthesized."""
    if getattr(args, "gain", None):
        try:
            model, _, k_tilde = export.read_gain(args.gain)
        except (OSError, ValueError, KeyError) as exc:
            raise CliFailure(EXIT_CONFIG, f"cannot read gain file: {exc}") from None
        if model != sc.model:
            raise CliFailure(EXIT_CONFIG, f"gain file is for {model}, config is {sc.model}")
        return k_tilde
    return d.gain_tilde


def _out_dir(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_report(out, name, report):
    path = out / name
    path.write_text(json.dumps(report, indent=2, default=float) + "\n", encoding="utf-8")
    return path


def cmd_synthesize(args):
    cfg, sc = _load(args)
    d = _design(sc)
    lines = [
        f"model: {sc.model}",
        f"controllable: {'yes' if d.controllability else 'no'} (rank {d.controllability.rank} of {d.controllability.n})",
        *_matrix_lines("K", d.gain),
    ]
    if sc.model == "varying6":
        lines += _matrix_lines("K~", d.gain_tilde)
    rep = d.placement
    lines.append("closed-loop eigenvalues (requested -> obtained, |det(lambda I - A_cl)|):")
    for pole, eig, res in zip(sorted(sc.poles), rep.matched[np.argsort(sc.poles)], rep.det_residuals[np.argsort(sc.poles)]):
        lines.append(f"  {pole:+.6f} -> {eig.real:+.12f}{eig.imag:+.1e}j   {res:.2e}")
    lines.append(f"placement check: {'pass' if rep.passed else 'FAIL'} (max mismatch {rep.max_mismatch:.2e}, tol {rep.tolerance:g})")
    out = _out_dir(args)
    gain_path = export.write_gain(out / "gain.json", sc.model, d.gain, d.gain_tilde)
    lines.append(f"gain file: {gain_path}")
    print("\n".join(lines))
    if not rep.passed:
        raise CliFailure(EXIT_PLACEMENT, f"placement verification failed (max mismatch {rep.max_mismatch:.3e})")
    report = {
        "model": sc.model,
        "controllable": bool(d.controllability),
        "rank": d.controllability.rank,
        "gain": d.gain.tolist(),
        "gain_tilde": d.gain_tilde.tolist(),
        "max_eigenvalue_mismatch": rep.max_mismatch,
        "gain_file": str(gain_path),
    }
    _write_report(out, "synthesis_report.json", report)
    return EXIT_OK


def _run_closed_loop(sc, k_tilde):
    try:
        return integrate_closed_loop(sc, k_tilde)
    except ValueError as exc:
        raise CliFailure(EXIT_PLACEMENT, str(exc)) from None
    except (NonFiniteState, StepUnderflow) as exc:
        raise CliFailure(EXIT_INTEGRATION, f"integration failed: {exc}") from None


def cmd_simulate(args):
    cfg, sc = _load(args)
    d = _design(sc)
    k_tilde = _gain(args, sc, d)
    tr = _run_closed_loop(sc, k_tilde)
    plant = sc.plant()
    out = _out_dir(args)
    traj_path = export.write_trajectory_csv(tr, out / "trajectory.csv")
    plot_path = export.write_gnuplot_script(out / "plot.gp", traj_path.name, sc.model)
    settle = settle_time(tr, sc.target, sc.settle_fraction, plant.settle_floors)
    report = {
        "model": sc.model,
        "controllable": bool(d.controllability),
        "rank": d.controllability.rank,
        "gain_tilde": np.asarray(k_tilde).tolist(),
        "steps": len(tr.times) - 1,
        "final_time": float(tr.times[-1]),
        "final_state": tr.states[-1].tolist(),
        "final_error": float(np.linalg.norm(tr.states[-1] - np.asarray(sc.target))),
        "settle_time": settle,
        "peak_sway": float(np.abs(tr.states[:, plant.theta_index]).max()),
        "trajectory_csv": str(traj_path),
        "plot_script": str(plot_path),
    }
    if args.export_forces or args.playback:
        prof_path = export.write_profile_csv(tr.profile(), out / "forces.csv")
        report["forces_csv"] = str(prof_path)
    if args.playback:
        profile = export.read_profile_csv(prof_path)
        try:
            replay = integrate_open_loop(sc, profile)
        except (NonFiniteState, StepUnderflow) as exc:
            raise CliFailure(EXIT_INTEGRATION, f"playback failed: {exc}") from None
        if replay.states.shape != tr.states.shape:
            raise CliFailure(EXIT_INTEGRATION, "playback grid differs from the closed-loop grid")
        report["playback_max_deviation"] = float(np.abs(replay.states - tr.states).max())
    _write_report(out, "simulation_report.json", report)
    print(f"model: {sc.model}")
    print(f"final error |x~(T) - x~_e| = {report['final_error']:.3e} at T = {report['final_time']:g} s")
    print("settle time: " + ("never" if settle is None else f"{settle:.2f} s"))
    print(f"peak sway: {report['peak_sway']:.4f} rad")
    if args.playback:
        print(f"playback max deviation: {report['playback_max_deviation']:.3e}")
    print(f"trajectory: {traj_path}")
    print(f"plot script: {plot_path}")
    return EXIT_OK


def cmd_analyze(args):
    cfg, sc = _load(args)
    d = _design(sc)
    k_tilde = _gain(args, sc, d)
    plant = sc.plant()
    a, b = plant.linearize()
    a_cl = a - b @ k_tilde
    st = cfg.stability
    seed = st.seed if args.seed is None else args.seed
    if st.dynamics == "linear":
        def rhs(x):
            return a_cl @ x
    else:
        def rhs(x):
            return plant.rhs(x, -k_tilde @ x)
    q = st.q_scale * np.eye(plant.n_states)
    try:
        result = stability.roa_search(a_cl, q, rhs, st.r_max, st.samples, seed)
    except NotHurwitz as exc:
        raise CliFailure(EXIT_UNCERTIFIED, f"NotHurwitz: {exc}") from None
    cert = result.certificate
    print(f"model: {sc.model} ({st.dynamics} dynamics, Q = {st.q_scale:g} I, seed {seed})")
    print(f"P eigenvalues: min {cert.lambda_min_p:.6g}, max {cert.lambda_max_p:.6g}")
    print("sigma estimates (radius, sigma, margin):")
    for r, sigma, margin in sorted(result.history):
        print(f"  {r:.6e}  {sigma:.6e}  {margin:+.6e}")
    report = {
        "model": sc.model,
        "dynamics": st.dynamics,
        "lambda_min_p": cert.lambda_min_p,
        "lambda_max_p": cert.lambda_max_p,
        "lambda_min_q": cert.lambda_min_q,
        "sigma": cert.sigma,
        "margin": cert.margin,
        "radius": result.radius,
        "history": [list(h) for h in result.history],
    }
    _write_report(_out_dir(args), "stability_report.json", report)
    if result.radius <= 0:
        print("no radius certifies")
        raise CliFailure(EXIT_UNCERTIFIED, "no tested radius gives a positive margin")
    print(f"certified radius: {result.radius:.6e} (sigma {cert.sigma:.6e}, margin {cert.margin:.6e})")
    return EXIT_OK


def cmd_compare(args):
    cfg_a = load_or_fail(args.config_a)
    cfg_b = load_or_fail(args.config_b)
    try:
        rep = compare_scenarios(cfg_a.scenario, cfg_b.scenario)
    except IncompatibleScenarios as exc:
        raise CliFailure(EXIT_INCOMPATIBLE, f"incompatible scenarios: {exc}") from None
    except NotControllable as exc:
        raise CliFailure(EXIT_UNCONTROLLABLE, f"not controllable: {exc}") from None
    except (NonFiniteState, StepUnderflow) as exc:
        raise CliFailure(EXIT_INTEGRATION, f"integration failed: {exc}") from None

    def fmt(v, unit=" s"):
        return "never" if v is None else f"{v:.2f}{unit}"

    def fmt_ratio(v):
        return "n/a" if v is None else f"{v:.4f}"

    print(f"A: {args.config_a} ({cfg_a.scenario.model})")
    print(f"B: {args.config_b} ({cfg_b.scenario.model})")
    print(f"settle time, shared channels: A {fmt(rep.settle_a)}, B {fmt(rep.settle_b)}, ratio {fmt_ratio(rep.ratio)}")
    print(f"settle time, all channels:    A {fmt(rep.settle_all_a)}, B {fmt(rep.settle_all_b)}, ratio {fmt_ratio(rep.ratio_all)}")
    print(f"settle time, trolley only:    A {fmt(rep.trolley_settle_a)}, B {fmt(rep.trolley_settle_b)}, ratio {fmt_ratio(rep.trolley_ratio)}")
    print(f"peak sway: A {rep.peak_sway_a:.4f} rad, B {rep.peak_sway_b:.4f} rad")

    out = _out_dir(args)
    combined = out / "comparison.csv"
    with open(combined, "w", encoding="utf-8", newline="") as fh:
        fh.write("scenario,t,z,theta,z_dot,theta_dot\n")
        for label, tr, sc in (("A", rep.trajectory_a, cfg_a.scenario), ("B", rep.trajectory_b, cfg_b.scenario)):
            chans = list(sc.plant().common_channels)
            for t, x in zip(tr.times, tr.states[:, chans]):
                fh.write(label + "," + ",".join(format(float(v), ".17g") for v in (t, *x)) + "\n")
    report = {
        "settle_a": rep.settle_a, "settle_b": rep.settle_b, "ratio": rep.ratio,
        "settle_all_a": rep.settle_all_a, "settle_all_b": rep.settle_all_b, "ratio_all": rep.ratio_all,
        "trolley_settle_a": rep.trolley_settle_a, "trolley_settle_b": rep.trolley_settle_b,
        "trolley_ratio": rep.trolley_ratio,
        "peak_sway_a": rep.peak_sway_a, "peak_sway_b": rep.peak_sway_b,
        "combined_csv": str(combined),
    }
    _write_report(out, "comparison_report.json", report)
    print(f"combined csv: {combined}")
    return EXIT_OK


def load_or_fail(path):
    try:
        return load_config(path)
    except ConfigError as exc:
        raise CliFailure(EXIT_CONFIG, f"config error in {path}: {exc}") from None


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default="out", help="output directory (default: ./out)")
    common.add_argument("--step", type=float, help="RK4 step / initial adaptive step [s]")
    common.add_argument("--horizon", type=float, help="simulation horizon [s]")
    common.add_argument("--adaptive", action="store_true", help="use the adaptive 4(5) integrator")
    common.add_argument("--seed", type=int, help="seed for stability sampling")

    parser = argparse.ArgumentParser(prog="overcrane", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synthesize", parents=[common], help="controllability check and gain synthesis")
    p.add_argument("config")
    p.set_defaults(func=cmd_synthesize)

    p = sub.add_parser("simulate", parents=[common], help="closed-loop simulation and force export")
    p.add_argument("config")
    p.add_argument("--gain", help="gain file to use instead of synthesizing")
    p.add_argument("--export-forces", action="store_true", help="write forces.csv")
    p.add_argument("--playback", action="store_true", help="replay the exported forces open loop")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analyze", parents=[common], help="Lyapunov stability certificate")
    p.add_argument("config")
    p.add_argument("--gain", help="gain file to use instead of synthesizing")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("compare", parents=[common], help="compare two scenarios")
    p.add_argument("config_a")
    p.add_argument("config_b")
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliFailure as exc:
        print(f"overcrane: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
