"""Closed-loop and feed-forward simulation of the crane.

Scenarios are stated in the shifted coordinates ``x~`` in which the target
equilibrium is ``target``; the model equations are evaluated at
``x = Phi^-1(x~)`` and the feedback is ``u~ = -K~ Phi^-1(x~)``.
"""

import bisect
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.interpolate import CubicSpline

from . import synthesis
from .errors import IncompatibleScenarios, NonFiniteState, StepUnderflow
from .model import CraneParams, make_model

MODEL_NAMES = ("varying6", "constant4")


@dataclass(frozen=True)
class Scenario:
    model: str
    params: CraneParams
    start: tuple
    target: tuple
    poles: tuple
    assignment: synthesis.ChannelAssignment = None
    horizon: float = 100.0
    step: float = 0.01
    adaptive: bool = False
    rtol: float = 1e-8
    atol: float = 1e-8
    settle_fraction: float = 0.02

    def __post_init__(self):
        if self.model not in MODEL_NAMES:
            raise ValueError(f"model must be one of {MODEL_NAMES}, got {self.model!r}")
        n = 6 if self.model == "varying6" else 4
        object.__setattr__(self, "start", tuple(float(v) for v in self.start))
        object.__setattr__(self, "target", tuple(float(v) for v in self.target))
        object.__setattr__(self, "poles", tuple(float(v) for v in self.poles))
        if len(self.start) != n or len(self.target) != n:
            raise ValueError(f"{self.model} needs {n}-component start and target")
        if not all(math.isfinite(v) for v in self.start + self.target):
            raise ValueError("start and target must be finite")
        if any(v != 0.0 for v in self.target[1 if n == 4 else 2:]):
            raise ValueError("target must be an equilibrium (zero sway and velocities)")
        synthesis.validate_poles(self.poles, n)
        if self.assignment is not None:
            if n != 6:
                raise ValueError("channel assignment only applies to the varying-rope model")
            if sorted(self.assignment.poles()) != sorted(self.poles):
                raise ValueError("channel assignment does not cover the pole set")
        if not self.horizon > 0 or not self.step > 0:
            raise ValueError("horizon and step must be positive")
        if not 0 < self.settle_fraction < 1:
            raise ValueError("settle_fraction must lie in (0, 1)")

    @property
    def n_states(self):
        return 6 if self.model == "varying6" else 4

    def plant(self):
        return make_model(self.model, self.params)


def reference_scenario(model="varying6", **overrides):
    """The two reference experiments: varying or constant rope length."""
    if model == "varying6":
        sc = Scenario(
            "varying6", CraneParams(), (0, 3, 0, 0, -0.5, 0), (10, 3, 0, 0, 0, 0),
            synthesis.REF_POLES6,
        )
    else:
        sc = Scenario("constant4", CraneParams(), (0, 0, 0, 0), (10, 0, 0, 0), synthesis.REF_POLES4)
    return replace(sc, **overrides)


@dataclass
class Design:
    a: np.ndarray
    b: np.ndarray
    gain: np.ndarray
    gain_tilde: np.ndarray
    controllability: synthesis.ControllabilityReport
    placement: synthesis.PlacementReport


def design(sc, tol=1e-6):
    """Linearize, check controllability and place the scenario's poles.

    Raises :class:`~overcrane.errors.NotControllable` for an uncontrollable pair.
    """
    plant = sc.plant()
    a, b = plant.linearize()
    ctrb = synthesis.is_controllable(a, b)
    if not ctrb:
        raise synthesis.NotControllable(f"controllability rank {ctrb.rank} < {ctrb.n}")
    if sc.model == "varying6":
        assignment = sc.assignment or synthesis.ChannelAssignment.default(sc.poles)
        k = synthesis.place_decoupled(sc.poles, assignment, a, b)
        k_tilde = synthesis.gain_transform(k)
    else:
        k = synthesis.ackermann(a, b, sc.poles)
        k_tilde = k.copy()
    report = synthesis.verify_placement(a, b, k, sc.poles, tol)
    return Design(a, b, k, k_tilde, ctrb, report)


@dataclass
class Trajectory:
    """Samples of a run; ``states`` are in the shifted coordinates."""

    model: str
    times: np.ndarray
    states: np.ndarray
    controls: np.ndarray
    forces: np.ndarray
    target: tuple = ()
    derivatives: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        n = len(self.times)
        if not (len(self.states) == len(self.controls) == len(self.forces) == n):
            raise ValueError("trajectory columns differ in length")
        if n > 1 and np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")

    def profile(self):
        return ForceProfile(self.model, self.times.copy(), self.forces.copy())


@dataclass
class ForceProfile:
    model: str
    times: np.ndarray
    forces: np.ndarray

    def resample(self, stride):
        idx = np.arange(0, len(self.times), stride)
        if idx[-1] != len(self.times) - 1:
            idx = np.append(idx, len(self.times) - 1)
        return ForceProfile(self.model, self.times[idx], self.forces[idx])

    def interpolator(self, kind="cubic"):
        if kind == "cubic":
            return _SplineEval(CubicSpline(self.times, self.forces, axis=0))
        if kind == "linear":
            t, f = self.times, self.forces
            return lambda s: np.array([np.interp(s, t, f[:, j]) for j in range(f.shape[1])])
        raise ValueError(f"unknown interpolation {kind!r}")


class _SplineEval:
    # Horner evaluation of a CubicSpline; far cheaper than __call__ for scalar t.

    def __init__(self, spline):
        self.knots = spline.x.tolist()
        self.coef = np.ascontiguousarray(np.moveaxis(spline.c, 1, 0))  # (interval, 4, dim)
        self.last = len(self.knots) - 2

    def __call__(self, t):
        i = min(max(bisect.bisect_right(self.knots, t) - 1, 0), self.last)
        dt = t - self.knots[i]
        c = self.coef[i]
        return ((c[0] * dt + c[1]) * dt + c[2]) * dt + c[3]


# --- integrators -----------------------------------------------------------

def rk4_step(f, t, x, h):
    k1 = f(t, x)
    k2 = f(t + 0.5 * h, x + 0.5 * h * k1)
    k3 = f(t + 0.5 * h, x + 0.5 * h * k2)
    k4 = f(t + h, x + h * k3)
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate_fixed(f, x0, horizon, h, on_step=None):
    """Classical RK4 on a uniform grid ``t_i = i h`` (last step clipped to ``horizon``)."""
    n = int(math.ceil(horizon / h - 1e-9))
    times = [0.0]
    states = [np.asarray(x0, dtype=float)]
    x = states[0]
    for i in range(n):
        t = i * h
        t_next = min((i + 1) * h, horizon)
        try:
            x = rk4_step(f, t, x, t_next - t)
        except OverflowError:
            raise NonFiniteState(f"state overflowed near t={t_next:g}") from None
        if not np.all(np.isfinite(x)):
            raise NonFiniteState(f"state diverged at t={t_next:g}")
        if on_step is not None:
            on_step(x)
        times.append(t_next)
        states.append(x)
    return np.array(times), np.array(states)


# Dormand-Prince 5(4) tableau
_DP_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_DP_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_DP_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_DP_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])


def integrate_adaptive(f, x0, horizon, h0, rtol=1e-8, atol=1e-8, on_step=None):
    """Embedded Dormand-Prince 5(4) with standard step-size control."""
    t = 0.0
    x = np.asarray(x0, dtype=float)
    h = min(h0, horizon)
    times = [t]
    states = [x]
    k = [None] * 7
    k[0] = f(t, x)
    while t < horizon:
        if h < 1e-12:
            raise StepUnderflow(f"step size {h:.3e} at t={t:g}")
        h = min(h, horizon - t)
        try:
            for i in range(1, 7):
                xi = x + h * sum(a * kj for a, kj in zip(_DP_A[i], k[:i]))
                k[i] = f(t + _DP_C[i] * h, xi)
        except (OverflowError, NonFiniteState):
            h *= 0.25
            continue
        x5 = x + h * sum(b * kj for b, kj in zip(_DP_B5, k))
        x4 = x + h * sum(b * kj for b, kj in zip(_DP_B4, k))
        if not np.all(np.isfinite(x5)):
            h *= 0.25
            continue
        scale = atol + rtol * np.maximum(np.abs(x), np.abs(x5))
        err = math.sqrt(float(np.mean(((x5 - x4) / scale) ** 2)))
        if err <= 1.0:
            t = t + h
            x = x5
            k[0] = k[6]
            if on_step is not None:
                on_step(x)
            times.append(t)
            states.append(x)
        factor = 5.0 if err == 0.0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
        h *= factor
    return np.array(times), np.array(states)


def _integrate(sc, f, x0, on_step=None, step=None):
    h = sc.step if step is None else step
    if sc.adaptive:
        return integrate_adaptive(f, x0, sc.horizon, h, sc.rtol, sc.atol, on_step)
    return integrate_fixed(f, x0, sc.horizon, h, on_step)


# --- scenario runs -----------------------------------------------------------

def _shift(plant, target):
    # Phi^-1 is affine: x = J (x~ - Phi(0)); validate the target once
    signs = np.diag(plant.phi_jacobian)
    offset = plant.phi(np.zeros(plant.n_states), target)
    return lambda xt: signs * (xt - offset)


def closed_loop_field(sc, k_tilde):
    """Vector field ``x~' = J G(Phi^-1(x~), -K~ Phi^-1(x~))`` and its control law."""
    plant = sc.plant()
    k_tilde = np.atleast_2d(np.asarray(k_tilde, dtype=float))
    to_model = _shift(plant, sc.target)
    signs = np.diag(plant.phi_jacobian)

    def control(xt):
        return -k_tilde @ to_model(xt)

    def f(t, xt):
        x = to_model(xt)
        return signs * plant.rhs(x, -k_tilde @ x)

    return plant, f, control


def integrate_closed_loop(sc, k_tilde, check=True, tol=1e-6):
    """Simulate the scenario under ``u~ = -K~ Phi^-1(x~)``.

    Parameters
    ----------
    sc : Scenario
    k_tilde : array_like
        Gain acting on the model coordinates (``3 x 6`` or ``1 x 4``).
    check : bool
        Verify first that ``k_tilde`` places the scenario's poles.
    """
    plant, f, control = closed_loop_field(sc, k_tilde)
    if check:
        a, b = plant.linearize()
        report = synthesis.verify_placement(a, b, k_tilde, sc.poles, tol)
        if not report.passed:
            raise ValueError(f"gain does not place the scenario poles (max mismatch {report.max_mismatch:.3e})")
    target = np.asarray(sc.target)
    times, states = _integrate(
        sc, f, np.asarray(sc.start), on_step=lambda xt: plant.check_domain(plant.phi_inverse(xt, target))
    )
    controls = np.array([control(xt) for xt in states])
    model_states = np.array([plant.phi_inverse(xt, target) for xt in states])
    forces = np.array([plant.forces(x, u) for x, u in zip(model_states, controls)])
    derivs = np.array([plant.rhs(x, u) for x, u in zip(model_states, controls)])
    return Trajectory(sc.model, times, states, controls, forces, sc.target, derivs)


def controls_from_forces(plant, x, forces):
    if plant.n_inputs == 1:
        return np.array([forces[0]])
    p = plant.params
    return np.array([
        forces[0] / (p.M + p.m),
        (forces[1] + p.g * p.m * math.cos(x[2])) / p.m,
        forces[2] / p.I,
    ])


def integrate_open_loop(sc, profile, interpolation="cubic"):
    """Drive the plant with a recorded force profile, no state feedback."""
    plant = sc.plant()
    if profile.times[0] > 1e-12 or profile.times[-1] < sc.horizon - 1e-9:
        raise ValueError("force profile does not cover [0, horizon]")
    forces_at = profile.interpolator(interpolation)
    target = np.asarray(sc.target)
    to_model = _shift(plant, sc.target)
    signs = np.diag(plant.phi_jacobian)

    def f(t, xt):
        return signs * plant.rhs_forces(to_model(xt), forces_at(t))

    times, states = _integrate(sc, f, np.asarray(sc.start))
    model_states = np.array([plant.phi_inverse(xt, target) for xt in states])
    forces = np.array([np.asarray(forces_at(t), dtype=float) for t in times])
    controls = np.array([controls_from_forces(plant, x, fr) for x, fr in zip(model_states, forces)])
    derivs = np.array([plant.rhs_forces(x, fr) for x, fr in zip(model_states, forces)])
    return Trajectory(sc.model, times, states, controls, forces, sc.target, derivs)


# --- metrics -------------------------------------------------------------------

def settle_time(tr, target, fraction=0.02, floors=None, channels=None):
    """First sample time after which every selected channel stays in its band.

    Channel ``i`` must satisfy ``|x_i - target_i| <= fraction * scale_i`` with
    ``scale_i = max(|x_i(0) - target_i|, floor_i)``. Returns ``None`` if the
    band is left again at the final sample.
    """
    if not 0 < fraction < 1:
        raise ValueError("fraction must lie in (0, 1)")
    states = np.asarray(tr.states, dtype=float)
    target = np.asarray(target, dtype=float)
    if floors is None:
        floors = make_model(tr.model, CraneParams()).settle_floors
    floors = np.asarray(floors, dtype=float)
    if channels is not None:
        channels = list(channels)
        states, target, floors = states[:, channels], target[channels], floors[channels]
    dev = np.abs(states - target)
    scale = np.maximum(dev[0], floors)
    inside = np.all(dev <= fraction * scale, axis=1)
    outside = np.flatnonzero(~inside)
    if outside.size == 0:
        return float(tr.times[0])
    last = outside[-1]
    if last == len(inside) - 1:
        return None
    return float(tr.times[last + 1])


@dataclass
class ComparisonReport:
    settle_a: float
    settle_b: float
    ratio: float
    settle_all_a: float
    settle_all_b: float
    ratio_all: float
    trolley_settle_a: float
    trolley_settle_b: float
    trolley_ratio: float
    peak_sway_a: float
    peak_sway_b: float
    trajectory_a: Trajectory = field(repr=False, default=None)
    trajectory_b: Trajectory = field(repr=False, default=None)


def _ratio(a, b):
    if a is None or b is None or b == 0:
        return None
    return a / b


def compare_scenarios(a, b, gain_a=None, gain_b=None):
    """Settle times and peak sway of two scenarios moving the trolley the same way.

    ``ratio`` uses the channels both models have (trolley position and
    velocity, sway angle and rate); the all-channel and trolley-only ratios
    are reported alongside.
    """
    pa, pb = a.plant(), b.plant()
    za = (a.start[pa.z_index], a.target[pa.z_index])
    zb = (b.start[pb.z_index], b.target[pb.z_index])
    if za != zb:
        raise IncompatibleScenarios(f"trolley start/target differ: {za} vs {zb}")

    runs = []
    for sc, plant, gain in ((a, pa, gain_a), (b, pb, gain_b)):
        k = design(sc).gain_tilde if gain is None else gain
        tr = integrate_closed_loop(sc, k)
        common = settle_time(tr, sc.target, sc.settle_fraction, plant.settle_floors, plant.common_channels)
        full = settle_time(tr, sc.target, sc.settle_fraction, plant.settle_floors)
        trolley = settle_time(tr, sc.target, sc.settle_fraction, plant.settle_floors, [plant.z_index])
        peak = float(np.abs(tr.states[:, plant.theta_index]).max())
        runs.append((tr, common, full, trolley, peak))
    (ta, ca, fa, za_, sa), (tb, cb, fb, zb_, sb) = runs
    return ComparisonReport(
        ca, cb, _ratio(ca, cb), fa, fb, _ratio(fa, fb), za_, zb_, _ratio(za_, zb_), sa, sb, ta, tb,
    )
