"""Nonlinear 2-D overhead crane model.

Units follow the parameter list used throughout the package: masses in
10^3 kg, so forces come out in kN (and kN*m for the sway torque).

State vectors are plain arrays:

* varying rope, 6 states: ``(z, l, theta, z_dot, l_dot, theta_dot)``
* constant rope, 4 states: ``(z, theta, z_dot, theta_dot)``

The varying-rope model is written in the transformed control variables
``u = (u1, u2, u3)`` with ``F_z = (M+m) u1``, ``F_l = m u2 - g m cos(theta)``
and ``F_theta = I u3``. The constant-rope model takes the trolley force
directly (``u1 = F_z``).
"""

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import numkit
from .errors import NonFiniteState


@dataclass(frozen=True)
class CraneParams:
    """Physical constants of the crane.

    ``rope_length`` is only used by the constant-rope model.
    """

    trolley_mass: float = 0.2
    payload_mass: float = 10.0
    payload_inertia: float = 4.0
    gravity: float = 9.81
    rope_length: float = 3.0

    def __post_init__(self):
        for name in ("trolley_mass", "payload_mass", "payload_inertia", "gravity", "rope_length"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be a positive finite number, got {value!r}")

    @property
    def M(self):
        return self.trolley_mass

    @property
    def m(self):
        return self.payload_mass

    @property
    def I(self):  # noqa: E743
        return self.payload_inertia

    @property
    def g(self):
        return self.gravity


REF_PARAMS = CraneParams()


class Forces(NamedTuple):
    Fz: float
    Fl: float
    Ftheta: float


def _floats(values, what):
    vals = [float(v) for v in values]
    if not all(map(math.isfinite, vals)):
        raise NonFiniteState(f"non-finite {what}: {vals}")
    return vals


def _check_finite(values, what):
    return np.array(_floats(values, what))


def denominator6(x2, x3, p):
    """Common denominator ``M m l^2 + I m cos^2(theta) + I M`` (always >= I M > 0)."""
    c = math.cos(x3)
    return p.M * p.m * x2 * x2 + p.I * p.m * c * c + p.I * p.M


def deriv6(s, u, p):
    """Right-hand side of the 6-state model in closed form.

    Parameters
    ----------
    s : array_like, shape (6,)
        ``(z, l, theta, z_dot, l_dot, theta_dot)``
    u : array_like, shape (3,)
        Transformed control variables ``(u1, u2, u3)``.
    p : CraneParams
    """
    x1, x2, x3, x4, x5, x6 = _floats(s, "state")
    u1, u2, u3 = _floats(u, "control")
    M, m, I, g = p.M, p.m, p.I, p.g
    sn, cs = math.sin(x3), math.cos(x3)
    s2 = math.sin(2.0 * x3)
    D = M * m * x2 ** 2 + I * m * cs ** 2 + I * M

    g4 = -(
        cs * (I * m * u3 * x2 + 2.0 * I * m * x5 * x6)
        + sn * (m ** 2 * u2 * x2 ** 2 + I * m * u2 - g * m ** 2 * x2 ** 2 * cs)
        - I * u1 * (M + m)
        - m * (M + m) * u1 * x2 ** 2
    ) / D
    g5 = (
        I * M * u2 + m ** 2 * u2 * x2 ** 2 + I * m * u2 + I * M * x2 * x6 ** 2
        - g * m ** 2 * x2 ** 2 * cs - I * M * u1 * sn - m ** 2 * u1 * x2 ** 2 * sn
        + M * m * u2 * x2 ** 2
        - I * m * u1 * sn + g * m ** 2 * x2 ** 2 * cs ** 3 - m ** 2 * u2 * x2 ** 2 * cs ** 2
        + M * m * x2 ** 3 * x6 ** 2 + 0.5 * I * m * u3 * x2 * s2 + I * m * x5 * x6 * s2
        - M * m * u1 * x2 ** 2 * sn + I * m * x2 * x6 ** 2 * cs ** 2
    ) / D
    g6 = (
        I * M * u3
        - x2 * (2.0 * M * m * x5 * x6 + m * (M + m) * u1 * cs)
        + x2 * sn * (m * cs * (m * u2 - g * m * cs) - M * g * m)
        + I * m * u3 * cs ** 2
    ) / D
    return _check_finite([x4, x5, x6, g4, g5, g6], "derivative")


def mass_matrix6(s, p):
    x2, x3 = float(s[1]), float(s[2])
    sn, cs = math.sin(x3), math.cos(x3)
    m = p.m
    return np.array([
        [p.M + m, m * sn, m * x2 * cs],
        [m * sn, m, 0.0],
        [m * x2 * cs, 0.0, m * x2 * x2 + p.I],
    ])


def deriv_mass_matrix(s, f, p):
    """6-state derivative from the physical forces via the 3x3 mass-matrix solve."""
    x1, x2, x3, x4, x5, x6 = _floats(s, "state")
    Fz, Fl, Ft = _floats(f, "forces")
    m, g = p.m, p.g
    sn, cs = math.sin(x3), math.cos(x3)
    rhs = np.array([
        Fz + m * x2 * x6 ** 2 * sn - 2.0 * m * x5 * x6 * cs,
        Fl + m * x2 * x6 ** 2 + g * m * cs,
        Ft - 2.0 * m * x2 * x5 * x6 - g * m * x2 * sn,
    ])
    acc = numkit.solve_linear(mass_matrix6(s, p), rhs)
    return _check_finite([x4, x5, x6, *acc], "derivative")


def deriv4(s, u1, p):
    """Right-hand side of the constant-rope model; ``u1`` is the trolley force."""
    x1, x3, x4, x6 = _floats(s, "state")
    (u1,) = _floats([u1], "control")
    M, m, I, g, l = p.M, p.m, p.I, p.g, p.rope_length
    sn, cs = math.sin(x3), math.cos(x3)
    D = l ** 2 * m ** 2 * sn ** 2 + M * l ** 2 * m + I * m + I * M
    g4 = (
        I * u1 + sn * (l ** 3 * m ** 2 * x6 ** 2 + I * l * m * x6 ** 2)
        + l ** 2 * m * u1 + 0.5 * g * l ** 2 * m ** 2 * math.sin(2.0 * x3)
    ) / D
    g6 = -(
        cs * (l ** 2 * m ** 2 * x6 ** 2 * sn + l * m * u1)
        + l * m * (M * g + g * m) * sn
    ) / D
    return _check_finite([x4, x6, g4, g6], "derivative")


def deriv4_mass_matrix(s, u1, p):
    """Constant-rope derivative via the 2x2 mass-matrix solve (test oracle)."""
    x1, x3, x4, x6 = (float(v) for v in s)
    M, m, I, g, l = p.M, p.m, p.I, p.g, p.rope_length
    sn, cs = math.sin(x3), math.cos(x3)
    mass = np.array([[M + m, l * m * cs], [l * m * cs, m * l * l + I]])
    rhs = np.array([float(u1) + l * m * x6 ** 2 * sn, -g * l * m * sn])
    acc = numkit.solve_linear(mass, rhs)
    return _check_finite([x4, x6, *acc], "derivative")


def forces_from_u(s, u, p):
    """Physical forces produced by the transformed controls at state ``s``."""
    u1, u2, u3 = (float(v) for v in u)
    return Forces(
        (p.M + p.m) * u1,
        p.m * u2 - p.g * p.m * math.cos(float(s[2])),
        p.I * u3,
    )


def mirror_forces(f, theta, p):
    """Forces in the counterpart frame of the hoist flip.

    ``F_z`` and ``F_theta`` are unchanged; the rope force satisfies
    ``F_l + F_l' = -2 g m cos(theta)``.
    """
    return Forces(f.Fz, -2.0 * p.g * p.m * math.cos(theta) - f.Fl, f.Ftheta)


def _check_target6(target):
    t = np.asarray(target, dtype=float)
    if t.shape != (6,):
        raise ValueError("target must have 6 components")
    if np.any(t[2:] != 0.0):
        raise ValueError("target must have zero sway and zero velocities")
    return t


def transform_phi(x, target):
    """Map model coordinates to the shifted coordinates around ``target``."""
    t = _check_target6(target)
    x = np.asarray(x, dtype=float)
    return np.array([t[0] + x[0], t[1] - x[1], x[2], x[3], -x[4], x[5]])


def transform_phi_inverse(xt, target):
    t = _check_target6(target)
    xt = np.asarray(xt, dtype=float)
    return np.array([xt[0] - t[0], t[1] - xt[1], xt[2], xt[3], -xt[4], xt[5]])


# Jacobian of both maps (they share it, and it is its own inverse).
PHI_JACOBIAN6 = np.diag([1.0, -1.0, 1.0, 1.0, -1.0, 1.0])


def _check_target4(target):
    t = np.asarray(target, dtype=float)
    if t.shape != (4,):
        raise ValueError("target must have 4 components")
    if np.any(t[1:] != 0.0):
        raise ValueError("target must have zero sway and zero velocities")
    return t


def transform_phi4(x, target):
    t = _check_target4(target)
    x = np.array(x, dtype=float)
    x[0] += t[0]
    return x


def transform_phi4_inverse(xt, target):
    t = _check_target4(target)
    x = np.array(xt, dtype=float)
    x[0] -= t[0]
    return x


def linearize6(p):
    """Jacobians ``(A, B)`` of :func:`deriv6` at the origin.

    At zero rope length every gravity and coupling term vanishes, leaving the
    pure double-integrator chain; the result does not depend on ``p``.
    """
    a = np.zeros((6, 6))
    a[0, 3] = a[1, 4] = a[2, 5] = 1.0
    b = np.zeros((6, 3))
    b[3, 0] = b[4, 1] = b[5, 2] = 1.0
    return a, b


def linearize4(p):
    M, m, I, g, l = p.M, p.m, p.I, p.g, p.rope_length
    den = M * m * l ** 2 + I * (M + m)
    a = np.zeros((4, 4))
    a[0, 2] = a[1, 3] = 1.0
    a[2, 1] = g * l ** 2 * m ** 2 / den
    a[3, 1] = -g * l * m * (M + m) / den
    b = np.array([
        [0.0],
        [0.0],
        [(m * l ** 2 + I) / (I * m + M * (m * l ** 2 + I))],
        [-l * m / den],
    ])
    return a, b


def energy(s, p):
    """Kinetic and potential energy ``(KE, PE)`` for a 6- or 4-state vector."""
    s = np.asarray(s, dtype=float)
    if s.shape == (6,):
        _, l, th, zd, ld, thd = s
    elif s.shape == (4,):
        _, th, zd, thd = s
        l, ld = p.rope_length, 0.0
    else:
        raise ValueError("state must have 6 or 4 components")
    M, m, I, g = p.M, p.m, p.I, p.g
    ke = (
        0.5 * (M + m) * zd ** 2 + 0.5 * m * ld ** 2 + 0.5 * m * (l * thd) ** 2
        + m * zd * (ld * math.sin(th) + l * thd * math.cos(th)) + 0.5 * I * thd ** 2
    )
    pe = -g * l * m * math.cos(th)
    return float(ke), float(pe)


def horizontal_momentum(s, p):
    """``(M+m) z_dot + m l theta_dot cos(theta)`` for the constant-rope state."""
    _, th, zd, thd = (float(v) for v in s)
    return (p.M + p.m) * zd + p.m * p.rope_length * thd * math.cos(th)


def lagrange_residual(s, sdot, f, p):
    """Left minus right side of the three Euler-Lagrange equations.

    ``sdot[3:]`` supplies the accelerations ``(z_dd, l_dd, theta_dd)``.
    """
    _, l, th, zd, ld, thd = (float(v) for v in s)
    zdd, ldd, thdd = (float(v) for v in np.asarray(sdot)[3:])
    Fz, Fl, Ft = (float(v) for v in f)
    M, m, I, g = p.M, p.m, p.I, p.g
    sn, cs = math.sin(th), math.cos(th)
    r_z = (M + m) * zdd + m * ldd * sn + 2 * m * ld * thd * cs + l * m * thdd * cs - l * m * thd ** 2 * sn - Fz
    r_l = m * zdd * sn + m * ldd - l * m * thd ** 2 - g * m * cs - Fl
    r_t = l * m * zdd * cs + (m * l * l + I) * thdd + 2 * l * m * ld * thd + g * l * m * sn - Ft
    return np.array([r_z, r_l, r_t])


class VaryingRopeCrane:
    """6-state crane with trolley, hoist and sway actuation."""

    name = "varying6"
    n_states = 6
    n_inputs = 3
    state_labels = ("x1", "x2", "x3", "x4", "x5", "x6")
    control_labels = ("u1", "u2", "u3")
    force_labels = ("Fz", "Fl", "Ftheta")
    # settling-band floors per channel: m, m, rad, m/s, m/s, rad/s
    settle_floors = (0.1, 0.1, 0.01, 0.05, 0.05, 0.01)
    z_index = 0
    theta_index = 2
    common_channels = (0, 2, 3, 5)

    def __init__(self, params):
        self.params = params
        self._warned = False

    def rhs(self, x, u):
        return deriv6(x, u, self.params)

    def rhs_forces(self, x, f):
        return deriv_mass_matrix(x, f, self.params)

    def forces(self, x, u):
        return np.array(forces_from_u(x, u, self.params))

    def linearize(self):
        return linearize6(self.params)

    def phi(self, x, target):
        return transform_phi(x, target)

    def phi_inverse(self, xt, target):
        return transform_phi_inverse(xt, target)

    @property
    def phi_jacobian(self):
        return PHI_JACOBIAN6

    def check_domain(self, x):
        if x[1] < 0.0 and not self._warned:
            self._warned = True
            warnings.warn("rope length state x2 became negative", RuntimeWarning, stacklevel=3)


class ConstantRopeCrane:
    """4-state crane with fixed rope length and trolley force only."""

    name = "constant4"
    n_states = 4
    n_inputs = 1
    state_labels = ("x1", "x3", "x4", "x6")
    control_labels = ("u1",)
    force_labels = ("Fz",)
    settle_floors = (0.1, 0.01, 0.05, 0.01)
    z_index = 0
    theta_index = 1
    common_channels = (0, 1, 2, 3)

    def __init__(self, params):
        self.params = params

    def rhs(self, x, u):
        return deriv4(x, u[0], self.params)

    def rhs_forces(self, x, f):
        return deriv4(x, f[0], self.params)

    def forces(self, x, u):
        return np.array([float(u[0])])

    def linearize(self):
        return linearize4(self.params)

    def phi(self, x, target):
        return transform_phi4(x, target)

    def phi_inverse(self, xt, target):
        return transform_phi4_inverse(xt, target)

    @property
    def phi_jacobian(self):
        return np.eye(4)

    def check_domain(self, x):
        pass


MODELS = {"varying6": VaryingRopeCrane, "constant4": ConstantRopeCrane}


def make_model(name, params):
    try:
        return MODELS[name](params)
    except KeyError:
        raise ValueError(f"unknown model {name!r}; expected one of {sorted(MODELS)}") from None
