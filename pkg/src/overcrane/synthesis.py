"""Controllability analysis and state-feedback gain synthesis."""

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import numkit
from .errors import IllConditioned, NotControllable, StructureMismatch
from .model import PHI_JACOBIAN6


def validate_poles(poles, n=None):
    """Return ``poles`` as a float array, checking they are real, finite and negative."""
    values = np.array([float(np.real_if_close(v)) for v in poles])
    if n is not None and len(values) != n:
        raise ValueError(f"expected {n} poles, got {len(values)}")
    for v in values:
        if not (math.isfinite(v) and v < 0):
            raise ValueError(f"pole {v!r} is not strictly negative")
    return values


@dataclass(frozen=True)
class ChannelAssignment:
    """Pole pairs for the trolley, hoist and sway input channels."""

    z: tuple
    l: tuple
    theta: tuple

    def pairs(self):
        return (tuple(self.z), tuple(self.l), tuple(self.theta))

    def poles(self):
        return [v for pair in self.pairs() for v in pair]

    @classmethod
    def default(cls, poles):
        """Pairing that reproduces the reference gain for the reference pole set.

        With poles sorted slowest first as ``p1 .. p6``: the trolley gets
        ``(p5, p6)``, the hoist ``(p2, p3)`` and the sway ``(p1, p4)``.
        """
        p = sorted(validate_poles(poles, 6), reverse=True)
        return cls((p[4], p[5]), (p[1], p[2]), (p[0], p[3]))


REF_POLES6 = (-0.1, -0.15, -0.2, -0.25, -0.3, -0.35)
REF_POLES4 = (-0.2, -0.25, -0.3, -0.35)
REF_GAIN6 = np.array([
    [0.1050, 0, 0, 0.6500, 0, 0],
    [0, 0.0300, 0, 0, 0.3500, 0],
    [0, 0, 0.0250, 0, 0, 0.3500],
])
REF_GAIN4 = np.array([[0.0010, 99.1882, 0.0159, -2.1061]])


def controllability_matrix(a, b):
    """Kalman matrix ``(B, AB, ..., A^(n-1) B)``."""
    a = numkit.as_matrix(a, "a")
    b = numkit.as_matrix(b, "b")
    n = a.shape[0]
    if a.shape != (n, n) or b.shape[0] != n:
        raise ValueError("a must be n x n and b must have n rows")
    blocks = [b]
    for _ in range(1, n):
        blocks.append(a @ blocks[-1])
    return np.hstack(blocks)


@dataclass(frozen=True)
class ControllabilityReport:
    controllable: bool
    rank: int
    n: int

    def __bool__(self):
        return self.controllable


def is_controllable(a, b, rel_tol=1e-9):
    c = controllability_matrix(a, b)
    r = numkit.rank(c, rel_tol)
    n = c.shape[0]
    return ControllabilityReport(r == n, r, n)


def _check_decoupled_structure(a, b):
    a_ref = np.zeros((6, 6))
    a_ref[0, 3] = a_ref[1, 4] = a_ref[2, 5] = 1.0
    b_ref = np.zeros((6, 3))
    b_ref[3, 0] = b_ref[4, 1] = b_ref[5, 2] = 1.0
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != (6, 6) or b.shape != (6, 3):
        raise StructureMismatch("expected a 6x6 A and a 6x3 B")
    if np.abs(a - a_ref).max() > 1e-12 or np.abs(b - b_ref).max() > 1e-12:
        raise StructureMismatch("A, B are not the decoupled double-integrator chain")


def place_decoupled(poles, assignment=None, a=None, b=None):
    """Gain for three decoupled double integrators.

    Each channel ``i`` with pole pair ``(pa, pb)`` gets position gain
    ``pa * pb`` and velocity gain ``-(pa + pb)``, so its closed-loop
    polynomial is ``(s - pa)(s - pb)``.

    Parameters
    ----------
    poles : sequence of 6 negative reals
    assignment : ChannelAssignment, optional
        Defaults to :meth:`ChannelAssignment.default`.
    a, b : array_like, optional
        If given, they are checked against the expected structure.
    """
    poles = validate_poles(poles, 6)
    if assignment is None:
        assignment = ChannelAssignment.default(poles)
    if sorted(assignment.poles()) != sorted(poles.tolist()):
        raise ValueError("channel assignment does not cover the pole set")
    if a is not None or b is not None:
        _check_decoupled_structure(a, b)
    k = np.zeros((3, 6))
    for i, (pa, pb) in enumerate(assignment.pairs()):
        k[i, i] = pa * pb
        k[i, i + 3] = -(pa + pb)
    return k


def ackermann(a, b, poles):
    """Single-input pole placement ``K = e_n^T C^-1 chi(A)``."""
    a = numkit.as_matrix(a, "a")
    b = numkit.as_matrix(b, "b")
    n = a.shape[0]
    if b.shape != (n, 1):
        raise ValueError("ackermann needs a single-input b of shape (n, 1)")
    poles = validate_poles(poles, n)
    report = is_controllable(a, b)
    if not report:
        raise NotControllable(f"controllability rank {report.rank} < {n}")
    c = controllability_matrix(a, b)
    e_n = np.zeros(n)
    e_n[-1] = 1.0
    # row vector y = e_n^T C^-1, i.e. C^T y = e_n
    y = numkit.solve_linear(c.T, e_n)
    resid = np.abs(c.T @ y - e_n).max()
    if resid > 1e-6:
        raise IllConditioned(f"controllability solve residual {resid:.3e}")
    coeffs = np.poly(poles)  # monic, highest power first
    chi = np.zeros((n, n))
    for coef in coeffs:
        chi = chi @ a + coef * np.eye(n)
    return (y @ chi).reshape(1, n)


def gain_transform(k):
    """Gain for the shifted coordinates: flip row 2 and columns 2 and 5."""
    k = np.array(k, dtype=float)
    if k.shape != (3, 6):
        raise ValueError("gain_transform expects a 3x6 gain")
    d = np.diag([1.0, -1.0, 1.0])
    return d @ k @ PHI_JACOBIAN6


def transformed_pair(a, b):
    """``(A~, B~)`` of the shifted 6-state system: A unchanged, row 5 of B negated."""
    return np.array(a, dtype=float), PHI_JACOBIAN6 @ np.asarray(b, dtype=float)


@dataclass
class PlacementReport:
    passed: bool
    hurwitz: bool
    eigenvalues: np.ndarray
    matched: np.ndarray
    mismatch: np.ndarray
    det_residuals: np.ndarray
    tolerance: float

    @property
    def max_mismatch(self):
        return float(self.mismatch.max())


def _match(eigs, poles):
    # minimise the worst pairing error; n <= 6 makes brute force cheap
    best = None
    for perm in itertools.permutations(range(len(eigs))):
        err = np.abs(eigs[list(perm)] - poles)
        if best is None or err.max() < best[0]:
            best = (err.max(), eigs[list(perm)], err)
    return best[1], best[2]


def verify_placement(a, b, k, poles, tol=1e-6):
    """Compare ``eig(a - b k)`` against the requested poles."""
    a = numkit.as_matrix(a, "a")
    b = numkit.as_matrix(b, "b")
    k = numkit.as_matrix(np.atleast_2d(k), "k")
    poles = np.asarray(poles, dtype=float)
    a_cl = a - b @ k
    n = a.shape[0]
    eigs = numkit.eig_general(a_cl)
    matched, mismatch = _match(eigs, poles)
    det_res = np.array([abs(numkit.determinant(lam * np.eye(n) - a_cl)) for lam in poles])
    hurwitz = bool(np.all(eigs.real < 0))
    return PlacementReport(
        passed=bool(hurwitz and mismatch.max() <= tol),
        hurwitz=hurwitz,
        eigenvalues=eigs,
        matched=matched,
        mismatch=mismatch,
        det_residuals=det_res,
        tolerance=tol,
    )
