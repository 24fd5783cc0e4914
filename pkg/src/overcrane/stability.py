"""Lyapunov-based certification of local asymptotic stability.

The closed loop is written as ``x' = A_cl x + R(x)``. Along trajectories,
``V = x^T P x`` with ``P A_cl + A_cl^T P = -Q`` decreases whenever

    lambda_min(Q) > 2 * sigma * lambda_max(P),

where ``sigma`` bounds ``|R(x)| / |x|`` on the ball in question. Here
``sigma`` is estimated by sampling, so the radius returned by
:func:`roa_radius` is a numerical estimate, not a proof.
"""

from dataclasses import dataclass, field

import numpy as np

from . import numkit
from .errors import NonFiniteState, NotHurwitz


@dataclass
class LyapunovCertificate:
    P: np.ndarray
    Q: np.ndarray
    sigma: float
    radius: float
    lambda_min_q: float
    lambda_min_p: float
    lambda_max_p: float
    margin: float

    @property
    def valid(self):
        return self.margin > 0.0


def sample_shells(n, radius, samples, seed):
    """Points on 10 concentric spheres of radii ``radius * k / 10``.

    One seeded set of ``samples // 10`` directions is shared by every shell.
    """
    if radius <= 0:
        raise ValueError("radius must be positive")
    if samples < 10:
        raise ValueError("need at least 10 samples")
    rng = np.random.default_rng(seed)
    d = rng.standard_normal((samples // 10, n))
    d /= np.linalg.norm(d, axis=1)[:, None]
    radii = radius * np.arange(1, 11) / 10.0
    return (radii[:, None, None] * d[None, :, :]).reshape(-1, n)


def estimate_sigma(closed_loop_rhs, a_cl, radius, samples=1000, seed=0):
    """Largest sampled ratio ``|g(x) - A_cl x| / |x|`` within ``radius``."""
    a_cl = np.asarray(a_cl, dtype=float)
    best = 0.0
    for x in sample_shells(a_cl.shape[0], radius, samples, seed):
        gx = np.asarray(closed_loop_rhs(x), dtype=float)
        if not np.all(np.isfinite(gx)):
            raise NonFiniteState(f"dynamics not finite at sample {x}")
        ratio = np.linalg.norm(gx - a_cl @ x) / np.linalg.norm(x)
        best = max(best, ratio)
    return float(best)


def _require_hurwitz(a_cl):
    eigs = numkit.eig_general(a_cl)
    if not np.all(eigs.real < 0):
        worst = eigs[np.argmax(eigs.real)]
        raise NotHurwitz(f"closed-loop matrix has eigenvalue {worst:.6g} with non-negative real part")
    return eigs


def certify(a_cl, q=None, sigma=0.0, radius=float("nan")):
    """Solve the Lyapunov equation and evaluate the decrease margin for ``sigma``."""
    a_cl = numkit.as_matrix(a_cl, "a_cl")
    q = np.eye(a_cl.shape[0]) if q is None else numkit.as_matrix(q, "q")
    _require_hurwitz(a_cl)
    q_eigs = numkit.eig_symmetric(q)
    if q_eigs[0] <= 0:
        raise ValueError("Q must be positive definite")
    p = numkit.lyapunov_solve(a_cl, q)
    p_eigs = numkit.eig_symmetric(p)
    margin = q_eigs[0] - 2.0 * sigma * p_eigs[-1]
    return LyapunovCertificate(
        P=p, Q=q, sigma=float(sigma), radius=radius,
        lambda_min_q=float(q_eigs[0]), lambda_min_p=float(p_eigs[0]),
        lambda_max_p=float(p_eigs[-1]), margin=float(margin),
    )


@dataclass
class RoaResult:
    radius: float
    certificate: LyapunovCertificate
    history: list = field(default_factory=list)  # (radius, sigma, margin) per evaluation


def roa_search(a_cl, q, closed_loop_rhs, r_max, samples=1000, seed=0, rel_tol=1e-3):
    """Largest radius up to ``r_max`` whose sampled sigma keeps the margin positive.

    The radius is first shrunk in factors of 10 until a valid one is found;
    the bracket is then bisected to ``rel_tol``. Returns radius 0 if nothing
    down to ``1e-12 * r_max`` certifies.
    """
    if r_max <= 0:
        raise ValueError("r_max must be positive")
    a_cl = numkit.as_matrix(a_cl, "a_cl")
    _require_hurwitz(a_cl)
    history = []

    def check(r):
        sigma = estimate_sigma(closed_loop_rhs, a_cl, r, samples, seed)
        cert = certify(a_cl, q, sigma, r)
        history.append((r, sigma, cert.margin))
        return cert

    cert = check(r_max)
    if cert.valid:
        return RoaResult(r_max, cert, history)
    hi = r_max
    lo = r_max / 10.0
    while True:
        lo_cert = check(lo)
        if lo_cert.valid:
            break
        hi = lo
        lo /= 10.0
        if lo < 1e-12 * r_max:
            failed = certify(a_cl, q, history[-1][1], 0.0)
            return RoaResult(0.0, failed, history)
    while (hi - lo) > rel_tol * hi:
        mid = 0.5 * (lo + hi)
        mid_cert = check(mid)
        if mid_cert.valid:
            lo, lo_cert = mid, mid_cert
        else:
            hi = mid
    return RoaResult(lo, lo_cert, history)


def roa_radius(a_cl, q, closed_loop_rhs, r_max, samples=1000, seed=0):
    return roa_search(a_cl, q, closed_loop_rhs, r_max, samples, seed).radius


def vdot_along(times, states, P, rhs):
    """``V = x^T P x`` and ``V' = x^T P g(x) + g(x)^T P x`` at each sample.

    ``states`` are in the coordinates where the equilibrium is the origin and
    ``rhs`` is the closed-loop vector field in those coordinates.
    """
    P = np.asarray(P, dtype=float)
    states = np.atleast_2d(np.asarray(states, dtype=float))
    v = np.einsum("ij,jk,ik->i", states, P, states)
    g = np.array([rhs(x) for x in states])
    vdot = np.einsum("ij,jk,ik->i", states, P, g) + np.einsum("ij,jk,ik->i", g, P, states)
    return np.asarray(times, dtype=float), v, vdot
