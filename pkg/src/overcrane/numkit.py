"""Dense linear algebra for small real matrices.

Everything here works on plain 2-D ``numpy`` arrays of floats and is meant
for n <= 10. Nothing is cached and no input is modified in place.
"""

import math

import numpy as np

from .errors import NoConvergence, NotSymmetric, SingularMatrix

_EPS = np.finfo(float).eps


def as_matrix(a, name="a"):
    """Return ``a`` as a finite 2-D float array (a copy)."""
    m = np.array(a, dtype=float)
    if m.ndim == 1:
        m = m.reshape(-1, 1)
    if m.ndim != 2 or m.size == 0:
        raise ValueError(f"{name} must be a non-empty 2-D matrix")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} has non-finite entries")
    return m


def _as_square(a, name="a"):
    m = as_matrix(a, name)
    if m.shape[0] != m.shape[1]:
        raise ValueError(f"{name} must be square, got {m.shape}")
    return m


def solve_linear(a, b):
    """Solve ``a @ x = b`` by Gaussian elimination with partial pivoting.

    Parameters
    ----------
    a : array_like, shape (n, n)
    b : array_like, shape (n,) or (n, k)

    Returns
    -------
    x : ndarray with the same shape as ``b``

    Raises
    ------
    SingularMatrix
        If a pivot falls below ``1e-12`` times the largest entry of ``a``.
    """
    a = _as_square(a)
    b_arr = np.array(b, dtype=float)
    vector = b_arr.ndim == 1
    b = as_matrix(b_arr, "b")
    n = a.shape[0]
    if b.shape[0] != n:
        raise ValueError(f"b has {b.shape[0]} rows, expected {n}")

    # plain lists: numpy call overhead dominates at these sizes
    rows = [ra + rb for ra, rb in zip(a.tolist(), b.tolist())]
    width = n + b.shape[1]
    scale = max(abs(v) for r in rows for v in r[:n])
    if scale == 0.0:
        raise SingularMatrix("zero matrix")
    tiny = 1e-12 * scale
    for k in range(n):
        p = max(range(k, n), key=lambda i: abs(rows[i][k]))
        if abs(rows[p][k]) < tiny:
            raise SingularMatrix(f"pivot {k} is {abs(rows[p][k]):.3e} (threshold {tiny:.3e})")
        rows[k], rows[p] = rows[p], rows[k]
        pivot_row = rows[k]
        piv = pivot_row[k]
        for i in range(k + 1, n):
            row = rows[i]
            f = row[k] / piv
            if f != 0.0:
                for j in range(k, width):
                    row[j] -= f * pivot_row[j]

    x = [[0.0] * (width - n) for _ in range(n)]
    for k in range(n - 1, -1, -1):
        row = rows[k]
        for c in range(width - n):
            acc = row[n + c]
            for j in range(k + 1, n):
                acc -= row[j] * x[j][c]
            x[k][c] = acc / row[k]
    x = np.array(x)
    return x[:, 0] if vector else x


def determinant(a):
    """Determinant by pivoted elimination; exactly 0.0 for a zero pivot column."""
    a = _as_square(a)
    n = a.shape[0]
    det = 1.0
    for k in range(n):
        p = k + int(np.argmax(np.abs(a[k:, k])))
        if a[p, k] == 0.0:
            return 0.0
        if p != k:
            a[[k, p]] = a[[p, k]]
            det = -det
        det *= a[k, k]
        f = a[k + 1:, k] / a[k, k]
        a[k + 1:, k:] -= np.outer(f, a[k, k:])
    return float(det)


def rank(a, rel_tol=1e-9):
    """Numerical rank: pivots larger than ``rel_tol`` times the largest entry.

    Uses row elimination with partial pivoting; a column whose best pivot
    is below the threshold is skipped without consuming a row.
    """
    if rel_tol <= 0:
        raise ValueError("rel_tol must be positive")
    a = as_matrix(a)
    rows, cols = a.shape
    scale = np.abs(a).max()
    if scale == 0.0:
        return 0
    tol = rel_tol * scale
    r = 0
    for c in range(cols):
        if r == rows:
            break
        p = r + int(np.argmax(np.abs(a[r:, c])))
        if abs(a[p, c]) <= tol:
            continue
        if p != r:
            a[[r, p]] = a[[p, r]]
        f = a[r + 1:, c] / a[r, c]
        a[r + 1:, c:] -= np.outer(f, a[r, c:])
        r += 1
    return r


def hessenberg(a):
    """Reduce ``a`` to upper Hessenberg form by Householder reflections."""
    h = _as_square(a)
    n = h.shape[0]
    for k in range(n - 2):
        x = h[k + 1:, k].copy()
        alpha = np.linalg.norm(x)
        if alpha == 0.0:
            continue
        v = x
        v[0] += math.copysign(alpha, x[0])
        v /= np.linalg.norm(v)
        h[k + 1:, k:] -= 2.0 * np.outer(v, v @ h[k + 1:, k:])
        h[:, k + 1:] -= 2.0 * np.outer(h[:, k + 1:] @ v, v)
        h[k + 2:, k] = 0.0
    return h


def _hqr(a, max_iter):
    # Francis double-shift QR on an upper Hessenberg matrix (EISPACK hqr layout).
    n = a.shape[0]
    wr = np.zeros(n)
    wi = np.zeros(n)
    anorm = sum(abs(a[i, j]) for i in range(n) for j in range(max(i - 1, 0), n))
    nn = n - 1
    t = 0.0
    total = 0
    p = q = r = 0.0
    while nn >= 0:
        its = 0
        while True:
            l = nn
            while l >= 1:
                s = abs(a[l - 1, l - 1]) + abs(a[l, l])
                if s == 0.0:
                    s = anorm
                if abs(a[l, l - 1]) <= _EPS * s:
                    a[l, l - 1] = 0.0
                    break
                l -= 1
            x = a[nn, nn]
            if l == nn:
                wr[nn] = x + t
                wi[nn] = 0.0
                nn -= 1
                break
            y = a[nn - 1, nn - 1]
            w = a[nn, nn - 1] * a[nn - 1, nn]
            if l == nn - 1:
                p = 0.5 * (y - x)
                q = p * p + w
                z = math.sqrt(abs(q))
                x += t
                if q >= 0.0:
                    z = p + math.copysign(z, p)
                    wr[nn - 1] = wr[nn] = x + z
                    if z != 0.0:
                        wr[nn] = x - w / z
                    wi[nn - 1] = wi[nn] = 0.0
                else:
                    wr[nn - 1] = wr[nn] = x + p
                    wi[nn - 1] = -z
                    wi[nn] = z
                nn -= 2
                break

            if total >= max_iter:
                raise NoConvergence(f"QR iteration exceeded {max_iter} sweeps")
            if its in (10, 20) or (its > 0 and its % 30 == 0):
                # exceptional shift
                t += x
                for i in range(nn + 1):
                    a[i, i] -= x
                s = abs(a[nn, nn - 1]) + abs(a[nn - 1, nn - 2])
                y = x = 0.75 * s
                w = -0.4375 * s * s
            its += 1
            total += 1

            m = nn - 2
            while m >= l:
                z = a[m, m]
                r = x - z
                s = y - z
                p = (r * s - w) / a[m + 1, m] + a[m, m + 1]
                q = a[m + 1, m + 1] - z - r - s
                r = a[m + 2, m + 1]
                s = abs(p) + abs(q) + abs(r)
                p /= s
                q /= s
                r /= s
                if m == l:
                    break
                u = abs(a[m, m - 1]) * (abs(q) + abs(r))
                v = abs(p) * (abs(a[m - 1, m - 1]) + abs(z) + abs(a[m + 1, m + 1]))
                if u <= _EPS * v:
                    break
                m -= 1
            for i in range(m, nn - 1):
                a[i + 2, i] = 0.0
                if i != m:
                    a[i + 2, i - 1] = 0.0

            for k in range(m, nn):
                if k != m:
                    p = a[k, k - 1]
                    q = a[k + 1, k - 1]
                    r = a[k + 2, k - 1] if k + 1 != nn else 0.0
                    x = abs(p) + abs(q) + abs(r)
                    if x != 0.0:
                        p /= x
                        q /= x
                        r /= x
                s = math.copysign(math.sqrt(p * p + q * q + r * r), p)
                if s == 0.0:
                    continue
                if k == m:
                    if l != m:
                        a[k, k - 1] = -a[k, k - 1]
                else:
                    a[k, k - 1] = -s * x
                p += s
                x = p / s
                y = q / s
                z = r / s
                q /= p
                r /= p
                for j in range(k, nn + 1):
                    p = a[k, j] + q * a[k + 1, j]
                    if k + 1 != nn:
                        p += r * a[k + 2, j]
                        a[k + 2, j] -= p * z
                    a[k + 1, j] -= p * y
                    a[k, j] -= p * x
                for i in range(l, min(nn, k + 3) + 1):
                    p = x * a[i, k] + y * a[i, k + 1]
                    if k + 1 != nn:
                        p += z * a[i, k + 2]
                        a[i, k + 2] -= p * r
                    a[i, k + 1] -= p * q
                    a[i, k] -= p
    return wr + 1j * wi


def eig_general(a):
    """All eigenvalues of a real square matrix.

    Hessenberg reduction followed by shifted double-step QR. The result is
    sorted by real part, then imaginary part; complex values come in
    conjugate pairs.

    Raises
    ------
    NoConvergence
        If more than ``500 * n`` QR sweeps are needed.
    """
    a = _as_square(a)
    n = a.shape[0]
    if n == 1:
        return np.array([complex(a[0, 0])])
    # work at unit scale; the QR deflation tests misbehave near under/overflow
    scale = float(np.abs(a).max())
    if scale == 0.0:
        return np.zeros(n, dtype=complex)
    vals = scale * _hqr(hessenberg(a / scale), max_iter=500 * n)
    return np.array(sorted(vals, key=lambda z: (z.real, z.imag)))


def eig_symmetric(a, tol=1e-10, max_sweeps=100):
    """Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending."""
    a = _as_square(a)
    norm = np.abs(a).sum(axis=1).max()
    if np.abs(a - a.T).sum(axis=1).max() > tol * max(norm, 1e-300):
        raise NotSymmetric("matrix is not symmetric")
    scale = float(np.abs(a).max())
    if scale == 0.0:
        return np.zeros(a.shape[0])
    a = 0.5 * (a + a.T) / scale
    norm /= scale
    n = a.shape[0]
    for _ in range(max_sweeps):
        off = math.sqrt(float(np.sum(np.triu(a, 1) ** 2)))
        if off <= 1e-14 * max(norm, 1e-300):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                diff = a[q, q] - a[p, p]
                if abs(apq) < 1e-150 * abs(diff):
                    t = apq / diff  # large-theta limit of the rotation
                else:
                    theta = diff / (2.0 * apq)
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                rp = a[p, :].copy()
                rq = a[q, :].copy()
                a[p, :] = c * rp - s * rq
                a[q, :] = s * rp + c * rq
                cp = a[:, p].copy()
                cq = a[:, q].copy()
                a[:, p] = c * cp - s * cq
                a[:, q] = s * cp + c * cq
                a[p, q] = a[q, p] = 0.0
    else:
        raise NoConvergence("Jacobi sweeps did not converge")
    return np.sort(scale * np.diag(a))


def lyapunov_solve(a_cl, q):
    """Solve ``P a_cl + a_cl^T P = -q`` for symmetric ``P``.

    The equation is vectorized into an n^2 x n^2 linear system; with row-major
    flattening ``vec(P A) = (I kron A^T) vec(P)`` and
    ``vec(A^T P) = (A^T kron I) vec(P)``.

    Raises
    ------
    SingularMatrix
        If two eigenvalues of ``a_cl`` sum to zero.
    """
    a = _as_square(a_cl, "a_cl")
    q = _as_square(q, "q")
    n = a.shape[0]
    if q.shape != a.shape:
        raise ValueError("q must match a_cl in shape")
    eye = np.eye(n)
    big = np.kron(eye, a.T) + np.kron(a.T, eye)
    try:
        p = solve_linear(big, -q.reshape(-1)).reshape(n, n)
    except SingularMatrix as exc:
        raise SingularMatrix(f"Lyapunov operator is singular: {exc}") from None
    return 0.5 * (p + p.T)
