"""Pure-Python reference kernels.

Every function here has a Cython twin in ``_ckernels.pyx`` with the same
signature and semantics. The tridiagonal solver is written against plain
sequences so that it also runs on ``mpmath.mpf`` values.
"""

from __future__ import annotations

import math

import numpy as np

# Running transfer products are rescaled once their largest entry passes this.
_RESCALE_AT = 2.0**300


def tridiag_solve(a, b, c, d):
    """Thomas elimination for ``a[i] x[i-1] + b[i] x[i] + c[i] x[i+1] = d[i]``.

    ``a[0]`` and ``c[-1]`` are ignored. Returns ``(x, min_abs_pivot)`` with
    ``x`` a list. No pivoting: callers inspect ``min_abs_pivot`` and fall back
    to a pivoted dense solve when it is too small.
    """
    n = len(b)
    cp = [0] * n
    dp = [0] * n
    piv = b[0]
    min_piv = abs(piv)
    if piv == 0:
        return [math.nan] * n, 0.0
    cp[0] = c[0] / piv if n > 1 else 0
    dp[0] = d[0] / piv
    for i in range(1, n):
        piv = b[i] - a[i] * cp[i - 1]
        if abs(piv) < min_piv:
            min_piv = abs(piv)
        if piv == 0:
            return [math.nan] * n, 0.0
        if i < n - 1:
            cp[i] = c[i] / piv
        dp[i] = (d[i] - a[i] * dp[i - 1]) / piv
    x = [0] * n
    x[n - 1] = dp[n - 1]
    for i in range(n - 2, -1, -1):
        x[i] = dp[i] - cp[i] * x[i + 1]
    return x, min_piv


def iterate_map(z0, psi0, c, E, steps, bound):
    """Iterate ``Z' = Z - E psi - c psi^3, psi' = psi + Z'``.

    Returns ``(Z, psi, diverged_at)``; ``diverged_at`` is -1 for a completed
    orbit, otherwise the index of the first state whose magnitude exceeds
    ``bound`` (that state is the last one returned).
    """
    zs = np.empty(steps + 1)
    ps = np.empty(steps + 1)
    z = float(z0)
    p = float(psi0)
    zs[0] = z
    ps[0] = p
    if not (abs(z) <= bound and abs(p) <= bound):
        return zs[:1], ps[:1], 0
    for k in range(1, steps + 1):
        z = z - E * p - c * p * p * p
        p = p + z
        zs[k] = z
        ps[k] = p
        if not (abs(z) <= bound and abs(p) <= bound):
            return zs[: k + 1], ps[: k + 1], k
    return zs, ps, -1


def transfer_trace(psi, c, E):
    """Trace of the ordered product of ``[[2 - E - 3 c psi_i^2, -1], [1, 0]]``.

    The product is accumulated left-multiplied (last site leftmost) and
    rescaled by powers of two; returns ``(mantissa, exp2)`` with
    ``trace = mantissa * 2**exp2``.
    """
    m00, m01, m10, m11 = 1.0, 0.0, 0.0, 1.0
    exp2 = 0
    for x in np.asarray(psi, dtype=float).tolist():
        t = 2.0 - E - 3.0 * c * x * x
        # [[t, -1], [1, 0]] @ M
        n00 = t * m00 - m10
        n01 = t * m01 - m11
        m10, m11 = m00, m01
        m00, m01 = n00, n01
        big = max(abs(m00), abs(m01), abs(m10), abs(m11))
        if big > _RESCALE_AT:
            _, e = math.frexp(big)
            m00 = math.ldexp(m00, -e)
            m01 = math.ldexp(m01, -e)
            m10 = math.ldexp(m10, -e)
            m11 = math.ldexp(m11, -e)
            exp2 += e
    return m00 + m11, exp2


def greedy_cluster(points, tol):
    """Greedy agglomeration in max-norm with running-mean centres.

    A point joins the first existing cluster whose centre lies within ``tol``;
    otherwise it opens a new cluster. Returns ``(labels, centers, counts)``.
    """
    pts = np.asarray(points, dtype=float)
    labels = np.empty(len(pts), dtype=np.intp)
    sums: list[list[float]] = []
    counts: list[int] = []
    cx: list[float] = []
    cy: list[float] = []
    for i, (x, y) in enumerate(pts.reshape(-1, 2).tolist()):
        for j in range(len(counts)):
            if abs(cx[j] - x) <= tol and abs(cy[j] - y) <= tol:
                sums[j][0] += x
                sums[j][1] += y
                counts[j] += 1
                cx[j] = sums[j][0] / counts[j]
                cy[j] = sums[j][1] / counts[j]
                labels[i] = j
                break
        else:
            sums.append([x, y])
            counts.append(1)
            cx.append(x)
            cy.append(y)
            labels[i] = len(counts) - 1
    centers = np.column_stack([cx, cy]) if counts else np.empty((0, 2))
    return labels, centers, np.asarray(counts, dtype=np.intp)
