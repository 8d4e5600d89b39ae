"""First-order corrections around large-coupling seeds.

Linearizing the lattice equation about a seed ``p`` at fixed ``E0`` gives the
system ``T X = F`` with

* ``T[i, i] = 2 - E0 - 3 c p_i^2`` and ``-1`` couplings to each neighbour
  (including the corner couplings of a periodic chain),
* ``F_i = E0 p_i + c p_i^3 + p_{i-1} - 2 p_i + p_{i+1}`` (minus the residual).

The same system, assembled at the current iterate instead of the seed, is the
Newton step used by :mod:`dnls.solver`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from . import _kernels
from .errors import NearDegeneracyError, OutOfDomainError, UndefinedDiagnosticError, InvalidPatternError
from .lattice import BC, LatticeWave, ModelParams, default_eps_sum, residual

DENSE_MAX_N = 8
PIVOT_RTOL = 1e-8


@dataclass(frozen=True)
class CorrectionSystem:
    """Tridiagonal (or cyclic tridiagonal) system ``T X = F``.

    Only the diagonal is stored; every neighbour coupling is ``-1``. On a
    periodic chain of two sites both neighbours coincide, so the dense form
    carries ``-2`` off the diagonal; a single periodic site couples to itself.
    """

    diag: np.ndarray
    rhs: np.ndarray
    bc: BC = BC.PBC

    @property
    def N(self) -> int:
        return self.diag.size

    @property
    def corner(self) -> bool:
        return self.bc is BC.PBC

    def matrix(self) -> np.ndarray:
        N = self.N
        T = np.diag(np.asarray(self.diag, dtype=float))
        for i in range(N):
            for j in (i - 1, i + 1):
                if self.bc is BC.PBC:
                    T[i, j % N] -= 1.0
                elif 0 <= j < N:
                    T[i, j] -= 1.0
        return T

    def inf_norm(self) -> float:
        return float(np.max(np.abs(self.diag)) + 2.0)


def build_system(p: LatticeWave, E0: float, c: float) -> CorrectionSystem:
    v = p.values
    diag = 2.0 - E0 - 3.0 * c * v**2
    rhs = -residual(p, ModelParams(c, E0, p.N, p.bc))
    return CorrectionSystem(diag, rhs, p.bc)


def dense_solve(T: np.ndarray, F: np.ndarray) -> tuple[np.ndarray, float]:
    """Gaussian elimination with partial pivoting; returns ``(x, min_abs_pivot)``."""
    A = np.array(T, dtype=float)
    b = np.array(F, dtype=float)
    N = b.size
    min_piv = math.inf
    for k in range(N):
        r = k + int(np.argmax(np.abs(A[k:, k])))
        piv = A[r, k]
        min_piv = min(min_piv, abs(piv))
        if piv == 0.0:
            return np.full(N, np.nan), 0.0
        if r != k:
            A[[k, r]] = A[[r, k]]
            b[[k, r]] = b[[r, k]]
        f = A[k + 1 :, k] / piv
        A[k + 1 :, k:] -= np.outer(f, A[k, k:])
        b[k + 1 :] -= f * b[k]
    x = np.empty(N)
    for k in range(N - 1, -1, -1):
        x[k] = (b[k] - np.dot(A[k, k + 1 :], x[k + 1 :])) / A[k, k]
    return x, min_piv


def cyclic_solve(diag, rhs, periodic: bool, tridiag=None):
    """Solve ``T x = rhs`` for unit ``-1`` couplings in O(N).

    Periodic chains use a Sherman-Morrison rank-one correction for the corner
    elements on top of two plain tridiagonal solves. Works elementwise, so it
    accepts float arrays or lists of ``mpmath.mpf``. Returns
    ``(x, min_abs_pivot)``; the pivot is ``0`` when the correction itself is
    singular. Requires ``N >= 3``.
    """
    if tridiag is None:
        tridiag = _kernels.tridiag_solve
    N = len(diag)
    one = diag[0] * 0 + 1
    a = [-one] * N
    cc = [-one] * N
    if not periodic:
        return tridiag(a, list(diag), cc, list(rhs))
    # T = A + u v^T with u = (gamma, 0, ..., 0, -1), v = (1, 0, ..., 0, -1/gamma)
    gamma = -diag[0] if diag[0] != 0 else -one
    b = list(diag)
    b[0] = diag[0] - gamma
    b[N - 1] = diag[N - 1] - one / gamma
    x, p1 = tridiag(a, b, cc, list(rhs))
    u = [0 * one] * N
    u[0] = gamma
    u[N - 1] = -one
    z, p2 = tridiag(a, b, cc, u)
    denom = one + z[0] - z[N - 1] / gamma
    fact = (x[0] - x[N - 1] / gamma) / denom if denom != 0 else 0 * one
    out = [xi - fact * zi for xi, zi in zip(x, z)]
    min_piv = min(p1, p2, abs(denom) * abs(gamma))
    return out, min_piv


def solve_system(sys: CorrectionSystem, method: str = "auto", pattern=None) -> np.ndarray:
    """Return ``X`` with ``T X = F``.

    ``method`` is ``"auto"`` (dense elimination for ``N <= 8``, cyclic Thomas
    otherwise), ``"thomas"`` (cyclic Thomas whenever ``N >= 3``) or
    ``"dense"``. Thomas falls back to pivoted elimination on a small pivot. Raises :class:`NearDegeneracyError` when the smallest pivot
    is below ``1e-8`` times the matrix infinity norm; ``pattern`` only feeds
    the error message.
    """
    F = np.asarray(sys.rhs, dtype=float)
    if not np.any(F):
        return np.zeros(sys.N)
    norm = sys.inf_norm()
    floor = PIVOT_RTOL * norm
    use_dense = method == "dense" or sys.N < 3 or (method == "auto" and sys.N <= DENSE_MAX_N)
    if method not in ("auto", "dense", "thomas"):
        raise ValueError(f"unknown method {method!r}")
    if not use_dense:
        x, piv = cyclic_solve(np.asarray(sys.diag, dtype=float), F, sys.corner)
        x = np.asarray(x, dtype=float)
        if piv > floor and np.all(np.isfinite(x)):
            return x
    x, piv = dense_solve(sys.matrix(), F)
    if not piv > floor or not np.all(np.isfinite(x)):
        raise NearDegeneracyError(piv, norm, pattern)
    return x


def energy_correction(p: Sequence[float], x: Sequence[float], E0: float, c: float, eps_sum: float | None = None) -> float:
    """First-order eigenvalue shift from summing the linearized equations (PBC).

    When ``x`` solves the periodic system exactly the numerator vanishes
    identically, so a nonzero result measures how far ``x`` is from that
    solve (for example a truncated series).
    """
    p = np.asarray(p, dtype=float)
    x = np.asarray(x, dtype=float)
    if eps_sum is None:
        eps_sum = default_eps_sum(p.size)
    den = p.sum() + x.sum()
    if abs(den) <= eps_sum:
        raise UndefinedDiagnosticError(f"|sum(p) + sum(x)| = {abs(den):.3e} <= {eps_sum:.3e}")
    num = -c * np.sum(p**3) - 3.0 * c * np.sum(p**2 * x) - E0 * p.sum() - E0 * x.sum()
    return float(num / den)


# -- closed-form corrections for every local neighbourhood ---------------------


class A1Entry(NamedTuple):
    """``x = (kn n + km m + kl l) / (div sqrt(n) D)``.

    ``D = c - 2m - 4l`` when the centre site is empty, ``c + m + 2l`` otherwise.
    """

    kn: int
    km: int
    kl: int
    div: int


# Keyed by (centre sign, sorted pair of neighbour signs).
A1_TABLE: dict[tuple[int, tuple[int, int]], A1Entry] = {
    (0, (0, 0)): A1Entry(0, 0, 0, 1),
    (0, (0, 1)): A1Entry(1, 0, 0, 1),
    (0, (-1, 0)): A1Entry(-1, 0, 0, 1),
    (0, (1, 1)): A1Entry(2, 0, 0, 1),
    (0, (-1, 1)): A1Entry(0, 0, 0, 1),
    (0, (-1, -1)): A1Entry(-2, 0, 0, 1),
    (1, (0, 0)): A1Entry(1, -1, -2, 1),
    (1, (0, 1)): A1Entry(1, -2, -4, 2),
    (1, (-1, 0)): A1Entry(3, -2, -4, 2),
    (1, (1, 1)): A1Entry(0, -1, -2, 1),
    (1, (-1, 1)): A1Entry(1, -1, -2, 1),
    (1, (-1, -1)): A1Entry(2, -1, -2, 1),
    (-1, (0, 0)): A1Entry(-1, 1, 2, 1),
    (-1, (0, 1)): A1Entry(-3, 2, 4, 2),
    (-1, (-1, 0)): A1Entry(-1, 2, 4, 2),
    (-1, (1, 1)): A1Entry(-2, 1, 2, 1),
    (-1, (-1, 1)): A1Entry(-1, 1, 2, 1),
    (-1, (-1, -1)): A1Entry(0, 1, 2, 1),
}


def _sign_of(value: float, n: int, rtol: float = 1e-9) -> int:
    a = 1.0 / math.sqrt(n)
    if abs(value) <= rtol * a:
        return 0
    if abs(abs(value) - a) <= rtol * a:
        return 1 if value > 0 else -1
    raise InvalidPatternError(f"amplitude {value!r} is not 0 or +-1/sqrt({n})")


def a1_correction(pL: float, pC: float, pR: float, n: int, m: int, l: int, c: float) -> float:
    """Tabulated first-order correction at a site from its three-site neighbourhood."""
    sL, sC, sR = (_sign_of(v, n) for v in (pL, pC, pR))
    return a1_from_signs(sL, sC, sR, n, m, l, c)


def a1_from_signs(sL: int, sC: int, sR: int, n: int, m: int, l: int, c: float) -> float:
    key = (sC, tuple(sorted((sL, sR))))
    try:
        e = A1_TABLE[key]
    except KeyError:
        raise InvalidPatternError(f"no tabulated correction for neighbourhood {(sL, sC, sR)}") from None
    num = e.kn * n + e.km * m + e.kl * l
    if num == 0:
        return 0.0
    D = c - 2 * m - 4 * l if sC == 0 else c + m + 2 * l
    return num / (e.div * math.sqrt(n) * D)


def a1_vector(layout: Sequence[int], c: float, bc: BC | str = BC.PBC) -> np.ndarray:
    """Tabulated first-order correction for every site of a seed layout."""
    from .lattice import SeedPattern

    pat = SeedPattern(tuple(layout), BC.parse(bc))
    s = np.asarray(pat.layout)
    N = s.size
    out = np.empty(N)
    for i in range(N):
        if pat.bc is BC.PBC:
            sL, sR = s[(i - 1) % N], s[(i + 1) % N]
        else:
            sL = s[i - 1] if i > 0 else 0
            sR = s[i + 1] if i < N - 1 else 0
        out[i] = a1_from_signs(int(sL), int(s[i]), int(sR), pat.n, pat.m, pat.l, c)
    return out


# -- two-site periodic chain -------------------------------------------------


@dataclass(frozen=True)
class TwoSiteSolutions:
    """Exact stationary states of the two-site periodic chain.

    ``solutions`` holds ``(E, vector)`` pairs: the symmetric, antisymmetric
    and (only for ``c > 4``) symmetry-breaking branches.
    """

    c: float
    solutions: tuple[tuple[float, np.ndarray], ...]
    alpha: float | None


def symmetry_breaking_alpha(c: float) -> float:
    if not abs(c) >= 4:
        raise OutOfDomainError(f"alpha = sqrt(1 - 16/c^2) needs |c| >= 4, got c={c!r}")
    return math.sqrt(1.0 - 16.0 / (c * c))


def two_site_exact(c: float) -> TwoSiteSolutions:
    r = 1.0 / math.sqrt(2.0)
    sols = [(-c / 2.0, np.array([r, r])), ((8.0 - c) / 2.0, np.array([r, -r]))]
    alpha = None
    if c > 4:
        alpha = symmetry_breaking_alpha(c)
        big = math.sqrt((1.0 + alpha) / 2.0)
        # (1 - alpha)/2 loses digits for large c; use big * small = 2/c instead
        small = 2.0 / (c * big)
        sols.append((2.0 - c, np.array([big, small])))
    return TwoSiteSolutions(float(c), tuple(sols), alpha)


_SURD_LARGE = (1.0, -2.0, -10.0, -84.0, -858.0)
_SURD_SMALL = (2.0, 4.0, 28.0, 264.0, 2860.0)
SURD_MAX_TERMS = len(_SURD_LARGE)


def surd_series(c: float, terms: int) -> tuple[float, float]:
    """Partial sums of the large-``c`` expansions of the symmetry-breaking amplitudes.

    ``large = 1 - 2/c^2 - 10/c^4 - 84/c^6 - 858/c^8``,
    ``small = 2/c + 4/c^3 + 28/c^5 + 264/c^7 + 2860/c^9``, truncated to
    ``terms`` coefficients each.
    """
    if not c > 4:
        raise OutOfDomainError(f"the expansion needs c > 4, got c={c!r}")
    if not 1 <= terms <= SURD_MAX_TERMS:
        raise ValueError(f"terms must be between 1 and {SURD_MAX_TERMS}")
    if math.isinf(c):
        return 1.0, 0.0
    large = sum(a / c ** (2 * k) for k, a in enumerate(_SURD_LARGE[:terms]))
    small = sum(a / c ** (2 * k + 1) for k, a in enumerate(_SURD_SMALL[:terms]))
    return large, small


def surd_next_term(c: float, terms: int) -> tuple[float, float]:
    """Magnitudes of the first omitted terms of :func:`surd_series` (``terms < 5``)."""
    if not 1 <= terms < SURD_MAX_TERMS:
        raise ValueError(f"terms must be between 1 and {SURD_MAX_TERMS - 1}")
    return abs(_SURD_LARGE[terms]) / c ** (2 * terms), abs(_SURD_SMALL[terms]) / c ** (2 * terms + 1)


def surd_exact(c: float) -> tuple[float, float]:
    """``(sqrt(1 + alpha)/sqrt(2), sqrt(1 - alpha)/sqrt(2))`` evaluated stably."""
    alpha = symmetry_breaking_alpha(c)
    big = math.sqrt((1.0 + alpha) / 2.0)
    return big, 2.0 / (c * big)
