"""Lattice states, the stationary lattice equation and its closed forms.

The stationary equation on a chain of ``N`` real amplitudes is::

    -psi[i-1] + 2 psi[i] - psi[i+1] - c psi[i]**3 = E psi[i]

with either periodic (``PBC``) or open (``OBC``) boundaries. Open boundaries
use fixed zero ghost sites, ``psi[-1] = psi[N] = 0``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import (
    DimensionError,
    InvalidPatternError,
    InvalidScaleError,
    NoDecayingTailError,
    NormalizationError,
    UndefinedDiagnosticError,
)


class BC(str, enum.Enum):
    PBC = "pbc"
    OBC = "obc"

    @classmethod
    def parse(cls, value: "BC | str") -> "BC":
        if isinstance(value, BC):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise ValueError(f"unknown boundary condition {value!r}; expected 'pbc' or 'obc'") from None


def default_eps_sum(N: int) -> float:
    """Threshold below which ``|sum(psi)|`` counts as zero."""
    return 1e-8 * N


@dataclass(frozen=True)
class LatticeWave:
    """Real amplitudes on ``N`` sites with a boundary-condition tag.

    ``values`` is stored as a read-only float64 array.
    """

    values: np.ndarray
    bc: BC = BC.PBC

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64).reshape(-1)
        if v.size < 1:
            raise DimensionError("a lattice needs at least one site")
        if not np.all(np.isfinite(v)):
            raise ValueError("lattice amplitudes must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "bc", BC.parse(self.bc))

    @property
    def N(self) -> int:
        return self.values.size

    @property
    def norm2(self) -> float:
        return float(np.dot(self.values, self.values))

    def neighbors(self) -> tuple[np.ndarray, np.ndarray]:
        """Return ``(left, right)`` neighbour amplitudes for every site."""
        return _neighbors(self.values, self.bc)

    def __len__(self) -> int:
        return self.N


@dataclass(frozen=True)
class ModelParams:
    c: float
    E: float
    N: int
    bc: BC = BC.PBC

    def __post_init__(self):
        if not (math.isfinite(self.c) and math.isfinite(self.E)):
            raise ValueError("c and E must be finite")
        if int(self.N) != self.N or self.N < 1:
            raise DimensionError(f"N must be a positive integer, got {self.N!r}")
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "bc", BC.parse(self.bc))
        object.__setattr__(self, "c", float(self.c))
        object.__setattr__(self, "E", float(self.E))

    def with_(self, **changes) -> "ModelParams":
        d = dict(c=self.c, E=self.E, N=self.N, bc=self.bc)
        d.update(changes)
        return ModelParams(**d)


@dataclass(frozen=True)
class NormalizedState:
    psi: LatticeWave
    C: float


def _neighbors(v: np.ndarray, bc: BC) -> tuple[np.ndarray, np.ndarray]:
    if bc is BC.PBC:
        return np.roll(v, 1), np.roll(v, -1)
    left = np.zeros_like(v)
    right = np.zeros_like(v)
    left[1:] = v[:-1]
    right[:-1] = v[1:]
    return left, right


def _check(w: LatticeWave, p: ModelParams) -> None:
    if w.N != p.N:
        raise DimensionError(f"state has {w.N} sites but parameters declare N={p.N}")
    if w.bc is not p.bc:
        raise DimensionError(f"boundary mismatch: state {w.bc.value}, parameters {p.bc.value}")


def residual(w: LatticeWave, p: ModelParams) -> np.ndarray:
    """Per-site defect ``-psi[i-1] + 2 psi[i] - psi[i+1] - c psi[i]^3 - E psi[i]``."""
    _check(w, p)
    v = w.values
    left, right = w.neighbors()
    return -left + 2.0 * v - right - p.c * v**3 - p.E * v


def hamiltonian(w: LatticeWave, p: ModelParams) -> float:
    """Energy functional ``sum (psi_i - psi_{i+1})^2 - c/2 sum psi^4 - E sum psi^2``.

    Under OBC the bond sum includes the two bonds to the zero ghost sites, so
    that the gradient is exactly twice the residual for both boundary types.
    """
    _check(w, p)
    v = w.values
    if p.bc is BC.PBC:
        bonds = v - np.roll(v, -1)
    else:
        bonds = np.diff(np.concatenate(([0.0], v, [0.0])))
    return float(np.sum(bonds**2) - 0.5 * p.c * np.sum(v**4) - p.E * np.sum(v**2))


def gradient(w: LatticeWave, p: ModelParams) -> np.ndarray:
    """Analytic ``dH/dpsi_i``, assembled bond by bond."""
    _check(w, p)
    v = w.values
    N = v.size
    g = -2.0 * p.c * v**3 - 2.0 * p.E * v
    if p.bc is BC.PBC:
        # bond k joins site k and site k+1 (mod N)
        d = v - np.roll(v, -1)
        np.add.at(g, np.arange(N), 2.0 * d)
        np.add.at(g, (np.arange(N) + 1) % N, -2.0 * d)
    else:
        padded = np.concatenate(([0.0], v, [0.0]))
        d = padded[:-1] - padded[1:]  # N+1 bonds, ghost ends fixed
        g += 2.0 * d[1:] - 2.0 * d[:-1]
    return g


def stagger(w: LatticeWave, E: float) -> tuple[LatticeWave, float]:
    """Alternate signs, ``x_n = (-1)^n psi_n``, and map ``E -> 4 - E``.

    A solution at ``(c, E)`` becomes a solution of the same equation with
    coupling ``-c`` and eigenvalue ``4 - E``. Under PBC this requires even N.
    """
    signs = np.where(np.arange(w.N) % 2 == 0, 1.0, -1.0)
    return LatticeWave(signs * w.values, w.bc), 4.0 - E


def rescale(w: LatticeWave, c: float, beta: float) -> tuple[LatticeWave, float]:
    """Similarity transform ``psi -> beta psi``, ``c -> c / beta^2``."""
    if beta == 0 or not math.isfinite(beta):
        raise InvalidScaleError(f"scale factor must be finite and nonzero, got {beta!r}")
    return LatticeWave(beta * w.values, w.bc), c / beta**2


def normalize(w: LatticeWave, c: float) -> NormalizedState:
    """Unit-norm state with the physical coupling ``C = c * sum(psi^2)``."""
    s = w.norm2
    if s <= 0.0:
        raise NormalizationError("cannot normalize the zero state")
    return NormalizedState(LatticeWave(w.values / math.sqrt(s), w.bc), c * s)


# -- c -> infinity closed forms ----------------------------------------------


def _check_nml(n: int, m: int, l: int) -> None:
    if n < 1 or not (0 <= m <= n) or not (0 <= l <= n):
        raise InvalidPatternError(f"need 1 <= n, 0 <= m <= n, 0 <= l <= n; got (n, m, l) = ({n}, {m}, {l})")


def limit_energy(n: int, m: int, l: int, c: float) -> float:
    """Large-coupling eigenvalue ``(2m + 4l - c) / n``."""
    _check_nml(n, m, l)
    return (2 * m + 4 * l - c) / n


def limit_hamiltonian(n: int, c: float) -> float:
    if n < 1:
        raise InvalidPatternError(f"n must be >= 1, got {n}")
    return c / (2 * n)


def count_pattern(layout: Sequence[int], bc: BC | str = BC.PBC) -> tuple[int, int, int]:
    """Return ``(n, m, l)`` for a sign layout.

    ``n`` is the number of nonzero entries, ``m`` the number of maximal runs of
    nonzero entries (0 for a fully occupied ring) and ``l`` the number of
    adjacent nonzero pairs with opposite signs.
    """
    bc = BC.parse(bc)
    s = np.sign(np.asarray(layout, dtype=float)).astype(int)
    N = s.size
    occ = s != 0
    n = int(occ.sum())
    if bc is BC.PBC:
        nxt = np.roll(s, -1)
        l = int(np.sum(s * nxt < 0))
        if n == N:
            m = 0
        else:
            # a run starts where an occupied site follows an empty one
            m = int(np.sum(occ & ~np.roll(occ, 1)))
    else:
        l = int(np.sum(s[:-1] * s[1:] < 0))
        starts = occ.copy()
        starts[1:] &= ~occ[:-1]
        m = int(starts.sum())
    return n, m, l


@dataclass(frozen=True)
class SeedPattern:
    """Occupancy layout of a large-coupling solution.

    ``layout`` holds entries in {0, +1, -1}; ``n``, ``m`` and ``l`` are always
    recomputed from it. Passing declared counts that disagree raises
    :class:`InvalidPatternError`.
    """

    layout: tuple[int, ...]
    bc: BC = BC.PBC
    n: int = field(init=False)
    m: int = field(init=False)
    l: int = field(init=False)

    def __post_init__(self):
        lay = tuple(int(x) for x in self.layout)
        if any(x not in (-1, 0, 1) for x in lay):
            raise InvalidPatternError("layout entries must be -1, 0 or +1")
        if not lay:
            raise InvalidPatternError("empty layout")
        bc = BC.parse(self.bc)
        n, m, l = count_pattern(lay, bc)
        if n < 1:
            raise InvalidPatternError("layout has no occupied site")
        object.__setattr__(self, "layout", lay)
        object.__setattr__(self, "bc", bc)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "l", l)

    @classmethod
    def from_layout(cls, layout, bc=BC.PBC, n=None, m=None, l=None) -> "SeedPattern":
        pat = cls(tuple(layout), bc)
        for name, want in (("n", n), ("m", m), ("l", l)):
            if want is not None and getattr(pat, name) != want:
                raise InvalidPatternError(
                    f"declared {name}={want} but layout gives {name}={getattr(pat, name)}"
                )
        return pat

    @property
    def N(self) -> int:
        return len(self.layout)

    @property
    def nml(self) -> tuple[int, int, int]:
        return self.n, self.m, self.l

    def energy(self, c: float) -> float:
        return limit_energy(self.n, self.m, self.l, c)


def canonical_layout(N: int, n: int, m: int, l: int, min_gap: int = 3) -> tuple[int, ...]:
    """One periodic sign layout with the given ``(n, m, l)``.

    The first spot takes ``n - m + 1`` sites and carries all sign changes;
    the other spots are single sites; the ``N - n`` empty sites are shared
    as evenly as possible between the ``m`` gaps. ``m = 0`` means a fully
    occupied ring, which needs ``n = N`` and an even ``l``.
    """
    _check_nml(n, m, l)
    if m == 0:
        if n != N or l % 2:
            raise InvalidPatternError("a fully occupied ring needs n = N and an even l")
        return tuple((-1) ** min(i, max(l - 1, 0)) if l else 1 for i in range(N))
    empty = N - n
    if l > n - m:
        raise InvalidPatternError(f"at most n - m = {n - m} sign changes fit inside the spots")
    if empty < m * min_gap:
        raise InvalidPatternError(f"{m} gaps of at least {min_gap} empty sites need N >= {n + m * min_gap}")
    gaps = [empty // m + (1 if k < empty % m else 0) for k in range(m)]
    sizes = [n - m + 1] + [1] * (m - 1)
    out: list[int] = []
    for k in range(m):
        if k == 0:
            out.extend((-1) ** min(j, l) for j in range(sizes[0]))
        else:
            out.append(1)
        out.extend([0] * gaps[k])
    return tuple(out)


def realizable_patterns(N: int, min_gap: int = 3) -> list[SeedPattern]:
    """One periodic layout for every ``(n, m, l)`` that fits on ``N`` sites with gaps ``>= min_gap``."""
    out = []
    for m in range(0, N + 1):
        for n in range(max(m, 1), N + 1):
            if m == 0 and n != N:
                continue
            if m > 0 and n + m * min_gap > N:
                continue
            top = N if m == 0 else n - m
            for l in range(0, top + 1):
                if m == 0 and l % 2:
                    continue
                out.append(SeedPattern(canonical_layout(N, n, m, l, min_gap)))
    return out


def build_seed(pat: SeedPattern, N: int | None = None, bc: BC | str | None = None) -> LatticeWave:
    """Amplitudes ``layout / sqrt(n)``; unit norm by construction."""
    if N is not None and N != pat.N:
        raise InvalidPatternError(f"layout has {pat.N} entries but N={N}")
    if bc is not None and BC.parse(bc) is not pat.bc:
        # recount under the requested boundary; the layout stays the source of truth
        pat = SeedPattern(pat.layout, BC.parse(bc))
    return LatticeWave(np.asarray(pat.layout, dtype=float) / math.sqrt(pat.n), pat.bc)


def diagnostic_energy(w: LatticeWave, c: float, eps_sum: float | None = None) -> float:
    """Eigenvalue estimate ``-c sum(psi^3) / sum(psi)`` (periodic chains only).

    Exact for any PBC solution, since the discrete Laplacian sums to zero.
    """
    if w.bc is not BC.PBC:
        raise ValueError("the sum-based energy estimate requires periodic boundaries")
    if eps_sum is None:
        eps_sum = default_eps_sum(w.N)
    s = float(np.sum(w.values))
    if abs(s) <= eps_sum:
        raise UndefinedDiagnosticError(
            f"|sum(psi)| = {abs(s):.3e} <= {eps_sum:.3e}; state is sign-balanced"
        )
    return -c * float(np.sum(w.values**3)) / s


def rayleigh_energy(w: LatticeWave, c: float) -> float:
    """Eigenvalue estimate ``<psi, L psi - c psi^3> / <psi, psi>``.

    Defined for every nonzero state and either boundary type; agrees with
    :func:`diagnostic_energy` on exact PBC solutions.
    """
    s = w.norm2
    if s <= 0.0:
        raise UndefinedDiagnosticError("zero state has no energy estimate")
    v = w.values
    left, right = w.neighbors()
    return float(np.dot(v, -left + 2.0 * v - right - c * v**3)) / s


def tail_decay(E: float) -> tuple[float, float]:
    """Per-site decay ratio of a localized tail.

    Returns ``(r_discrete, r_continuum)``: the root in (0, 1) of
    ``r + 1/r = 2 - E`` and ``exp(-sqrt(-E))``.
    """
    if not E < 0:
        raise NoDecayingTailError(f"a decaying tail needs E < 0, got E={E!r}")
    b = 2.0 - E
    r_disc = 2.0 / (b + math.sqrt((b - 2.0) * (b + 2.0)))
    return r_disc, math.exp(-math.sqrt(-E))


def tail_ratios(w: LatticeWave, start: int, length: int, direction: int = 1) -> np.ndarray:
    """Successive ratios ``psi[i+d] / psi[i]`` walking away from ``start``."""
    v = w.values
    N = v.size
    idx = [(start + direction * k) % N for k in range(length + 1)]
    seg = v[idx]
    with np.errstate(divide="ignore", invalid="ignore"):
        return seg[1:] / seg[:-1]
