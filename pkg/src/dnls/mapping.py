"""The stationary equation as an area-preserving 2D map.

With ``Z_i = psi_i - psi_{i-1}`` the three-term recursion becomes::

    Z_{i+1}   = Z_i - E psi_i - c psi_i^3
    psi_{i+1} = psi_i + Z_{i+1}

Stability of a cycle is judged with the transfer matrices
``[[2 - E - 3 c psi_i^2, -1], [1, 0]]``, which are conjugate to the step
Jacobians of the map and so give the same trace over any closed segment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from . import _kernels
from .lattice import ModelParams

DEFAULT_BOUND = 1e8
MARGINAL_RTOL = 1e-12


class MapDivergence(ArithmeticError):
    """A map step overflowed to a non-finite value."""


class MapState(NamedTuple):
    Z: float
    psi: float


class Jacobian2(NamedTuple):
    a: float
    b: float
    c: float
    d: float

    @property
    def det(self) -> float:
        return self.a * self.d - self.b * self.c

    @property
    def trace(self) -> float:
        return self.a + self.d

    def as_array(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.c, self.d]])


@dataclass(frozen=True)
class Orbit:
    """Visited map states, one row ``(Z, psi)`` per step.

    ``diverged_at`` is ``None`` for a completed orbit. Otherwise it is the
    step whose state first left the bounding box; that state is the last row.
    """

    states: np.ndarray
    diverged_at: int | None = None

    @property
    def Z(self) -> np.ndarray:
        return self.states[:, 0]

    @property
    def psi(self) -> np.ndarray:
        return self.states[:, 1]

    @property
    def status(self) -> str:
        return "completed" if self.diverged_at is None else f"diverged({self.diverged_at})"

    @property
    def completed(self) -> bool:
        return self.diverged_at is None

    def __len__(self) -> int:
        return len(self.states)

    def points(self) -> np.ndarray:
        """Phase-portrait points ``(psi, Z)``."""
        return self.states[:, ::-1].copy()


def step(s: MapState, p: ModelParams) -> MapState:
    Z, psi = float(s[0]), float(s[1])
    Z1 = Z - p.E * psi - p.c * psi * psi * psi
    psi1 = psi + Z1
    if not (math.isfinite(Z1) and math.isfinite(psi1)):
        raise MapDivergence(f"map step from {tuple(s)} overflowed")
    return MapState(Z1, psi1)


def step_inverse(s: MapState, p: ModelParams) -> MapState:
    """Undo :func:`step`: recover ``(Z_i, psi_i)`` from ``(Z_{i+1}, psi_{i+1})``."""
    Z1, psi1 = float(s[0]), float(s[1])
    psi = psi1 - Z1
    Z = Z1 + p.E * psi + p.c * psi * psi * psi
    return MapState(Z, psi)


def iterate(s0: MapState, p: ModelParams, steps: int, bound: float = DEFAULT_BOUND) -> Orbit:
    if steps < 0:
        raise ValueError("steps must be >= 0")
    if not bound > 0:
        raise ValueError("bound must be positive")
    zs, ps, k = _kernels.iterate_map(s0[0], s0[1], p.c, p.E, steps, bound)
    return Orbit(np.column_stack([zs, ps]), None if k < 0 else int(k))


def iterate_mp(s0, p: ModelParams, steps: int, dps: int) -> list[tuple]:
    """Iterate the map in ``mpmath`` arithmetic at ``dps`` decimal digits.

    ``s0`` entries may be floats or mpf values; returns a list of ``(Z, psi)``
    mpf pairs including the start.
    """
    import mpmath

    with mpmath.workdps(dps):
        z, q = mpmath.mpf(s0[0]), mpmath.mpf(s0[1])
        c, E = mpmath.mpf(p.c), mpmath.mpf(p.E)
        out = [(z, q)]
        for _ in range(steps):
            z = z - E * q - c * q**3
            q = q + z
            out.append((z, q))
    return out


def step_jacobian(s: MapState, p: ModelParams) -> Jacobian2:
    """Jacobian of :func:`step` in the ``(Z, psi)`` coordinates."""
    k = -p.E - 3.0 * p.c * float(s[1]) ** 2
    return Jacobian2(1.0, k, 1.0, 1.0 + k)


def jacobian_at(psi: float, p: ModelParams) -> Jacobian2:
    """Transfer matrix ``[[2 - E - 3 c psi^2, -1], [1, 0]]``; determinant 1."""
    return Jacobian2(2.0 - p.E - 3.0 * p.c * psi * psi, -1.0, 1.0, 0.0)


def cycle_trace_scaled(cycle: Sequence[float], p: ModelParams) -> tuple[float, int]:
    """Trace of the transfer product as ``(mantissa, exp2)``.

    ``trace = mantissa * 2**exp2``; the running product is renormalized so
    long or strongly unstable cycles never overflow.
    """
    psi = np.asarray(cycle, dtype=float).reshape(-1)
    if psi.size == 0:
        raise ValueError("cycle must contain at least one site")
    return _kernels.transfer_trace(psi, p.c, p.E)


def cycle_trace(cycle: Sequence[float], p: ModelParams) -> float:
    """Trace of the ordered transfer-matrix product; ``+-inf`` if unrepresentable."""
    m, e = cycle_trace_scaled(cycle, p)
    try:
        return math.ldexp(m, e)
    except OverflowError:
        return math.copysign(math.inf, m)


def cycle_trace_log10(cycle: Sequence[float], p: ModelParams) -> tuple[float, float]:
    """``(sign, log10 |trace|)`` of the transfer product, overflow-safe."""
    m, e = cycle_trace_scaled(cycle, p)
    if m == 0.0:
        return 0.0, -math.inf
    return math.copysign(1.0, m), math.log10(abs(m)) + e * math.log10(2.0)


def stability(trace: float, rtol: float = MARGINAL_RTOL) -> str:
    """``"stable"`` for ``|tr| < 2``, ``"marginal"`` at ``|tr| = 2``, else ``"unstable"``."""
    a = abs(trace)
    if abs(a - 2.0) <= rtol * 2.0:
        return "marginal"
    return "stable" if a < 2.0 else "unstable"


class FixedPoint(NamedTuple):
    state: MapState
    trace: float
    stability: str

    @property
    def stable(self) -> bool:
        return self.stability == "stable"


def fixed_points(p: ModelParams) -> list[FixedPoint]:
    """The origin and, when ``-E/c >= 0``, the pair ``(Z, psi) = (0, +-sqrt(-E/c))``."""
    out = []
    tr0 = cycle_trace([0.0], p)
    out.append(FixedPoint(MapState(0.0, 0.0), tr0, stability(tr0)))
    if p.c != 0.0 and p.E != 0.0 and -p.E / p.c >= 0.0:
        r = math.sqrt(-p.E / p.c)
        for s in (r, -r):
            tr = cycle_trace([s], p)
            out.append(FixedPoint(MapState(0.0, s), tr, stability(tr)))
    return out


def max_growth(psi: Sequence[float], p: ModelParams) -> float:
    """Upper bound on the per-step error amplification along ``psi``.

    Uses the infinity norm ``|2 - E - 3 c psi_i^2| + 1`` of each transfer
    matrix; the product of these bounds how fast rounding errors can grow
    when the recursion is iterated.
    """
    t = 2.0 - p.E - 3.0 * p.c * np.asarray(psi, dtype=float) ** 2
    return float(np.abs(t).max()) + 1.0 if t.size else 1.0
