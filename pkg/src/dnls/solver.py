"""Newton refinement of large-coupling seeds into exact stationary states.

Each step assembles ``T X = F`` at the current iterate (``T`` the Jacobian of
the residual, ``F`` minus the residual) and updates ``psi <- psi + X``. Since
the Hessian of the energy functional is ``2 T`` and its gradient ``-2 F``,
this is the textbook Newton step on ``grad H = 0``. The eigenvalue ``E0``
stays fixed; the sum-based energy estimate is tracked only as a diagnostic.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NearDegeneracyError, UndefinedDiagnosticError
from .lattice import (
    BC,
    LatticeWave,
    ModelParams,
    SeedPattern,
    count_pattern,
    default_eps_sum,
    diagnostic_energy,
    hamiltonian,
    residual,
)
from .perturbation import CorrectionSystem, build_system, cyclic_solve, solve_system


@dataclass(frozen=True)
class SolveConfig:
    tol: float = 1e-12
    max_iter: int = 100
    e_jump: float = 0.5
    bound: float = 1e8
    damping: bool = False
    eps_sum: float | None = None
    keep_snapshots: bool = False

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if not 0 < self.e_jump <= 1:
            raise ValueError("e_jump must lie in (0, 1]")
        if not self.bound > 0:
            raise ValueError("bound must be positive")


class Outcome(str, enum.Enum):
    CONVERGED = "converged"
    STRUCTURE_CHANGED = "structure_changed"
    DIVERGED = "diverged"
    MAX_ITER = "max_iter"
    DEGENERATE = "degenerate"


@dataclass(frozen=True)
class IterationRecord:
    m: int
    E_m: float | None
    delta_inf: float
    residual_inf: float
    norm2: float
    psi: np.ndarray | None = None


@dataclass
class IterationTrace:
    E0: float
    records: list[IterationRecord] = field(default_factory=list)
    outcome: Outcome | None = None
    structure_change_at: int | None = None
    failed_at: int | None = None
    message: str = ""

    @property
    def iterations(self) -> int:
        return len(self.records)

    @property
    def deltas(self) -> np.ndarray:
        return np.array([r.delta_inf for r in self.records])

    @property
    def final_E(self) -> float | None:
        for r in reversed(self.records):
            if r.E_m is not None:
                return r.E_m
        return None

    def label(self) -> str:
        o = self.outcome.value if self.outcome else "pending"
        at = self.structure_change_at if self.outcome is Outcome.STRUCTURE_CHANGED else self.failed_at
        return f"{o}({at})" if at is not None else o


@dataclass(frozen=True)
class ConvergedState:
    psi: LatticeWave
    E0: float
    E_diag: float | None
    C: float
    H: float
    c: float
    residual_inf: float
    pattern: SeedPattern | None = None


def _scale(w: LatticeWave, p: ModelParams) -> float:
    a = float(np.max(np.abs(w.values)))
    return max(1.0, abs(p.c) * a**3 + abs(p.E) * a + 4.0 * a)


def scaled_residual(w: LatticeWave, p: ModelParams) -> float:
    """Residual max-norm divided by the magnitude of the largest term in the equation."""
    return float(np.max(np.abs(residual(w, p)))) / _scale(w, p)


def newton_system(w: LatticeWave, p: ModelParams) -> CorrectionSystem:
    return build_system(w, p.E, p.c)


def newton_step(w: LatticeWave, p: ModelParams, method: str = "auto", pattern=None) -> tuple[LatticeWave, float]:
    """One Newton update at fixed ``E``; returns the new state and ``max |X|``."""
    X = solve_system(newton_system(w, p), method=method, pattern=pattern)
    return LatticeWave(w.values + X, w.bc), float(np.max(np.abs(X)))


def _energy_or_none(w: LatticeWave, c: float, eps_sum: float | None) -> float | None:
    if w.bc is not BC.PBC:
        return None
    try:
        return diagnostic_energy(w, c, eps_sum)
    except UndefinedDiagnosticError:
        return None


def identify_pattern(w: LatticeWave, threshold: float = 0.5) -> SeedPattern:
    """Coarse occupancy layout: sites with ``|psi| >= threshold * max|psi|``."""
    v = w.values
    amax = float(np.max(np.abs(v)))
    if amax == 0.0:
        raise ValueError("zero state has no occupancy pattern")
    lay = np.where(np.abs(v) >= threshold * amax, np.sign(v), 0).astype(int)
    return SeedPattern(tuple(lay), w.bc)


def solve(
    seed: LatticeWave,
    p: ModelParams,
    cfg: SolveConfig | None = None,
    method: str = "auto",
) -> tuple[ConvergedState | None, IterationTrace]:
    """Iterate Newton steps from ``seed`` at fixed ``(c, E0)``.

    A structure change is flagged when the sum-based energy estimate jumps by
    more than ``e_jump * max(1, |E0|)`` between consecutive iterations (from
    the second iteration on). Iteration continues after a flag; the trace
    records where it happened.
    """
    cfg = cfg or SolveConfig()
    eps = cfg.eps_sum if cfg.eps_sum is not None else default_eps_sum(p.N)
    trace = IterationTrace(E0=p.E)
    try:
        seed_pattern = identify_pattern(seed)
    except ValueError:
        seed_pattern = None
    nml = seed_pattern.nml if seed_pattern is not None else None
    w = seed
    prev_E = None
    res_prev = float(np.max(np.abs(residual(w, p))))
    for m in range(1, cfg.max_iter + 1):
        try:
            sys = newton_system(w, p)
            X = solve_system(sys, method=method, pattern=nml)
        except NearDegeneracyError as exc:
            trace.outcome = Outcome.DEGENERATE
            trace.failed_at = m
            trace.message = str(exc)
            return None, trace
        new = w.values + X
        res_new = float(np.max(np.abs(residual(LatticeWave(new, w.bc), p)))) if np.all(np.isfinite(new)) else math.inf
        if cfg.damping and res_new > res_prev:
            lam = 1.0
            for _ in range(10):
                lam *= 0.5
                trial = w.values + lam * X
                r = float(np.max(np.abs(residual(LatticeWave(trial, w.bc), p))))
                if r < res_prev:
                    X = lam * X
                    new, res_new = trial, r
                    break
        delta = float(np.max(np.abs(X)))
        if not np.all(np.isfinite(new)) or np.max(np.abs(new)) > cfg.bound:
            trace.records.append(IterationRecord(m, None, delta, math.inf, math.inf))
            trace.outcome = Outcome.DIVERGED
            trace.failed_at = m
            trace.message = f"amplitude exceeded bound {cfg.bound:g}"
            return None, trace
        w = LatticeWave(new, w.bc)
        E_m = _energy_or_none(w, p.c, eps)
        trace.records.append(
            IterationRecord(m, E_m, delta, res_new, w.norm2, w.values.copy() if cfg.keep_snapshots else None)
        )
        if (
            trace.structure_change_at is None
            and m >= 2
            and E_m is not None
            and prev_E is not None
            and abs(E_m - prev_E) > cfg.e_jump * max(1.0, abs(p.E))
        ):
            trace.structure_change_at = m
        prev_E = E_m
        res_prev = res_new
        if delta < cfg.tol:
            trace.outcome = Outcome.STRUCTURE_CHANGED if trace.structure_change_at else Outcome.CONVERGED
            return _finish(w, p, eps, res_new), trace
    trace.outcome = Outcome.MAX_ITER
    trace.failed_at = cfg.max_iter
    return None, trace


def _finish(w: LatticeWave, p: ModelParams, eps: float, res: float) -> ConvergedState:
    try:
        pat = identify_pattern(w)
    except ValueError:
        pat = None
    return ConvergedState(
        psi=w,
        E0=p.E,
        E_diag=_energy_or_none(w, p.c, eps),
        C=p.c * w.norm2,
        H=hamiltonian(w, p),
        c=p.c,
        residual_inf=res,
        pattern=pat,
    )


def convergence_orders(deltas, floor: float = 1e-14) -> np.ndarray:
    """Observed orders ``log(d[k+1]/d[k]) / log(d[k]/d[k-1])`` above a rounding floor."""
    d = np.asarray([x for x in deltas if x > floor], dtype=float)
    if d.size < 3:
        return np.empty(0)
    lg = np.log(d)
    return (lg[2:] - lg[1:-1]) / (lg[1:-1] - lg[:-2])


def phase_function(w: LatticeWave) -> np.ndarray:
    """Points ``(psi_i, Z_i)`` with ``Z_i = psi_{i+1} - psi_i``.

    PBC wraps the last difference (N points); OBC omits it (N - 1 points).
    """
    v = w.values
    if w.bc is BC.PBC:
        return np.column_stack([v, np.roll(v, -1) - v])
    return np.column_stack([v[:-1], np.diff(v)])


def refine_mp(w: LatticeWave, p: ModelParams, dps: int, iterations: int | None = None, tol=None) -> list:
    """Polish a converged state with Newton steps in ``mpmath`` arithmetic.

    Starting from a double-precision solution, each step roughly doubles the
    number of correct digits. Returns the amplitudes as a list of mpf values
    accurate to about ``dps`` digits.
    """
    import mpmath

    from ._kernels import _pykernels

    N = w.N
    periodic = w.bc is BC.PBC
    with mpmath.workdps(dps + 10):
        c, E = mpmath.mpf(p.c), mpmath.mpf(p.E)
        psi = [mpmath.mpf(float(x)) for x in w.values]
        tol = tol if tol is not None else mpmath.mpf(10) ** (-dps)
        n_iter = iterations if iterations is not None else 2 + int(math.ceil(math.log2(max(dps / 14.0, 1.0)))) + 2
        for _ in range(n_iter):
            if periodic:
                left = [psi[(i - 1) % N] for i in range(N)]
                right = [psi[(i + 1) % N] for i in range(N)]
            else:
                left = [mpmath.mpf(0)] + psi[:-1]
                right = psi[1:] + [mpmath.mpf(0)]
            F = [E * q + c * q**3 + a - 2 * q + b for q, a, b in zip(psi, left, right)]
            diag = [2 - E - 3 * c * q**2 for q in psi]
            if N >= 3:
                X, _ = cyclic_solve(diag, F, periodic, tridiag=_pykernels.tridiag_solve)
            else:
                T = mpmath.matrix(CorrectionSystem(np.zeros(N), np.zeros(N), w.bc).matrix().tolist())
                for i in range(N):
                    T[i, i] += diag[i]
                X = list(mpmath.lu_solve(T, mpmath.matrix(F)))
            psi = [q + x for q, x in zip(psi, X)]
            if max(abs(x) for x in X) < tol:
                break
    return psi


def count_nml(w: LatticeWave, threshold: float = 0.5) -> tuple[int, int, int]:
    return count_pattern(identify_pattern(w, threshold).layout, w.bc)


def map_reconstruction_error(w: LatticeWave, p: ModelParams, dps: int | None = None) -> float:
    """Rebuild a periodic state from ``(Z_1, psi_1)`` with the 2D map; return the max error.

    Iterating the map amplifies any initial error by up to ``max_growth``
    per site, so the state is first polished with :func:`refine_mp` and the
    map is run at a working precision that covers the total amplification.
    The error is measured against the double-precision amplitudes.
    """
    from .mapping import iterate_mp, max_growth

    if w.bc is not BC.PBC:
        raise ValueError("map reconstruction needs periodic boundaries")
    N = w.N
    if dps is None:
        dps = 30 + int(math.ceil(N * math.log10(max_growth(w.values, p))))
    import mpmath

    psi = refine_mp(w, p, dps)
    with mpmath.workdps(dps + 10):
        z0 = psi[0] - psi[-1]
    steps = iterate_mp((z0, psi[0]), p, N - 1, dps + 10)
    rebuilt = np.array([float(q) for _, q in steps])
    return float(np.max(np.abs(rebuilt - w.values)))
