"""Stationary states of the discrete nonlinear Schrodinger equation.

Two routes to the same solutions: iterating the equation as an
area-preserving 2D map, and Newton refinement of large-coupling seeds.
Phase portraits of either are classified as periodic, quasiperiodic or
chaotic.
"""

from ._kernels import BACKEND
from .classify import ClassifyConfig, PhasePortrait, bloch_check, classify, cluster_points
from .lattice import (
    BC,
    LatticeWave,
    ModelParams,
    NormalizedState,
    SeedPattern,
    build_seed,
    diagnostic_energy,
    gradient,
    hamiltonian,
    limit_energy,
    limit_hamiltonian,
    normalize,
    rescale,
    residual,
    stagger,
    tail_decay,
)
from .mapping import MapState, Orbit, cycle_trace, fixed_points, iterate, jacobian_at, step
from .perturbation import (
    a1_correction,
    build_system,
    energy_correction,
    solve_system,
    surd_series,
    two_site_exact,
)
from .solver import ConvergedState, IterationTrace, Outcome, SolveConfig, newton_step, phase_function, solve

__version__ = "0.1.0"
