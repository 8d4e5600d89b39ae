from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from dnls.errors import (
    DimensionError,
    InvalidPatternError,
    InvalidScaleError,
    NoDecayingTailError,
    NormalizationError,
    UndefinedDiagnosticError,
)
from dnls.lattice import (
    BC,
    LatticeWave,
    ModelParams,
    SeedPattern,
    build_seed,
    canonical_layout,
    count_pattern,
    diagnostic_energy,
    gradient,
    hamiltonian,
    limit_energy,
    limit_hamiltonian,
    normalize,
    rayleigh_energy,
    realizable_patterns,
    rescale,
    residual,
    stagger,
    tail_decay,
    tail_ratios,
)

amps = st.floats(-2, 2, allow_nan=False)
coupling = st.floats(-20, 20, allow_nan=False)


def loop_residual(psi, c, E, periodic):
    N = len(psi)
    out = []
    for i in range(N):
        if periodic:
            left, right = psi[(i - 1) % N], psi[(i + 1) % N]
        else:
            left = psi[i - 1] if i > 0 else 0.0
            right = psi[i + 1] if i < N - 1 else 0.0
        out.append(-left + 2 * psi[i] - right - c * psi[i] ** 3 - E * psi[i])
    return np.array(out)


def loop_hamiltonian(psi, c, E, periodic):
    N = len(psi)
    ext = list(psi) + [psi[0]] if periodic else [0.0] + list(psi) + [0.0]
    bonds = sum((ext[k] - ext[k + 1]) ** 2 for k in range(len(ext) - 1))
    return bonds - c / 2 * sum(x**4 for x in psi) - E * sum(x * x for x in psi)


@given(arrays(float, st.integers(1, 12), elements=amps), coupling, coupling, st.sampled_from(["pbc", "obc"]))
def test_residual_and_energy_match_loop_oracles(v, c, E, bc):
    w = LatticeWave(v, bc)
    p = ModelParams(c, E, v.size, bc)
    np.testing.assert_allclose(residual(w, p), loop_residual(v, c, E, bc == "pbc"), atol=1e-9)
    assert hamiltonian(w, p) == pytest.approx(loop_hamiltonian(v, c, E, bc == "pbc"), abs=1e-8)


@given(arrays(float, st.integers(3, 12), elements=amps), coupling, coupling, st.sampled_from(["pbc", "obc"]))
def test_gradient_is_twice_residual(v, c, E, bc):
    w = LatticeWave(v, bc)
    p = ModelParams(c, E, v.size, bc)
    np.testing.assert_allclose(gradient(w, p), 2 * residual(w, p), atol=1e-9)


@given(
    st.integers(1, 6).flatmap(lambda k: arrays(float, 2 * k, elements=amps)),
    coupling,
    coupling,
)
def test_stagger_maps_residual_to_signed_residual(v, c, E):
    w = LatticeWave(v)
    x, E2 = stagger(w, E)
    assert E2 == 4 - E
    r = residual(w, ModelParams(c, E, v.size))
    r2 = residual(x, ModelParams(-c, E2, v.size))
    signs = (-1.0) ** np.arange(v.size)
    np.testing.assert_allclose(r2, -signs * r, atol=1e-9)


@given(arrays(float, st.integers(1, 10), elements=amps), st.floats(0.1, 5), coupling, coupling)
def test_rescaling_keeps_solutions_and_defect_scales(v, beta, c, E):
    w = LatticeWave(v)
    w2, c2 = rescale(w, c, beta)
    assert c2 == pytest.approx(c / beta**2)
    r = residual(w, ModelParams(c, E, v.size))
    r2 = residual(w2, ModelParams(c2, E, v.size))
    np.testing.assert_allclose(r2, beta * r, atol=1e-8)


def test_rescale_rejects_zero():
    with pytest.raises(InvalidScaleError):
        rescale(LatticeWave([1.0]), 1.0, 0.0)


def test_normalize():
    ns = normalize(LatticeWave([3.0, 4.0]), 2.0)
    assert ns.psi.norm2 == pytest.approx(1.0)
    assert ns.C == pytest.approx(50.0)
    with pytest.raises(NormalizationError):
        normalize(LatticeWave([0.0, 0.0]), 1.0)


def test_wave_validation():
    with pytest.raises(DimensionError):
        LatticeWave([])
    with pytest.raises(ValueError):
        LatticeWave([1.0, math.nan])
    w = LatticeWave([1.0, 2.0])
    with pytest.raises(ValueError):
        w.values[0] = 5.0
    with pytest.raises(DimensionError):
        residual(w, ModelParams(1, 1, 3))
    with pytest.raises(DimensionError):
        residual(w, ModelParams(1, 1, 2, "obc"))
    with pytest.raises(ValueError):
        BC.parse("helical")


@pytest.mark.parametrize(
    "layout,bc,expected",
    [
        ((1, 0, 0, 0, 1, 0, 0, 0), "pbc", (2, 2, 0)),
        ((1, 1, 0, 1), "pbc", (3, 1, 0)),  # run wraps around
        ((1, -1, 0, 0), "pbc", (2, 1, 1)),
        ((1, -1), "pbc", (2, 0, 2)),  # both bonds of the two-site ring change sign
        ((1, 1, 1, 1), "pbc", (4, 0, 0)),
        ((1, -1, 1, -1), "pbc", (4, 0, 4)),
        ((1, 1, 0, 1), "obc", (3, 2, 0)),
        ((-1, 1, 0, 0, -1), "obc", (3, 2, 1)),
    ],
)
def test_count_pattern(layout, bc, expected):
    assert count_pattern(layout, bc) == expected


def test_seed_pattern_and_declared_counts():
    pat = SeedPattern.from_layout((1, 1, 0, 0, -1, 0), n=3, m=2, l=0)
    assert pat.nml == (3, 2, 0)
    with pytest.raises(InvalidPatternError):
        SeedPattern.from_layout((1, 1, 0, 0, -1, 0), m=1)
    with pytest.raises(InvalidPatternError):
        SeedPattern((0, 0, 0))
    with pytest.raises(InvalidPatternError):
        SeedPattern((2, 0))
    w = build_seed(pat)
    assert w.norm2 == pytest.approx(1.0)
    np.testing.assert_allclose(w.values, np.array([1, 1, 0, 0, -1, 0]) / math.sqrt(3))


def test_limit_formulas():
    assert limit_energy(4, 4, 0, 10) == -0.5
    assert limit_energy(12, 12, 0, 84) == -5.0
    assert limit_energy(1, 1, 0, 7) == 2 - 7
    assert limit_hamiltonian(4, 10) == 1.25
    with pytest.raises(InvalidPatternError):
        limit_energy(2, 3, 0, 1.0)


@pytest.mark.parametrize("N", [6, 8, 12, 16])
def test_seed_energy_matches_limit_hamiltonian(N):
    # the seed itself already has H = c/(2n) at E = limit energy
    for pat in realizable_patterns(N):
        c = 37.0
        p = ModelParams(c, pat.energy(c), N)
        assert hamiltonian(build_seed(pat), p) == pytest.approx(limit_hamiltonian(pat.n, c))


def test_canonical_layout_reproduces_counts():
    for N in (6, 8, 12):
        pats = realizable_patterns(N)
        assert len({p.nml for p in pats}) == len(pats)
        for pat in pats:
            assert canonical_layout(N, *pat.nml) == pat.layout
    assert sum(len(realizable_patterns(N)) for N in (6, 8, 12)) == 99
    with pytest.raises(InvalidPatternError):
        canonical_layout(6, 2, 2, 0)  # two gaps of 3 need 8 sites
    with pytest.raises(InvalidPatternError):
        canonical_layout(6, 6, 0, 1)


def test_diagnostic_energy_exact_for_solutions():
    # uniform state: 2 - 2 - c a^2 = E  =>  E = -c a^2
    a, c = 0.3, 5.0
    w = LatticeWave(np.full(6, a))
    assert diagnostic_energy(w, c) == pytest.approx(-c * a * a)
    assert rayleigh_energy(w, c) == pytest.approx(-c * a * a)
    with pytest.raises(UndefinedDiagnosticError):
        diagnostic_energy(LatticeWave([1.0, -1.0, 0.5, -0.5]), c)
    with pytest.raises(ValueError):
        diagnostic_energy(LatticeWave([1.0, 1.0], "obc"), c)


def test_tail_decay_values():
    r, rc = tail_decay(-5.0)
    assert r + 1 / r == pytest.approx(7.0)
    assert 0 < r < 1
    assert rc == pytest.approx(math.exp(-math.sqrt(5)))
    # small |E|: discrete and continuum rates agree to leading order
    r, rc = tail_decay(-1e-4)
    assert r == pytest.approx(rc, rel=1e-5)
    with pytest.raises(NoDecayingTailError):
        tail_decay(0.0)


def test_tail_ratios_on_exact_exponential():
    r = tail_decay(-2.0)[0]
    w = LatticeWave(r ** np.arange(10))
    np.testing.assert_allclose(tail_ratios(w, 0, 5), r)
    np.testing.assert_allclose(tail_ratios(w, 5, 3, direction=-1), 1 / r)
