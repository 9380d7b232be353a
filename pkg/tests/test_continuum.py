import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from entangled_transport.continuum import (ContinuumParams, evolve_slice, fbar, fbar_scalar, influence,
                                           influence_quadrature, influence_single, momentum_distribution,
                                           momentum_marginals)
from entangled_transport.disorder import DisorderSpec
from entangled_transport.errors import GridAliasing
from entangled_transport.states import TwoParticleGaussianState, paper_case

# closed form evaluated once at C0 = hbar^2 v^2 / l^2, t = 10 l / v, x = 5 l
F1_GOLDEN = 7.862269254527711

coord = st.floats(-30, 30)
params_st = st.builds(lambda v, t, c0, ell: ContinuumParams(v=v, t=t, disorder=DisorderSpec(c0=c0, ell=ell)),
                      st.floats(0.2, 3), st.floats(0, 50), st.floats(0, 3), st.floats(0.2, 4))


def test_fbar_examples():
    assert fbar_scalar(0.0) == pytest.approx(1 / math.sqrt(math.pi), abs=1e-16)
    assert fbar_scalar(0.0) == pytest.approx(0.5642, abs=5e-5)
    assert fbar_scalar(10.0) == pytest.approx(10.0, abs=1e-12)
    xs = np.linspace(-7, 7, 141)
    assert np.array_equal(fbar(xs), fbar(-xs))
    assert np.allclose(fbar(xs), [fbar_scalar(x) for x in xs], rtol=1e-14)


def test_influence_single_examples():
    p = ContinuumParams(t=10.0)
    assert influence_single(p, 0.0) == 0.0
    assert influence_single(ContinuumParams(t=0.0), 5.0) == 0.0
    assert influence_single(p, 5.0) == pytest.approx(F1_GOLDEN, rel=1e-13)
    # single-particle restriction of the q-space route: F(d, 0; 0, 0) = 4 F1(d)
    q = influence_quadrature(p, 5.0, 0.0, 0.0, 0.0, epsabs=1e-11)
    assert q / 4 == pytest.approx(F1_GOLDEN, rel=1e-9)


@pytest.mark.parametrize("d", [1.0, 5.0, 20.0])
def test_sigma_sum_reduces_to_single_particle(d):
    p = ContinuumParams(t=25.0)
    f = influence(p, d, 0.0, 0.0, 0.0)
    assert f == pytest.approx(4 * influence_single(p, d), rel=1e-14)
    assert f == pytest.approx(influence_quadrature(p, d, 0.0, 0.0, 0.0, epsabs=1e-10), rel=1e-6)


@settings(max_examples=40, deadline=None)
@given(params_st, coord, coord, coord, coord)
def test_closed_form_matches_quadrature(p, a, b, c, d):
    p = dataclasses.replace(p, t=min(p.t, 20.0), disorder=DisorderSpec(c0=max(p.disorder.c0, 0.1),
                                                                           ell=max(p.disorder.ell, 0.5)))
    a, b, c, d = (x / 3 for x in (a, b, c, d))
    f = influence(p, a, b, c, d)
    q = influence_quadrature(p, a, b, c, d, epsabs=1e-11)
    assert abs(f - q) <= 1e-6 * abs(q) + 1e-9


@given(params_st, coord, coord)
def test_mirror_and_diagonal_vanish(p, xc, xr):
    assert influence(p, xc, xr, xc, -xr) == 0.0
    assert influence(p, xc, xr, xc, xr) == 0.0


@given(params_st, coord, coord, coord, coord, st.floats(-50, 50))
def test_influence_symmetries(p, a, b, c, d, s):
    f = influence(p, a, b, c, d)
    assert f >= 0.0
    assert influence(p, c, d, a, b) == pytest.approx(f, rel=1e-12, abs=1e-12)
    assert influence(p, a, -b, c, -d) == pytest.approx(f, rel=1e-12, abs=1e-12)
    scale = 1 + abs(s) + abs(a) + abs(c)
    assert influence(p, a + s, b, c + s, d) == pytest.approx(f, abs=1e-12 * scale * max(1.0, p.strength * p.t))


@given(params_st, coord, coord, coord, coord)
def test_monotone_single_particle_and_saturates(p, a, b, c, d):
    ts = [0.0, 1.0, 3.0, 10.0, 30.0, 100.0]
    single = [influence_single(dataclasses.replace(p, t=t), a) for t in ts]
    cm_only = [influence(dataclasses.replace(p, t=t), a, 0.0, c, 0.0) for t in ts]
    for vals in (single, cm_only):
        assert vals[0] == 0.0
        assert all(y >= x - 1e-9 * max(1.0, abs(x)) for x, y in zip(vals, vals[1:]))
    # once v t exceeds every separation by many l the value no longer changes
    big = 10 * (abs(a - c) + abs(b) + abs(d) + 10 * p.disorder.ell) / p.v
    f1 = influence(dataclasses.replace(p, t=big), a, b, c, d)
    f2 = influence(dataclasses.replace(p, t=2 * big), a, b, c, d)
    assert f2 == pytest.approx(f1, rel=1e-9, abs=1e-9)


def test_two_particle_influence_can_decrease_in_time():
    # F(0, 0; 0, 2) = 4 F1(1) - F1(2) peaks near v t = 2 l; both routes agree
    p = ContinuumParams()
    vals = []
    for t in (2.0, 10.0):
        pt = dataclasses.replace(p, t=t)
        f = influence(pt, 0.0, 0.0, 0.0, 2.0)
        assert f == pytest.approx(influence_quadrature(pt, 0.0, 0.0, 0.0, 2.0, epsabs=1e-11), rel=1e-9)
        vals.append(f)
    assert vals[0] > vals[1] > 0


def test_slice_at_t0_is_initial_state():
    state, p = paper_case("ii")
    p0 = dataclasses.replace(p, t=0.0)
    ax = np.linspace(-20, 20, 41)
    for kind in ("cm", "rel"):
        sl = evolve_slice(p0, state, kind, ax, ax)
        A, B = np.meshgrid(ax, ax, indexing="ij")
        if kind == "rel":
            ref = state.amplitude(0.0, A) * np.conj(state.amplitude(0.0, B))
        else:
            ref = state.amplitude(A, state.x_R) * np.conj(state.amplitude(B, state.x_R))
        assert np.allclose(sl.values, ref, rtol=0, atol=1e-15)


def test_rel_slice_mirror_coherences_survive():
    state, p = paper_case("i")
    ax = np.linspace(-15, 15, 61)
    sl = evolve_slice(p, state, "rel", ax, ax)
    init = evolve_slice(dataclasses.replace(p, t=0.0), state, "rel", ax, ax)
    anti = np.abs(np.fliplr(sl.values).diagonal())
    assert np.allclose(anti, np.abs(np.fliplr(init.values).diagonal()), rtol=1e-14, atol=0)
    # 4 l away from the mirror point the inter-branch coherence is damped
    i, j = 13, 55
    assert sl.values[i, j] == pytest.approx(init.values[i, j] * math.exp(-influence(p, 0, ax[i], 0, ax[j])))
    assert abs(sl.values[i, j]) < 1e-2 * abs(init.values[i, j])
    assert np.allclose(sl.values, sl.values.conj().T, atol=1e-15)


def test_diag_slice_unaffected_and_normalised():
    state, p = paper_case("ii")
    ax = np.linspace(-40, 40, 641)
    sl = evolve_slice(p, state, "diag", ax, ax)
    sl0 = evolve_slice(dataclasses.replace(p, t=0.0), state, "diag", ax, ax)
    assert np.array_equal(sl.values, sl0.values)
    assert np.all(sl.values >= 0) and np.isrealobj(sl.values)
    tr = np.trapezoid(np.trapezoid(sl.values, ax, axis=1), ax)
    assert tr == pytest.approx(1.0, abs=1e-3)


def test_lab_frame_translates():
    state, p = paper_case("i")
    ax = np.linspace(-15, 15, 31)
    com = evolve_slice(p, state, "cm", ax, ax, frame="comoving")
    lab = evolve_slice(p, state, "cm", ax + p.v * p.t, ax + p.v * p.t, frame="lab")
    assert np.allclose(com.values, lab.values, atol=1e-14)
    with pytest.raises(ValueError):
        evolve_slice(p, state, "cm", ax, ax, frame="rotating")


def _analytic_t0(state, P, p):
    hb = state.hbar
    out = []
    for a, (c, w), x in ((state.a_cm, state.cm_branches(), P), (state.a_rel, state.rel_branches(), p)):
        n2 = state._norm(a, c, w) ** 2
        phase = np.abs(np.exp(-1j * np.outer(x, c) / hb) @ w) ** 2
        out.append(n2 * (math.pi / a) / (2 * math.pi * hb) * np.exp(-x**2 / (2 * a * hb**2)) * phase)
    return np.outer(out[0], out[1])


@pytest.mark.parametrize("tag", ["i", "ii", "iii", "iv"])
def test_t0_momentum_distribution_matches_two_slit_form(tag):
    state, p = paper_case(tag)
    p0 = dataclasses.replace(p, t=0.0)
    P = np.linspace(-4, 4, 41)
    q = np.linspace(-1.5, 1.5, 301)
    dist = momentum_distribution(p0, state, P, q)
    ref = _analytic_t0(state, P, q)
    assert np.max(np.abs(dist.values - ref)) <= 1e-8 * ref.max()


def test_t0_pattern_independent_of_mirror_mismatch():
    P = np.linspace(-3, 3, 13)
    q = np.linspace(-1, 1, 201)
    pats = []
    for tag in ("i", "ii", "iii"):
        state, p = paper_case(tag)
        pats.append(momentum_distribution(dataclasses.replace(p, t=0.0), state, P, q).values)
    assert np.allclose(pats[0], pats[1], atol=1e-10) and np.allclose(pats[0], pats[2], atol=1e-10)


def test_evolved_distribution_normalised_and_marginals_consistent():
    state, p = paper_case("ii")
    dist = momentum_distribution(p, state)
    assert dist.norm == pytest.approx(1.0, abs=1e-4)
    m_cm, m_rel = momentum_marginals(p, state, dist.p_cm_grid, dist.p_rel_grid)
    assert np.allclose(dist.marginal_rel(), m_rel, atol=2e-3 * m_rel.max())
    assert np.allclose(dist.marginal_cm(), m_cm, atol=2e-3 * m_cm.max())


def test_single_branch_has_no_fringes():
    state = TwoParticleGaussianState(kind="single", x_L=-10, x_R=10)
    p0 = ContinuumParams(t=0.0)
    q = np.linspace(-1, 1, 201)
    dist = momentum_distribution(p0, state, np.array([0.0]), q)
    prof = dist.values[0] / dist.values[0].max()
    assert np.allclose(prof, np.exp(-2 * q**2), atol=1e-12)


def test_aliasing_errors():
    state, p = paper_case("i")
    with pytest.raises(GridAliasing):
        momentum_distribution(p, state, dr=3.0)
    with pytest.raises(GridAliasing):
        momentum_distribution(p, state, np.array([0.0]), np.array([0.0, 100.0]))
