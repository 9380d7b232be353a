import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from entangled_transport.continuum import ContinuumParams, modular_period, momentum_distribution
from entangled_transport.errors import GridTooCoarse, NoFringesResolved
from entangled_transport.modular import (THRESHOLD, ModularPartition, criterion, default_partition,
                                         fringe_visibility, integer_variance, modular_momentum_variance,
                                         modular_reduce_momentum, modular_reduce_position, visibility)
from entangled_transport.states import TwoParticleGaussianState, paper_case
from oracles import modular_variance_charfn

UNPERTURBED = 1 / 6 - 1 / (2 * math.pi**2)


def test_position_reduction_examples():
    part = ModularPartition(delta=20.0, origin_velocity=1.0)
    assert modular_reduce_position(3.0, 3.0, part) == (0, 0.0)
    assert modular_reduce_position(28.0, 3.0, part) == (1, 5.0)
    assert modular_reduce_position(0.0, 3.0, part) == (-1, 17.0)


def test_momentum_reduction_examples():
    part = ModularPartition(delta=20.0)
    h_d = part.momentum_period
    assert modular_reduce_momentum(0.0, part) == (0, 0.0)
    n, pb = modular_reduce_momentum(h_d, part)
    assert n == 1 and pb == pytest.approx(0.0, abs=1e-15)
    n, pb = modular_reduce_momentum(0.6 * h_d, part)
    assert n == 1 and pb == pytest.approx(-0.4 * h_d, rel=1e-13)


def test_position_reduction_rounding_below_zero():
    # 7.3 / 0.1 floors to 73 but 73 * 0.1 exceeds 7.3
    n, xb = modular_reduce_position(7.3, 0.0, ModularPartition(delta=0.1))
    assert 0 <= xb < 0.1
    assert n * 0.1 + xb == pytest.approx(7.3, abs=1e-12)


@given(st.floats(-1e4, 1e4), st.floats(0, 100), st.floats(0.1, 50), st.floats(-3, 3))
def test_reconstruction_identities(x, t, delta, v):
    part = ModularPartition(delta=delta, origin_velocity=v)
    n, xb = modular_reduce_position(x, t, part)
    assert 0 <= xb < delta
    assert n * delta + xb == pytest.approx(x - v * t, abs=1e-9 * (1 + abs(x) + abs(v * t)))
    m, pb = modular_reduce_momentum(x, part)
    per = part.momentum_period
    assert -per / 2 <= pb < per / 2
    assert m * per + pb == pytest.approx(x, abs=1e-9 * (1 + abs(x)))


def test_reduction_vectorised():
    part = ModularPartition(delta=7.0)
    x = np.linspace(-50, 50, 1001)
    n, xb = modular_reduce_position(x, 0.0, part)
    assert n.dtype.kind == "i" and xb.shape == x.shape
    assert np.all(n * 7.0 + xb == pytest.approx(x, abs=1e-12))


def test_integer_variance_near_zero():
    for tag in ("i", "ii", "noon"):
        state, p = paper_case(tag)
        sign = -1 if tag == "noon" else +1
        assert integer_variance(state, default_partition(p, state), sign) <= 1e-3


@pytest.fixture(scope="module")
def case_i():
    state, p = paper_case("i")
    return state, p, momentum_distribution(p, state)


def test_unperturbed_value_and_oracle():
    state, p = paper_case("i")
    p0 = dataclasses.replace(p, t=0.0)
    rep = criterion(p0, state)
    ref = modular_variance_charfn(p0, state, modular_period(state), -1)
    assert ref == pytest.approx(UNPERTURBED, abs=1e-6)
    assert rep.var_mod_momentum_scaled == pytest.approx(ref, abs=1e-3)
    assert rep.lhs == pytest.approx(0.117, abs=0.005)
    assert rep.entangled and rep.threshold == THRESHOLD == 0.156


def test_evolved_case_i_matches_characteristic_function_route(case_i):
    state, p, dist = case_i
    rep = criterion(p, state, dist=dist)
    ref = modular_variance_charfn(p, state, modular_period(state), -1)
    assert rep.var_mod_momentum_scaled == pytest.approx(ref, abs=1e-3)
    assert rep.var_N_integer <= 1e-3


def test_evolved_noon_matches_characteristic_function_route():
    state, p = paper_case("noon")
    rep = criterion(p, state)
    ref = modular_variance_charfn(p, state, modular_period(state), +1)
    assert rep.var_mod_momentum_scaled == pytest.approx(ref, abs=1e-3)
    assert not rep.entangled


def test_unperturbed_noon_is_detected():
    state, p = paper_case("noon")
    rep = criterion(dataclasses.replace(p, t=0.0), state)
    assert rep.var_N_integer <= 1e-3
    assert rep.lhs < THRESHOLD


def test_single_branch_reference():
    s0, p = paper_case("i")
    p0 = dataclasses.replace(p, t=0.0)
    epr = s0.with_(kind="single")
    rep = criterion(p0, epr, part=default_partition(p0, s0))
    assert rep.var_mod_momentum_scaled == pytest.approx(0.167, abs=0.005)
    assert not rep.entangled


def test_lhs_invariant_under_cm_translation():
    state, p = paper_case("noon")
    moved = state.with_(x_L=state.x_L + 3.0, x_R=state.x_R + 3.0)
    a, b = criterion(p, state), criterion(p, moved)
    assert b.lhs == pytest.approx(a.lhs, abs=1e-9)


def test_lhs_invariant_under_branch_phase_of_global_form():
    # a global phase leaves every density-matrix element unchanged; the
    # branch phase phi only shifts fringes and leaves the folded variance
    # within the grid error
    state, p = paper_case("i")
    p0 = dataclasses.replace(p, t=0.0)
    a = criterion(p0, state).lhs
    b = criterion(p0, state.with_(phi=2 * math.pi)).lhs
    assert b == pytest.approx(a, abs=1e-12)


def test_grid_too_coarse(case_i):
    state, p, dist = case_i
    coarse = dataclasses.replace(dist, p_rel_grid=dist.p_rel_grid[::4], values=dist.values[:, ::4])
    with pytest.raises(GridTooCoarse):
        modular_momentum_variance(coarse, default_partition(p, state), -1)


def test_visibility_t0_and_single_branch():
    state, p = paper_case("i")
    p0 = dataclasses.replace(p, t=0.0)
    period = 2 * math.pi / state.delta_x_rel()
    assert visibility(momentum_distribution(p0, state), "p_rel", period) == pytest.approx(1.0, abs=0.01)
    epr = state.with_(kind="single")
    assert visibility(momentum_distribution(p0, epr), "p_rel", period) == pytest.approx(0.0, abs=0.01)


@pytest.mark.parametrize("v", [0.3, 0.7, 1.0])
def test_visibility_synthetic(v):
    p = np.linspace(-3, 3, 6001)
    period = 2 * math.pi / 20
    y = np.exp(-p**2 / 50) * (1 + v * np.cos(p * 20))
    assert fringe_visibility(p, y, period) == pytest.approx(v, abs=0.01)
    # on a curved envelope the estimator compares the central maximum with the
    # neighbouring minimum half a period away
    y = np.exp(-p**2) * (1 + v * np.cos(p * 20))
    e = math.exp(-(period / 2) ** 2)
    expect = ((1 + v) - e * (1 - v)) / ((1 + v) + e * (1 - v))
    assert fringe_visibility(p, y, period) == pytest.approx(expect, abs=2e-3)


def test_visibility_errors():
    p = np.linspace(-3, 3, 61)
    with pytest.raises(NoFringesResolved):
        fringe_visibility(p, np.exp(-p**2), 0.2)
    with pytest.raises(ValueError):
        visibility(None, "p_x", 1.0)


def test_partition_validation():
    with pytest.raises(ValueError):
        ModularPartition(delta=0.0)
    st_ = TwoParticleGaussianState()
    assert default_partition(ContinuumParams(), st_).delta == 10.0
