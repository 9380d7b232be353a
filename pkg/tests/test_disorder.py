import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from entangled_transport.disorder import (DisorderSpec, correlation, derive_seed, sample_potential,
                                          spectral_density, splitmix64)
from entangled_transport.errors import GridTooCoarse, GridTooShort


def test_correlation_examples():
    s = DisorderSpec(c0=1.0, ell=1.0)
    assert correlation(s, 0.0) == 1.0
    assert correlation(s, 50.0) == 0.0
    assert correlation(s, -50.0) == 0.0
    assert correlation(DisorderSpec(c0=2.0), 1.0) == pytest.approx(2 * math.exp(-1), abs=1e-15)
    assert correlation(DisorderSpec(c0=2.0), 1.0) == pytest.approx(0.7358, abs=5e-5)


def test_spectral_density_examples():
    s = DisorderSpec()
    assert spectral_density(s, 0.0) == pytest.approx(1 / (2 * math.sqrt(math.pi)), rel=1e-15)
    assert spectral_density(s, 0.0) == pytest.approx(0.2821, abs=5e-5)


@pytest.mark.parametrize("c0,ell", [(1.0, 1.0), (2.5, 0.4), (0.3, 3.0)])
def test_spectral_transform_recovers_correlation(c0, ell):
    s = DisorderSpec(c0=c0, ell=ell)
    for x in (0.0, 0.5 * ell, 2 * ell):
        val = integrate.quad(lambda q: spectral_density(s, q) * math.cos(q * x), -np.inf, np.inf)[0]
        assert val == pytest.approx(correlation(s, x), rel=1e-9, abs=1e-12)


@given(st.floats(-1e3, 1e3), st.floats(0.0, 5.0), st.floats(0.05, 10.0))
def test_correlation_even_and_density_nonnegative(x, c0, ell):
    s = DisorderSpec(c0=c0, ell=ell)
    assert correlation(s, x) == correlation(s, -x)
    assert spectral_density(s, x) >= 0.0
    assert spectral_density(s, x) == spectral_density(s, -x)


def test_invalid_spec():
    for kw in ({"c0": -1.0}, {"ell": 0.0}, {"hbar": -2.0}):
        with pytest.raises(ValueError):
            DisorderSpec(**kw)


def test_grid_errors():
    s = DisorderSpec()
    with pytest.raises(GridTooCoarse):
        sample_potential(s, np.arange(0, 40, 0.5), 1)
    with pytest.raises(GridTooShort):
        sample_potential(s, np.arange(0, 3, 0.1), 1)
    with pytest.warns(UserWarning):
        sample_potential(s, np.arange(0, 10, 0.1), 1)


def test_seed_determinism_and_derivation():
    s = DisorderSpec()
    x = np.arange(0, 40, 0.125)
    a = sample_potential(s, x, 42).values
    b = sample_potential(s, x, 42).values
    assert np.array_equal(a, b)
    assert not np.array_equal(a, sample_potential(s, x, 43).values)
    seeds = {derive_seed(7, i) for i in range(10000)}
    assert len(seeds) == 10000
    assert derive_seed(7, 3) == derive_seed(7, 3)
    assert derive_seed(7, 3) != derive_seed(8, 3)
    assert all(0 <= splitmix64(i) < 2**64 for i in range(100))


def test_ensemble_statistics():
    s = DisorderSpec(c0=1.0, ell=1.0)
    dx = 0.125
    x = np.arange(0, 64, dx)
    n = 10000
    vals = np.array([sample_potential(s, x, derive_seed(2024, i)).values for i in range(n)])
    i0 = 200
    mean = vals[:, i0].mean()
    assert abs(mean) <= 3 * math.sqrt(s.c0 / n)
    for lag in (0.0, 1.0, 2.0):
        k = int(round(lag / dx))
        cov = np.mean(vals[:, i0] * vals[:, i0 + k])
        # periodised covariance on a 64 l grid differs from C by < 1e-300
        assert abs(cov - correlation(s, lag)) <= 0.05 * s.c0
    var = vals[:, i0].var()
    assert var == pytest.approx(s.c0, rel=0.05)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**63))
def test_realization_stationary_shape(seed):
    s = DisorderSpec(c0=1.5, ell=0.7)
    x = np.arange(0, 20, 0.1)
    pot = sample_potential(s, x, seed)
    assert pot.values.shape == x.shape
    assert np.all(np.isfinite(pot.values))
    assert pot.dx == pytest.approx(0.1)
