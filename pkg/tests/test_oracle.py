import math

import numpy as np
import pytest

from entangled_transport.continuum import ContinuumParams, influence
from entangled_transport.disorder import DisorderSpec, PotentialRealization, sample_potential
from entangled_transport.errors import PathOutsideGrid
from entangled_transport.oracle import (OracleConfig, averaged_coherence, compare, default_grid,
                                        phase_along_path, random_tuples)


def _flat(value, x):
    return PotentialRealization(x, np.full_like(x, value), 0)


def test_phase_examples():
    x = np.arange(-50, 50, 0.125)
    assert phase_along_path(_flat(0.0, x), 0.0, 1.0, 10.0, 64) == 0.0
    pot = sample_potential(DisorderSpec(), x, 3)
    assert phase_along_path(pot, 1.0, 1.0, 0.0, 64) == 0.0
    assert phase_along_path(_flat(0.7, x), np.array([0.0, 3.0]), 1.0, 10.0, 64) == pytest.approx([7.0, 7.0])
    assert phase_along_path(_flat(0.7, x), 0.0, 1.0, 10.0, 64, hbar=2.0) == pytest.approx(3.5)
    with pytest.raises(PathOutsideGrid):
        phase_along_path(pot, 45.0, 1.0, 10.0, 64)


def test_phase_quadrature_converges():
    x = np.arange(-50, 50, 0.0625)
    pot = sample_potential(DisorderSpec(), x, 11)
    a = phase_along_path(pot, -3.0, 1.0, 20.0, 320)
    b = phase_along_path(pot, -3.0, 1.0, 20.0, 2560)
    assert a == pytest.approx(b, abs=2e-3)


def test_mirror_and_diagonal_exact():
    cfg = OracleConfig(300, 5, ContinuumParams(t=10.0), antithetic=False)
    args = [[0.3, 2.0, 0.3, -2.0], [-1.0, 1.5, -1.0, 1.5], [0.0, 0.0, 0.0, 0.0]]
    est = averaged_coherence(cfg, args)
    assert np.all(est.mean == 1.0)
    assert np.all(est.stderr_re == 0.0) and np.all(est.stderr_im == 0.0)


def test_modulus_bounded_and_imaginary_part_small():
    cfg = OracleConfig(4000, 8, ContinuumParams(t=5.0), antithetic=False)
    tup = random_tuples(6, 1)
    est = averaged_coherence(cfg, tup)
    assert np.all(np.abs(est.mean) <= 1.0 + 1e-12)
    assert np.all(np.abs(est.mean.imag) <= 3 * est.stderr_im + 1e-12)


def test_seeded_reproducibility_and_block_independence():
    p = ContinuumParams(t=4.0)
    tup = random_tuples(4, 2)
    a = averaged_coherence(OracleConfig(1500, 9, p, block=512), tup).mean
    b = averaged_coherence(OracleConfig(1500, 9, p, block=512), tup).mean
    c = averaged_coherence(OracleConfig(1500, 9, p, block=128), tup).mean
    assert np.array_equal(a, b)
    assert np.allclose(a, c, rtol=0, atol=1e-12)


def test_agreement_small_sample():
    cfg = OracleConfig(3000, 21, ContinuumParams(t=6.0, disorder=DisorderSpec(c0=0.5, ell=1.3)))
    rows = compare(cfg, random_tuples(8, 4))
    assert max(abs(r["z_score"]) for r in rows) <= 4.0
    for r in rows:
        assert r["analytic"] == pytest.approx(math.exp(-influence(cfg.params, *r["args"])))


def test_stderr_slope():
    tup = np.array([[0.4, 1.5, -0.3, -0.8]])
    ns = (100, 1000, 10000)
    se = [averaged_coherence(OracleConfig(n, 99, ContinuumParams(t=5.0)), tup).stderr_re[0] for n in ns]
    slope = np.polyfit(np.log(ns), np.log(se), 1)[0]
    assert slope == pytest.approx(-0.5, abs=0.1)


def test_config_validation_and_grid():
    with pytest.raises(ValueError):
        OracleConfig(0)
    with pytest.raises(ValueError):
        OracleConfig(10, params=ContinuumParams(t=10.0), time_steps=20)
    assert OracleConfig(10, params=ContinuumParams(t=3.3)).steps() % 2 == 0
    g = default_grid(ContinuumParams(t=10.0), np.array([-5.0, 5.0]))
    assert g[0] <= -25 and g[-1] >= 35 and g[1] - g[0] <= 0.125 + 1e-12
