"""Monte-Carlo check of the averaged coherences.

With linear dispersion each particle is rigidly translated and only picks up
the phase (1/hbar) int V(x0 + v t') dt' along its path.  Averaging
exp(-i[phi(x1) + phi(x2) - phi(x1') - phi(x2')]) over sampled potentials
gives the coherence ratio rho(t)/rho(0) that the closed form predicts as exp(-F).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .continuum import ContinuumParams, influence
from .disorder import _check_grid, derive_seed, spectral_weights
from .errors import PathOutsideGrid
from .parallel import n_workers, parallel_map


@dataclass(frozen=True)
class OracleConfig:
    n_realizations: int
    master_seed: int = 0
    params: ContinuumParams = ContinuumParams()
    grid: np.ndarray | None = None
    time_steps: int | None = None
    antithetic: bool = True
    block: int = 512

    def __post_init__(self):
        if self.n_realizations < 1:
            raise ValueError("n_realizations must be >= 1")
        p = self.params
        if self.time_steps is not None and self.time_steps < 8 * p.v * p.t / p.disorder.ell:
            raise ValueError("time_steps must be at least 8 v t / l")

    def steps(self) -> int:
        p = self.params
        n = self.time_steps or max(16, int(math.ceil(16 * p.v * p.t / p.disorder.ell)))
        return n + (n % 2)


def phase_along_path(pot, x0, v: float, t: float, steps: int, hbar: float = 1.0):
    """(1/hbar) int_0^t V(x0 + v t') dt' by composite Simpson, linear interpolation of V.

    `pot` is a PotentialRealization; x0 may be an array of start points.
    """
    x0 = np.asarray(x0, dtype=float)
    if t == 0:
        return np.zeros_like(x0)[()]
    grid = pot.grid_x
    lo, hi = np.minimum(x0, x0 + v * t), np.maximum(x0, x0 + v * t)
    if np.any(lo < grid[0]) or np.any(hi > grid[-1]):
        raise PathOutsideGrid("path leaves the sampled potential grid")
    n = steps + (steps % 2)
    s = np.linspace(0.0, t, n + 1)
    w = np.ones(n + 1)
    w[1:-1:2], w[2:-1:2] = 4.0, 2.0
    w *= (t / n) / 3.0
    pts = x0[..., None] + v * s
    vals = np.interp(pts, grid, pot.values)
    return (vals @ w) / hbar


def default_grid(params: ContinuumParams, xs: np.ndarray, pad: float = 20.0, dx_frac: float = 0.125):
    ell = params.disorder.ell
    lo = float(np.min(xs)) - pad * ell
    hi = float(np.max(xs)) + params.v * params.t + pad * ell
    dx = dx_frac * ell
    n = int(math.ceil((hi - lo) / dx)) + 1
    return lo + dx * np.arange(n)


def _as_tuples(args) -> np.ndarray:
    a = np.atleast_2d(np.asarray(args, dtype=float))
    if a.shape[-1] != 4:
        raise ValueError("argument tuples must be (x_cm, x_rel, x_cm', x_rel')")
    return a


def _endpoints(tup: np.ndarray) -> np.ndarray:
    xc, xr, xcp, xrp = tup.T
    return np.stack([xc + xr / 2, xc - xr / 2, xcp + xrp / 2, xcp - xrp / 2], axis=1)


def _block_samples(cfg: OracleConfig, grid, lam, ends, start, stop):
    """Phase differences for realizations start..stop-1, shape (n, n_tuples)."""
    p = cfg.params
    n = grid.size
    amp = np.sqrt(lam / n)
    z = np.empty((stop - start, n), dtype=complex)
    for k, i in enumerate(range(start, stop)):
        rng = np.random.default_rng(derive_seed(cfg.master_seed, i))
        z[k] = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    fields = np.fft.fft(amp * z, axis=1).real
    steps = cfg.steps()
    s = np.linspace(0.0, p.t, steps + 1)
    w = np.ones(steps + 1)
    w[1:-1:2], w[2:-1:2] = 4.0, 2.0
    w *= (p.t / steps) / 3.0
    # positions along each path -> fractional grid index for linear interpolation
    pts = (ends[..., None] + p.v * s - grid[0]) / (grid[1] - grid[0])
    i0 = np.clip(np.floor(pts).astype(np.int64), 0, n - 2)
    frac = pts - i0
    vals = fields[:, i0] * (1 - frac) + fields[:, i0 + 1] * frac   # (R, T, 4, S)
    ph = (vals @ w) / p.disorder.hbar                                  # (R, T, 4)
    return (ph[..., 0] - ph[..., 2]) + (ph[..., 1] - ph[..., 3])


@dataclass
class CoherenceEstimate:
    mean: np.ndarray      # complex
    stderr_re: np.ndarray
    stderr_im: np.ndarray
    n: int


def averaged_coherence(cfg: OracleConfig, args) -> CoherenceEstimate:
    """Ensemble mean of the disorder phase factor for each argument tuple.

    With antithetic pairing each seed contributes the average over V and -V,
    i.e. cos(delta); the imaginary part then vanishes identically.
    """
    p = cfg.params
    tup = _as_tuples(args)
    ends = _endpoints(tup)
    grid = default_grid(p, ends) if cfg.grid is None else np.asarray(cfg.grid, dtype=float)
    _check_grid(p.disorder, grid)
    lo, hi = ends.min(), ends.max() + p.v * p.t
    if lo < grid[0] or hi > grid[-1]:
        raise PathOutsideGrid("argument paths leave the potential grid")
    lam = np.clip(spectral_weights(p.disorder, grid.size, grid[1] - grid[0]), 0.0, None)
    N = cfg.n_realizations
    bounds = [(s, min(s + cfg.block, N)) for s in range(0, N, cfg.block)]

    def work(b):
        delta = _block_samples(cfg, grid, lam, ends, *b)
        if cfg.antithetic:
            re, im = np.cos(delta), np.zeros_like(delta)
        else:
            re, im = np.cos(delta), -np.sin(delta)
        return re.sum(0), im.sum(0), (re**2).sum(0), (im**2).sum(0)

    parts = parallel_map(work, bounds, n_workers())
    # fixed-order reduction keeps results independent of scheduling
    s_re = sum(pt[0] for pt in parts)
    s_im = sum(pt[1] for pt in parts)
    q_re = sum(pt[2] for pt in parts)
    q_im = sum(pt[3] for pt in parts)
    m_re, m_im = s_re / N, s_im / N
    if N > 1:
        var_re = np.maximum(q_re - N * m_re**2, 0.0) / (N - 1)
        var_im = np.maximum(q_im - N * m_im**2, 0.0) / (N - 1)
    else:
        var_re = var_im = np.full_like(m_re, np.nan)
    return CoherenceEstimate(m_re + 1j * m_im, np.sqrt(var_re / N), np.sqrt(var_im / N), N)


def compare(cfg: OracleConfig, args) -> list[dict]:
    """Oracle vs closed form for each tuple, with z-score on the real part."""
    tup = _as_tuples(args)
    est = averaged_coherence(cfg, tup)
    analytic = np.exp(-influence(cfg.params, *tup.T))
    rows = []
    for k in range(len(tup)):
        se = float(est.stderr_re[k])
        diff = float(est.mean[k].real - analytic[k])
        z = diff / se if se > 0 else (0.0 if diff == 0 else math.inf)
        rows.append({"args": [float(a) for a in tup[k]], "oracle_mean": float(est.mean[k].real),
                     "oracle_mean_imag": float(est.mean[k].imag), "oracle_stderr": se,
                     "analytic": float(analytic[k]), "z_score": z})
    return rows


def random_tuples(n: int, seed: int, cm_range: float = 2.0, rel_range: float = 3.0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return np.column_stack([rng.uniform(-cm_range, cm_range, n), rng.uniform(-rel_range, rel_range, n),
                            rng.uniform(-cm_range, cm_range, n), rng.uniform(-rel_range, rel_range, n)])
