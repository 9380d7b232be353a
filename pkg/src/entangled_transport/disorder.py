"""Disorder statistics for the continuum edge model.

Gaussian-correlated potentials: two-point function C(x) = C0 exp(-(x/l)^2)
and its spectral density G(q), normalised so that C(x) = int G(q) e^{iqx/hbar} dq.
Realizations are drawn by spectral synthesis on a periodic grid.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import GridTooCoarse, GridTooShort

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


class DisorderKind(str, Enum):
    GAUSSIAN = "gaussian"


@dataclass(frozen=True)
class DisorderSpec:
    c0: float = 1.0
    ell: float = 1.0
    hbar: float = 1.0
    kind: DisorderKind = DisorderKind.GAUSSIAN

    def __post_init__(self):
        if not self.c0 >= 0:
            raise ValueError(f"c0 must be >= 0, got {self.c0}")
        if not self.ell > 0:
            raise ValueError(f"ell must be > 0, got {self.ell}")
        if not self.hbar > 0:
            raise ValueError(f"hbar must be > 0, got {self.hbar}")
        object.__setattr__(self, "kind", DisorderKind(self.kind))


@dataclass(frozen=True)
class PotentialRealization:
    grid_x: np.ndarray
    values: np.ndarray
    seed: int

    @property
    def dx(self) -> float:
        return float(self.grid_x[1] - self.grid_x[0])


def correlation(spec: DisorderSpec, x):
    """C(x) = C0 exp(-(x/l)^2). Even in x by construction."""
    x = np.asarray(x, dtype=float)
    out = spec.c0 * np.exp(-((x / spec.ell) ** 2))
    return out[()] if out.ndim == 0 else out


def spectral_density(spec: DisorderSpec, q):
    """G(q) = C0 l / (2 sqrt(pi) hbar) * exp(-(q l / hbar)^2 / 4)."""
    q = np.asarray(q, dtype=float)
    pref = spec.c0 * spec.ell / (2.0 * math.sqrt(math.pi) * spec.hbar)
    out = pref * np.exp(-0.25 * (q * spec.ell / spec.hbar) ** 2)
    return out[()] if out.ndim == 0 else out


def splitmix64(x: int) -> int:
    """One round of the splitmix64 output mix."""
    z = (x + _GOLDEN) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_seed(master_seed: int, index: int) -> int:
    """Per-realization seed; independent of the order realizations are run in."""
    return splitmix64(splitmix64(int(master_seed) & _MASK64) ^ (int(index) & _MASK64))


def _check_grid(spec: DisorderSpec, x: np.ndarray) -> float:
    if x.ndim != 1 or x.size < 2:
        raise ValueError("grid must be one-dimensional with at least 2 points")
    dx = x[1] - x[0]
    if not dx > 0 or not np.allclose(np.diff(x), dx, rtol=1e-9, atol=0.0):
        raise ValueError("grid must be uniform and increasing")
    if dx > spec.ell / 4 * (1 + 1e-12):
        raise GridTooCoarse(f"dx={dx:g} exceeds ell/4={spec.ell / 4:g}")
    span = dx * x.size
    if span < 4 * spec.ell:
        raise GridTooShort(f"grid span {span:g} is below 4*ell")
    if span < 20 * spec.ell:
        warnings.warn(f"grid span {span:g} < 20*ell; periodic wrap correlations are not negligible")
    return float(dx)


def spectral_weights(spec: DisorderSpec, n: int, dx: float) -> np.ndarray:
    """Eigenvalues of the periodised covariance matrix on an n-point grid."""
    q = 2 * np.pi * spec.hbar * np.fft.fftfreq(n, d=dx)
    dq = 2 * np.pi * spec.hbar / (n * dx)
    return n * spectral_density(spec, q) * dq


def sample_potential(spec: DisorderSpec, grid, seed: int) -> PotentialRealization:
    """Draw one stationary Gaussian potential on `grid`.

    Real part of an FFT of complex white noise shaped by sqrt(G); the
    covariance is C(x - x') periodised over the grid span.
    """
    x = np.asarray(grid, dtype=float)
    dx = _check_grid(spec, x)
    lam = np.clip(spectral_weights(spec, x.size, dx), 0.0, None)
    rng = np.random.default_rng(int(seed) & _MASK64)
    z = rng.standard_normal(x.size) + 1j * rng.standard_normal(x.size)
    values = np.fft.fft(np.sqrt(lam / x.size) * z).real
    return PotentialRealization(grid_x=x, values=values, seed=int(seed))
