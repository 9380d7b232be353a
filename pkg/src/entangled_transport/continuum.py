"""Closed-form disorder-averaged evolution of two co-propagating particles.

Both particles drift at speed v through a static random potential.  The
ensemble-averaged density matrix is the rigidly translated initial state times
exp(-F), with F the disorder influence.  For Gaussian correlations F has a
closed form built from the single-particle influence F1 and fbar; the q-space
integral is kept as an independent route.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy import integrate, special

from .disorder import DisorderSpec, spectral_density
from .errors import GridAliasing, QuadratureNotConverged
from .states import TwoParticleGaussianState

SQRT_PI = math.sqrt(math.pi)


@dataclass(frozen=True)
class ContinuumParams:
    v: float = 1.0
    t: float = 0.0
    disorder: DisorderSpec = field(default_factory=DisorderSpec)

    def __post_init__(self):
        if not self.v > 0:
            raise ValueError("v must be > 0")
        if not self.t >= 0:
            raise ValueError("t must be >= 0")

    @property
    def strength(self) -> float:
        """Dimensionless disorder strength C0 l^2 / (hbar v)^2."""
        d = self.disorder
        return d.c0 * d.ell**2 / (d.hbar * self.v) ** 2


def fbar_scalar(x: float) -> float:
    x = abs(float(x))
    return x * math.erf(x) + math.exp(-x * x) / SQRT_PI


def fbar(x):
    """x erf(x) + exp(-x^2)/sqrt(pi), vectorised; evaluated on |x| so it is exactly even."""
    x = np.abs(np.asarray(x, dtype=float))
    return x * special.erf(x) + np.exp(-x * x) / SQRT_PI


def influence_single(params: ContinuumParams, x):
    """Single-particle influence F1(x) for coherences between points a distance x apart.

    The sqrt(pi)/2 prefactor makes this equal to the q-space integral with G(q)
    normalised as in `spectral_density`.
    """
    ell = params.disorder.ell
    x = np.abs(np.asarray(x, dtype=float)) / ell
    tau = params.v * params.t / ell
    if tau == 0.0:
        out = np.zeros_like(x)
        return out[()] if out.ndim == 0 else out
    # grouped so that x = 0 cancels exactly (fbar is exactly even)
    bracket = (2 * fbar(tau) - fbar(x - tau) - fbar(x + tau)) + 2 * (fbar(x) - fbar(0.0))
    out = 0.5 * SQRT_PI * params.strength * bracket
    out = np.maximum(out, 0.0)
    return out[()] if out.ndim == 0 else out


def influence(params: ContinuumParams, x_cm, x_rel, x_cm_p, x_rel_p):
    """Two-particle influence F(x_cm, x_rel; x_cm', x_rel'), closed form.

    Sum of F1 over the four cross distances between the particle positions of
    the two branches, minus the intra-branch terms F1(x_rel), F1(x_rel').
    """
    d = np.asarray(x_cm, dtype=float) - np.asarray(x_cm_p, dtype=float)
    r = np.asarray(x_rel, dtype=float)
    rp = np.asarray(x_rel_p, dtype=float)
    s = 0.5 * (r + rp)
    a = 0.5 * (r - rp)
    f1 = lambda y: influence_single(params, y)
    out = f1(d + s) + f1(d - s) + f1(d + a) + f1(d - a) - f1(r) - f1(rp)
    out = np.maximum(out, 0.0)
    return out[()] if np.ndim(out) == 0 else out


def influence_quadrature(params: ContinuumParams, x_cm, x_rel, x_cm_p, x_rel_p,
                         epsabs: float = 1e-9, q_cut: float = 12.0) -> float:
    """Same quantity by direct q-integration of the sinc^2-weighted cosine bracket.

    Integrates over |q| <= q_cut * hbar / l; the Gaussian tail beyond is below
    erfc(q_cut / 2) relative and is added to the error budget.
    """
    dis = params.disorder
    hb, v, t = dis.hbar, params.v, params.t
    if t == 0.0:
        return 0.0
    d = float(x_cm) - float(x_cm_p)
    r, rp = float(x_rel), float(x_rel_p)

    def integrand(q):
        sinc = np.sinc(q * v * t / (2 * np.pi * hb))
        br = (0.5 * math.cos(q * r / (2 * hb)) ** 2 + 0.5 * math.cos(q * rp / (2 * hb)) ** 2
              - math.cos(q * d / hb) * math.cos(q * r / (2 * hb)) * math.cos(q * rp / (2 * hb)))
        return spectral_density(dis, q) * sinc**2 * br

    qmax = q_cut * hb / dis.ell
    # break points roughly every oscillation of the fastest cosine
    scale = max(abs(d) + 0.5 * (abs(r) + abs(rp)), v * t / 2, dis.ell) / hb
    n_pieces = int(min(400, max(4, math.ceil(qmax * scale / np.pi))))
    edges = np.linspace(0.0, qmax, n_pieces + 1)
    total, err = 0.0, 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        val, e = integrate.quad(integrand, lo, hi, epsabs=epsabs / (10 * n_pieces), epsrel=1e-12, limit=200)
        total += val
        err += e
    pref = 2 * 4 * t**2 / hb**2
    tail = pref * 2 * spectral_density(dis, 0.0) * dis.hbar / dis.ell * SQRT_PI * math.erfc(q_cut / 2)
    if pref * err + tail > epsabs:
        raise QuadratureNotConverged(f"error estimate {pref * err + tail:.3g} exceeds {epsabs:.3g}")
    return pref * total


# --------------------------------------------------------------------------
# density-matrix slices

class SliceKind(str, Enum):
    CM = "cm"      # x_rel = x_rel' fixed; axes x_cm, x_cm'
    REL = "rel"    # x_cm = x_cm' fixed; axes x_rel, x_rel'
    DIAG = "diag"  # populations over (x1, x2)


@dataclass
class CoherenceSlice:
    slice_kind: SliceKind
    axis1: np.ndarray
    axis2: np.ndarray
    values: np.ndarray
    fixed: float
    frame: str
    t: float


def initial_element(state: TwoParticleGaussianState, x_cm, x_rel, x_cm_p, x_rel_p):
    return state.amplitude(x_cm, x_rel) * np.conj(state.amplitude(x_cm_p, x_rel_p))


def evolve_slice(params: ContinuumParams, state: TwoParticleGaussianState, slice_kind,
                 axis1, axis2, fixed: float | None = None, frame: str = "comoving") -> CoherenceSlice:
    """Evaluate a 2-D slice of the averaged density matrix at time params.t.

    CM: rows x_cm, columns x_cm', at x_rel = x_rel' = fixed (default x_R).
    REL: rows x_rel, columns x_rel', at x_cm = x_cm' = fixed (default the
    packet centre).  DIAG: populations with rows x1, columns x2.
    In the lab frame coordinates are shifted by v t.
    """
    kind = SliceKind(slice_kind)
    if frame not in ("comoving", "lab"):
        raise ValueError("frame must be 'comoving' or 'lab'")
    shift = params.v * params.t if frame == "lab" else 0.0
    a1 = np.asarray(axis1, dtype=float)
    a2 = np.asarray(axis2, dtype=float)
    A, B = np.meshgrid(a1, a2, indexing="ij")
    if kind is SliceKind.CM:
        fixed = state.x_R if fixed is None else float(fixed)
        args = (A, fixed, B, fixed)
    elif kind is SliceKind.REL:
        fixed = shift if fixed is None else float(fixed)
        args = (fixed, A, fixed, B)
    else:
        fixed = 0.0 if fixed is None else float(fixed)
        xc, xr = 0.5 * (A + B), A - B
        args = (xc, xr, xc, xr)
    xc, xr, xcp, xrp = args
    rho0 = initial_element(state, np.asarray(xc) - shift, xr, np.asarray(xcp) - shift, xrp)
    if kind is SliceKind.DIAG:
        # populations carry no disorder damping
        values = np.abs(rho0).astype(float)
    else:
        values = rho0 * np.exp(-influence(params, xc, xr, xcp, xrp))
    return CoherenceSlice(kind, a1, a2, values, fixed, frame, params.t)


# --------------------------------------------------------------------------
# momentum distributions

@dataclass
class MomentumDistribution:
    p_cm_grid: np.ndarray
    p_rel_grid: np.ndarray
    values: np.ndarray  # indexed [p_cm, p_rel]
    norm: float
    hbar: float = 1.0

    def marginal_rel(self) -> np.ndarray:
        return np.trapezoid(self.values, self.p_cm_grid, axis=0)

    def marginal_cm(self) -> np.ndarray:
        return np.trapezoid(self.values, self.p_rel_grid, axis=1)


@dataclass
class _Reduced:
    """Coherence reduced over the cm mean coordinate, on a lattice of spacing h."""
    d_grid: np.ndarray
    k_offsets: np.ndarray
    dr: float
    A: np.ndarray  # [d, k] : sum over r - r' = k dr of chi chi* exp(-F) * W(d)


def default_spacing(params: ContinuumParams, state: TwoParticleGaussianState) -> float:
    ell = params.disorder.ell
    kappa = params.strength if params.t > 0 else 0.0
    lengths = [state.sigma_x_rel, ell / math.sqrt(max(kappa, 1.0)),
               0.5 * state.hbar / state.sigma_p_cm]
    return min(lengths) / 4.0


def _reduce(params: ContinuumParams, state: TwoParticleGaussianState, dr: float,
            tail: float = 36.0) -> _Reduced:
    h = 0.5 * dr
    rc, _ = state.rel_branches()
    r_half = np.max(np.abs(rc)) + math.sqrt(4 * tail) * state.sigma_x_rel
    n0 = int(math.ceil(r_half / dr))
    ir = np.arange(-n0, n0 + 1)
    r = ir * dr
    chi = state.rel_factor(r)
    cc, _ = state.cm_branches()
    d_half = np.ptp(cc) + math.sqrt(2 * tail / state.a_cm)
    J = int(math.ceil(d_half / h))
    jd = np.arange(-J, J + 1)
    W = state.cm_autocorrelation(jd * h)

    # F1 tabulated on the lattice u*h covering every argument that occurs
    umax = J + 2 * (2 * n0) + 2
    table = influence_single(params, np.arange(-umax, umax + 1) * h)
    off = umax
    I, Ip = np.meshgrid(ir, ir, indexing="ij")
    S = I + Ip          # (r + r') / 2 in units of h
    Dd = I - Ip         # (r - r') / 2 in units of h
    self_term = table[off + 2 * I] + table[off + 2 * Ip]
    M0 = np.outer(chi, chi.conj())
    nr = len(ir)
    kidx = (Dd + (nr - 1)).ravel()
    A = np.zeros((len(jd), 2 * nr - 1), dtype=complex)
    for n, j in enumerate(jd):
        if abs(W[n]) < 1e-300:
            continue
        F = (table[off + j + S] + table[off + j - S] + table[off + j + Dd]
             + table[off + j - Dd] - self_term)
        M = (M0 * np.exp(-np.maximum(F, 0.0))).ravel()
        A[n] = (np.bincount(kidx, weights=M.real, minlength=2 * nr - 1)
                + 1j * np.bincount(kidx, weights=M.imag, minlength=2 * nr - 1)) * W[n]
    return _Reduced(jd * h, np.arange(-(nr - 1), nr), dr, A * dr * dr)


def momentum_marginals(params: ContinuumParams, state: TwoParticleGaussianState,
                       p_cm, p_rel, dr: float | None = None):
    """Marginal distributions of p_cm and p_rel without forming the joint grid."""
    dr = default_spacing(params, state) if dr is None else dr
    red = _reduce(params, state, dr)
    hb = state.hbar
    dd = red.d_grid[1] - red.d_grid[0]
    tp = 2 * np.pi * hb
    # p_rel marginal: integral over p_cm forces d = 0
    j0 = int(np.argmin(np.abs(red.d_grid)))
    Er = np.exp(-1j * np.outer(np.asarray(p_rel), red.k_offsets * red.dr) / hb)
    m_rel = (Er @ red.A[j0]).real / tp
    # p_cm marginal: integral over p_rel forces r = r'
    k0 = int(np.argmin(np.abs(red.k_offsets)))
    Ec = np.exp(-1j * np.outer(np.asarray(p_cm), red.d_grid) / hb)
    m_cm = (Ec @ red.A[:, k0]).real * dd / (tp * red.dr)
    return m_cm, m_rel


def _check_nyquist(state, dr, hb):
    if state.kind.value != "noon" and state.delta_x_rel() > 0:
        fringe = 2 * np.pi * hb / state.delta_x_rel()
        if np.pi * hb / dr < 4 * fringe:
            raise GridAliasing("momentum Nyquist bound spans fewer than 4 fringe periods")


def momentum_distribution(params: ContinuumParams, state: TwoParticleGaussianState,
                          p_cm_grid=None, p_rel_grid=None, dr: float | None = None,
                          points_per_period: int = 33) -> MomentumDistribution:
    """Joint distribution P(p_cm, p_rel) of the evolved state.

    p_cm is conjugate to x_cm and p_rel = (p1 - p2)/2 to x_rel.  The mean cm
    coordinate is integrated analytically; the remaining difference coordinates
    are Fourier transformed by explicit DTFT sums so that the momentum grids can
    be chosen freely below the Nyquist bound.
    """
    hb = state.hbar
    dr = default_spacing(params, state) if dr is None else float(dr)
    _check_nyquist(state, dr, hb)
    red = _reduce(params, state, dr)
    dd = red.d_grid[1] - red.d_grid[0]
    if p_cm_grid is None or p_rel_grid is None:
        auto_cm, auto_rel = default_momentum_grids(params, state, red, points_per_period)
        p_cm_grid = auto_cm if p_cm_grid is None else p_cm_grid
        p_rel_grid = auto_rel if p_rel_grid is None else p_rel_grid
    p_cm_grid = np.asarray(p_cm_grid, dtype=float)
    p_rel_grid = np.asarray(p_rel_grid, dtype=float)
    if np.max(np.abs(p_rel_grid)) > np.pi * hb / dr or np.max(np.abs(p_cm_grid)) > np.pi * hb / dd:
        raise GridAliasing("requested momenta exceed the Nyquist bound of the position grid")
    Ec = np.exp(-1j * np.outer(p_cm_grid, red.d_grid) / hb)
    Er = np.exp(-1j * np.outer(p_rel_grid, red.k_offsets * red.dr) / hb)
    P = ((Ec @ red.A) @ Er.T).real * dd / (2 * np.pi * hb) ** 2
    P = np.maximum(P, 0.0)
    norm = float(np.trapezoid(np.trapezoid(P, p_rel_grid, axis=1), p_cm_grid))
    return MomentumDistribution(p_cm_grid, p_rel_grid, P, norm, hb)


def _support(grid, density, tail=1e-7):
    c = np.cumsum(density)
    c /= c[-1]
    lo = grid[max(np.searchsorted(c, tail) - 1, 0)]
    hi = grid[min(np.searchsorted(c, 1 - tail) + 1, len(grid) - 1)]
    return max(abs(lo), abs(hi))


def modular_period(state: TwoParticleGaussianState) -> float:
    """Per-particle displacement between the two branches.

    For a relative-coordinate superposition each particle moves by half the
    branch separation; for a N00N state both move by the full cm separation.
    """
    if state.kind.value == "noon":
        return abs(state.x_R - state.x_L)
    return 0.5 * state.delta_x_rel()


def default_momentum_grids(params, state, red: _Reduced, points_per_period: int = 33):
    """Grids with p1 = p_cm/2 + p_rel and p2 = p_cm/2 - p_rel on a common lattice.

    The lattice spacing divides the single-particle modular period h/d into an
    odd number of steps, so fold discontinuities fall between nodes.
    """
    hb = state.hbar
    dd = red.d_grid[1] - red.d_grid[0]
    d = modular_period(state)
    unit = 2 * np.pi * hb / (d if d > 0 else state.sigma_x_rel)
    dp = unit / points_per_period
    pr_max = 0.98 * np.pi * hb / red.dr
    pc_max = 0.98 * np.pi * hb / dd
    probe_r = np.linspace(-pr_max, pr_max, 2001)
    probe_c = np.linspace(-pc_max, pc_max, 2001)
    m_cm, m_rel = momentum_marginals(params, state, probe_c, probe_r, red.dr)
    sr = min(_support(probe_r, np.maximum(m_rel, 0)) * 1.1, pr_max)
    sc = min(_support(probe_c, np.maximum(m_cm, 0)) * 1.1, pc_max)
    nr = int(sr // dp)
    nc = int(sc // (2 * dp))
    return np.arange(-nc, nc + 1) * 2 * dp, np.arange(-nr, nr + 1) * dp
