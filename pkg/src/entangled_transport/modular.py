"""Modular variables, the interferometric entanglement criterion, and fringe visibility.

A coordinate is split as x - v t = N * delta + xbar with xbar in [0, delta),
and a momentum as p = N_p * h / delta + pbar with pbar centred on zero.  The
criterion adds the variance of the summed (or differenced) position integers to
the scaled variance of the composite modular momentum and compares with 2C.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.ndimage import uniform_filter1d

from .continuum import ContinuumParams, MomentumDistribution, modular_period, momentum_distribution
from .errors import GridTooCoarse, NoFringesResolved
from .states import StateKind, TwoParticleGaussianState

C_BOUND = 0.078
THRESHOLD = 0.156  # 2C, used exactly


@dataclass(frozen=True)
class ModularPartition:
    delta: float
    origin_velocity: float = 0.0
    hbar: float = 1.0

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError("delta must be > 0")

    @property
    def momentum_period(self) -> float:
        return 2 * math.pi * self.hbar / self.delta


def modular_reduce_position(x, t, part: ModularPartition):
    """Return (N, xbar) with x - v t = N delta + xbar and 0 <= xbar < delta."""
    y = np.asarray(x, dtype=float) - part.origin_velocity * t
    n = np.floor(y / part.delta)
    xbar = y - n * part.delta
    # guard rounding at both edges (e.g. 7.3 - 73 * 0.1 < 0)
    over = xbar >= part.delta
    n = np.where(over, n + 1, n)
    xbar = np.where(over, xbar - part.delta, xbar)
    under = xbar < 0
    n = np.where(under, n - 1, n)
    xbar = np.clip(np.where(under, xbar + part.delta, xbar), 0.0, np.nextafter(part.delta, 0.0))
    n = n.astype(np.int64)
    if n.ndim == 0:
        return int(n), float(xbar)
    return n, xbar


def modular_reduce_momentum(p, part: ModularPartition):
    """Return (N_p, pbar) with pbar in [-h/2delta, h/2delta) and p = N_p h/delta + pbar."""
    period = part.momentum_period
    y = np.asarray(p, dtype=float)
    n = np.floor(y / period + 0.5)
    pbar = y - n * period
    over = pbar >= period / 2
    n = np.where(over, n + 1, n)
    pbar = np.where(over, pbar - period, pbar)
    under = pbar < -period / 2
    n = np.where(under, n - 1, n)
    pbar = np.clip(np.where(under, pbar + period, pbar), -period / 2, np.nextafter(period / 2, 0.0))
    n = n.astype(np.int64)
    if n.ndim == 0:
        return int(n), float(pbar)
    return n, pbar


@dataclass
class CriterionReport:
    var_N_integer: float
    var_mod_momentum_scaled: float
    lhs: float
    threshold: float = THRESHOLD
    entangled: bool = False
    case: str = ""
    t: float = 0.0

    def to_json(self) -> dict:
        d = asdict(self)
        return {"case": d["case"], "t": d["t"], "var_N": d["var_N_integer"],
                "var_pbar_scaled": d["var_mod_momentum_scaled"], "lhs": d["lhs"],
                "threshold": d["threshold"], "entangled": bool(d["entangled"])}


def _trap_weights(x: np.ndarray) -> np.ndarray:
    w = np.empty_like(x)
    dx = np.diff(x)
    w[1:-1] = 0.5 * (dx[:-1] + dx[1:])
    w[0], w[-1] = 0.5 * dx[0], 0.5 * dx[-1]
    return w


def _weighted_var(values, weights) -> float:
    tot = weights.sum()
    m = np.sum(values * weights) / tot
    return float(max(np.sum((values - m) ** 2 * weights) / tot, 0.0))


def integer_variance(state: TwoParticleGaussianState, part: ModularPartition, sign: int,
                     n_grid: int = 801) -> float:
    """Variance of N1 + sign*N2 from the position populations (comoving frame).

    Populations are not damped by disorder, so this is the same at every t.
    """
    cc, _ = state.cm_branches()
    rc, _ = state.rel_branches()
    sx = 0.5 * state.hbar / state.sigma_p_cm  # std of |phi|^2 per branch
    X = np.linspace(cc.min() - 10 * sx, cc.max() + 10 * sx, n_grid)
    r = np.linspace(rc.min() - 10 * state.sigma_x_rel, rc.max() + 10 * state.sigma_x_rel, n_grid)
    pX = np.abs(state.cm_factor(X)) ** 2 * _trap_weights(X)
    pr = np.abs(state.rel_factor(r)) ** 2 * _trap_weights(r)
    Xg, rg = np.meshgrid(X, r, indexing="ij")
    n1, _ = modular_reduce_position(Xg + rg / 2, 0.0, part)
    n2, _ = modular_reduce_position(Xg - rg / 2, 0.0, part)
    return _weighted_var((n1 + sign * n2).astype(float), np.outer(pX, pr))


def modular_momentum_variance(dist: MomentumDistribution, part: ModularPartition, sign: int,
                              min_points: int = 16, supersample: int = 8) -> float:
    """Scaled variance of pbar1 + sign*pbar2, i.e. Var(u1 + sign*u2) with u = pbar delta / h.

    The composite is the raw sum/difference of the single-particle modular
    momenta (no re-folding).  p1 = p_cm/2 + p_rel, p2 = p_cm/2 - p_rel.
    The folded moments are averaged over each node's trapezoid cell on a
    `supersample`^2 sub-grid, which keeps the fold discontinuities from
    degrading the quadrature to first order.
    """
    period = part.momentum_period
    dpc = np.max(np.diff(dist.p_cm_grid))
    dpr = np.max(np.diff(dist.p_rel_grid))
    if period / dpr < min_points or 2 * period / dpc < min_points:
        raise GridTooCoarse(f"fewer than {min_points} momentum points per modular period {period:.4g}")
    offs = (np.arange(supersample) + 0.5) / supersample - 0.5
    Pc, Pr = np.meshgrid(dist.p_cm_grid, dist.p_rel_grid, indexing="ij")
    m1 = np.zeros_like(Pc)
    m2 = np.zeros_like(Pc)
    for oc in offs * dpc:
        for orr in offs * dpr:
            _, pb1 = modular_reduce_momentum((Pc + oc) / 2 + (Pr + orr), part)
            _, pb2 = modular_reduce_momentum((Pc + oc) / 2 - (Pr + orr), part)
            u = (pb1 + sign * pb2) / period
            m1 += u
            m2 += u * u
    m1 /= supersample**2
    m2 /= supersample**2
    w = dist.values * np.outer(_trap_weights(dist.p_cm_grid), _trap_weights(dist.p_rel_grid))
    tot = w.sum()
    mean = np.sum(m1 * w) / tot
    return float(max(np.sum(m2 * w) / tot - mean**2, 0.0))


def default_partition(params: ContinuumParams, state: TwoParticleGaussianState) -> ModularPartition:
    return ModularPartition(delta=modular_period(state), origin_velocity=params.v, hbar=state.hbar)


def _criterion(params, state, part, dist, sign_n, sign_p, case):
    part = default_partition(params, state) if part is None else part
    if dist is None:
        dist = momentum_distribution(params, state)
    var_n = integer_variance(state, part, sign_n)
    var_p = modular_momentum_variance(dist, part, sign_p)
    lhs = var_n + var_p
    return CriterionReport(var_n, var_p, lhs, THRESHOLD, bool(lhs < THRESHOLD), case, params.t)


def criterion_rel(params: ContinuumParams, state: TwoParticleGaussianState,
                  part: ModularPartition | None = None, dist: MomentumDistribution | None = None,
                  case: str = "") -> CriterionReport:
    """Var(N1 + N2) + Var(pbar1 - pbar2) * delta^2/h^2 for a relative-coordinate superposition."""
    return _criterion(params, state, part, dist, +1, -1, case)


def criterion_noon(params: ContinuumParams, state: TwoParticleGaussianState,
                   part: ModularPartition | None = None, dist: MomentumDistribution | None = None,
                   case: str = "") -> CriterionReport:
    """Var(N1 - N2) + Var(pbar1 + pbar2) * delta^2/h^2 for a centre-of-mass superposition."""
    return _criterion(params, state, part, dist, -1, +1, case)


def criterion(params, state, **kw) -> CriterionReport:
    if state.kind is StateKind.NOON:
        return criterion_noon(params, state, **kw)
    return criterion_rel(params, state, **kw)


# --------------------------------------------------------------------------
# visibility

def _refine(seg: np.ndarray, i: np.ndarray) -> np.ndarray:
    """Parabolic peak value through (i-1, i, i+1)."""
    a, b, c = seg[i - 1], seg[i], seg[i + 1]
    den = a - 2 * b + c
    off = np.where(den != 0, 0.5 * (a - c) / np.where(den != 0, den, 1.0), 0.0)
    return b - 0.25 * (a - c) * off


def fringe_visibility(p: np.ndarray, values: np.ndarray, period: float, window: float = 0.25) -> float:
    """(max - min)/(max + min) of the fringes near the centre of the envelope.

    The envelope is the pattern averaged over one fringe period.  The window
    holds the central `window` fraction of envelope mass and is widened to at
    least 1.2 fringe periods so that a full maximum/minimum pair is enclosed.
    Returns 0 when the window contains no fringe minimum.
    """
    p = np.asarray(p, dtype=float)
    y = np.asarray(values, dtype=float)
    dp = p[1] - p[0]
    if period / dp < 8:
        raise NoFringesResolved(f"grid spacing {dp:.3g} resolves fewer than 8 points per fringe")
    w = max(int(round(period / dp)), 1)
    env = uniform_filter1d(y, w, mode="constant")
    cdf = np.cumsum(np.clip(env, 0, None))
    if cdf[-1] <= 0:
        raise NoFringesResolved("empty distribution")
    cdf /= cdf[-1]
    lo = np.searchsorted(cdf, 0.5 - window / 2)
    hi = np.searchsorted(cdf, 0.5 + window / 2)
    mid = np.searchsorted(cdf, 0.5)
    half = max(0.5 * (hi - lo), 0.6 * w)
    lo, hi = max(int(mid - half), 0), min(int(mid + half), len(y) - 1)
    seg = y[lo:hi + 1]
    i = np.arange(1, len(seg) - 1)
    imax = i[(seg[i] >= seg[i - 1]) & (seg[i] > seg[i + 1])]
    imin = i[(seg[i] <= seg[i - 1]) & (seg[i] < seg[i + 1])]
    if len(imax) == 0 or len(imin) == 0:
        return 0.0
    top = float(np.max(_refine(seg, imax)))
    bot = float(max(np.min(_refine(seg, imin)), 0.0))
    if top + bot <= 0:
        return 0.0
    return (top - bot) / (top + bot)


def visibility(dist: MomentumDistribution, axis: str, period: float, window: float = 0.25) -> float:
    """Fringe visibility of the p_rel or p_cm marginal of `dist`."""
    if axis == "p_rel":
        return fringe_visibility(dist.p_rel_grid, dist.marginal_rel(), period, window)
    if axis == "p_cm":
        return fringe_visibility(dist.p_cm_grid, dist.marginal_cm(), period, window)
    raise ValueError("axis must be 'p_rel' or 'p_cm'")
