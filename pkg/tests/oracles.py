"""Independent reference computations used by the tests.

modular_variance_charfn evaluates Var(u1 + s u2) from the Fourier series of the
sawtooth u = pbar d / h.  Each Fourier mode is a translation expectation
<exp(i (k p1 + m p2) d / hbar)>, computed from shifted coherences by scalar
quadrature, so no momentum grid is involved.
"""
import math

import numpy as np
from scipy import integrate

from entangled_transport.continuum import influence


def shifted_coherence(params, state, a, b):
    """int dX dr rho(X + a, r + b; X, r) for the evolved state."""
    w = complex(state.cm_autocorrelation(a))
    if abs(w) < 1e-14:
        return 0j
    rc, _ = state.rel_branches()
    lo = min(rc.min(), rc.min() - b) - 12 * state.sigma_x_rel
    hi = max(rc.max(), rc.max() - b) + 12 * state.sigma_x_rel

    def f(r, part):
        v = state.rel_factor(r + b) * np.conj(state.rel_factor(r)) * math.exp(-influence(params, a, r + b, 0.0, r))
        return v.real if part == 0 else v.imag

    pts = sorted(set(np.concatenate([rc, rc - b]).tolist()))
    pts = [p for p in pts if lo < p < hi]
    re = integrate.quad(f, lo, hi, args=(0,), points=pts, limit=400, epsabs=1e-13)[0]
    im = integrate.quad(f, lo, hi, args=(1,), points=pts, limit=400, epsabs=1e-13)[0]
    return w * complex(re, im)


def modular_variance_charfn(params, state, d, sign, kmax=4):
    hb = state.hbar

    def phi(k, m):
        # shift x1 by k d and x2 by m d
        return shifted_coherence(params, state, 0.5 * (k + m) * d, (k - m) * d)

    ks = [k for k in range(-kmax, kmax + 1) if k != 0]
    c = {k: 1j * (-1) ** k / (2 * math.pi * k) for k in ks}
    sq = {k: (-1) ** k / (2 * math.pi**2 * k**2) for k in ks}
    e1 = sum(c[k] * phi(k, 0) for k in ks)
    e2 = sum(c[k] * phi(0, k) for k in ks)
    e11 = 1 / 12 + sum(sq[k] * phi(k, 0) for k in ks)
    e22 = 1 / 12 + sum(sq[k] * phi(0, k) for k in ks)
    e12 = sum(c[k] * c[m] * phi(k, m) for k in ks for m in ks)
    var = e11 + e22 + 2 * sign * e12 - (e1 + sign * e2) ** 2
    return float(np.real(var))
