"""Initial two-particle Gaussian states in centre-of-mass / relative coordinates.

psi(x_cm, x_rel) = phi(x_cm) * chi(x_rel), where one factor is a single Gaussian
and the other a two-branch superposition (relative-coordinate superposition or
N00N state).  Normalisation is exact, including the overlap of the branches.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .disorder import DisorderSpec


class StateKind(str, Enum):
    REL = "rel"        # two branches in x_rel, single Gaussian in x_cm
    NOON = "noon"      # two branches in x_cm, single Gaussian in x_rel
    SINGLE = "single"  # one branch at x_L in x_rel (EPR reference)


@dataclass(frozen=True)
class TwoParticleGaussianState:
    kind: StateKind = StateKind.REL
    sigma_p_cm: float = 1.0
    sigma_x_rel: float = 1.0
    x_L: float = -10.0
    x_R: float = 10.0
    phi: float = 0.0
    hbar: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", StateKind(self.kind))
        if not self.sigma_p_cm > 0:
            raise ValueError("sigma_p_cm must be > 0")
        if not self.sigma_x_rel > 0:
            raise ValueError("sigma_x_rel must be > 0")
        if not self.hbar > 0:
            raise ValueError("hbar must be > 0")
        if self.kind is StateKind.REL and self.delta_x_rel() < 5 * self.sigma_x_rel:
            warnings.warn("branch separation below 5 sigma_x_rel; branches overlap")

    def delta_x_rel(self) -> float:
        return abs(self.x_L - self.x_R)

    def mirror_mismatch(self) -> float:
        return self.x_L + self.x_R

    # -- factor parametrisation -------------------------------------------
    @property
    def a_cm(self) -> float:
        """Exponent coefficient of the cm Gaussian, exp(-a (x - c)^2)."""
        return (self.sigma_p_cm / self.hbar) ** 2

    @property
    def a_rel(self) -> float:
        return 1.0 / (4.0 * self.sigma_x_rel**2)

    def _branches(self, two: bool) -> tuple[np.ndarray, np.ndarray]:
        if two:
            return (np.array([self.x_L, self.x_R], dtype=float),
                    np.array([1.0, np.exp(1j * self.phi)]) / math.sqrt(2.0))
        return np.array([0.0]), np.array([1.0 + 0j])

    def cm_branches(self):
        """(centres, coefficients) of the centre-of-mass factor."""
        return self._branches(self.kind is StateKind.NOON)

    def rel_branches(self):
        if self.kind is StateKind.SINGLE:
            return np.array([float(self.x_L)]), np.array([1.0 + 0j])
        return self._branches(self.kind is StateKind.REL)

    @staticmethod
    def _overlap_sum(a: float, centres, coefs, shift=0.0) -> complex:
        # sum_ab c_a c_b^* int exp(-a(y+shift-y_a)^2 - a(y-y_b)^2) dy
        d = shift - (centres[:, None] - centres[None, :])
        g = math.sqrt(math.pi / (2 * a)) * np.exp(-0.5 * a * d**2)
        return np.sum(coefs[:, None] * coefs[None, :].conj() * g)

    def _norm(self, a, centres, coefs) -> float:
        return 1.0 / math.sqrt(self._overlap_sum(a, centres, coefs).real)

    def cm_factor(self, x_cm):
        c, w = self.cm_branches()
        x = np.asarray(x_cm, dtype=float)[..., None]
        val = np.sum(w * np.exp(-self.a_cm * (x - c) ** 2), axis=-1)
        return self._norm(self.a_cm, c, w) * val

    def rel_factor(self, x_rel):
        c, w = self.rel_branches()
        x = np.asarray(x_rel, dtype=float)[..., None]
        val = np.sum(w * np.exp(-self.a_rel * (x - c) ** 2), axis=-1)
        return self._norm(self.a_rel, c, w) * val

    def cm_autocorrelation(self, d):
        """W(d) = int phi(X + d) phi*(X) dX, evaluated in closed form."""
        c, w = self.cm_branches()
        n2 = self._norm(self.a_cm, c, w) ** 2
        d = np.asarray(d, dtype=float)
        out = np.zeros(d.shape, dtype=complex)
        for i in range(len(c)):
            for j in range(len(c)):
                out += (w[i] * np.conj(w[j]) * math.sqrt(math.pi / (2 * self.a_cm))
                        * np.exp(-0.5 * self.a_cm * (d - (c[i] - c[j])) ** 2))
        return n2 * out

    def amplitude(self, x_cm, x_rel):
        return amplitude(self, x_cm, x_rel)

    def with_(self, **kw) -> "TwoParticleGaussianState":
        return replace(self, **kw)


def amplitude(state: TwoParticleGaussianState, x_cm, x_rel):
    """Normalised wavefunction value psi(x_cm, x_rel); broadcasts over inputs."""
    return state.cm_factor(x_cm) * state.rel_factor(x_rel)


def paper_case(tag: str):
    """Reference configurations used throughout the benchmarks.

    Returns (state, ContinuumParams) in units hbar = v = l = 1 with strong
    disorder C0 = hbar^2 v^2 / l^2.  sigma_p_cm is read as hbar/l.
    """
    from .continuum import ContinuumParams

    geom = {"i": (-10.0, 10.0, 1.0), "ii": (-12.0, 8.0, 1.0), "iii": (-13.0, 7.0, 1.0),
            "iv": (-10.0, 10.0, 0.5), "noon": (-10.0, 10.0, 1.0)}
    tag = str(tag).lower()
    if tag not in geom:
        raise ValueError(f"unknown case {tag!r}; expected one of {sorted(geom)}")
    x_L, x_R, s_rel = geom[tag]
    kind = StateKind.NOON if tag == "noon" else StateKind.REL
    state = TwoParticleGaussianState(kind=kind, sigma_p_cm=1.0, sigma_x_rel=s_rel, x_L=x_L, x_R=x_R)
    t = 1.0 if tag == "noon" else 25.0
    return state, ContinuumParams(v=1.0, t=t, disorder=DisorderSpec(c0=1.0, ell=1.0))
