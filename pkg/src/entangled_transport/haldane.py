"""Haldane honeycomb ribbons: Hamiltonians, bands, edge modes and two-particle runs.

Geometry: lattice vectors a1 = (1, 0), a2 = (1/2, sqrt3/2); A sites of row m at
(n - (m % 2)/2, m sqrt3/2) and B = A + (1/2, -1/(2 sqrt3)).  Rows run along x,
so the long boundaries are zigzag and the short ends armchair.  The designated
edge is the outermost B row at the bottom; with CHIRALITY = +1 and phi = -pi/2
its edge mode moves towards +x.

Two-particle states are amplitude matrices psi[x1, x2] evolved as
U psi U^T with U = exp(-i H t).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.linalg as sla
from scipy import optimize, sparse
from scipy.sparse.linalg import expm_multiply

from .disorder import derive_seed
from .errors import BranchOutsideLattice, NoEdgeBranchFound, PropagatorNotConverged
from .modular import fringe_visibility
from .parallel import n_workers, parallel_map

S3 = math.sqrt(3.0)
A1 = np.array([1.0, 0.0])
A2 = np.array([0.5, S3 / 2])
AB = np.array([0.5, -1 / (2 * S3)])            # B relative to A in the same cell
NN_A = np.array([AB, AB - A1, AB - A1 + A2])    # the three B neighbours of an A site
NNN_FWD = np.array([A1, A2 - A1, -A2])          # A-site hops carrying exp(+i chi phi)
CHIRALITY = +1


@dataclass(frozen=True)
class HaldaneParams:
    t1: float = 1.0
    t2: float = 0.2
    phi: float = -math.pi / 2
    W: float = 0.0
    nx: int = 128
    ny: int = 6
    edges: str = "zigzag-long"

    def __post_init__(self):
        if self.nx < 2 or self.ny < 2:
            raise ValueError("nx and ny must be >= 2")
        if self.W < 0:
            raise ValueError("W must be >= 0")
        if self.edges != "zigzag-long":
            raise ValueError("only zigzag long edges with armchair ends are supported")


# --------------------------------------------------------------------------
# geometry and hoppings

def lattice_sites(nx: int, ny: int):
    """Site table: positions (N, 2), sublattice (0=A, 1=B), cell indices (N, 2).

    Index of (n, m, s) is 2 (m nx + n) + s.
    """
    m, n = np.meshgrid(np.arange(ny), np.arange(nx), indexing="ij")
    m, n = m.ravel(), n.ravel()
    posA = np.column_stack([n - (m % 2) / 2.0, m * S3 / 2])
    pos = np.empty((2 * nx * ny, 2))
    pos[0::2], pos[1::2] = posA, posA + AB
    sub = np.tile([0, 1], nx * ny)
    cells = np.repeat(np.column_stack([n, m]), 2, axis=0)
    return pos, sub, cells


def _keys(pos):
    # positions live on a lattice of (1/2, 1/(2 sqrt3)); integer keys are exact
    return np.rint(pos[:, 0] * 2).astype(np.int64), np.rint(pos[:, 1] * 2 * S3).astype(np.int64)


@lru_cache(maxsize=16)
def _bonds(nx: int, ny: int, periodic: bool):
    """All directed hoppings (i, j, kind, orient, wrap) with r_j - r_i the bond vector.

    kind 0 = nearest, 1 = next-nearest; orient = +-1 gives the flux sign seen from i;
    wrap counts how many periods nx the bond crosses (ribbon only).
    """
    pos, sub, _ = lattice_sites(nx, ny)
    kx, ky = _keys(pos)
    lookup = {(a, b): i for i, (a, b) in enumerate(zip(kx.tolist(), ky.tolist()))}
    out = []
    for i in range(len(pos)):
        s = 1 if sub[i] == 0 else -1
        vecs = [(v * s, 0, 1) for v in NN_A]
        vecs += [(v, 1, s) for v in NNN_FWD] + [(-v, 1, -s) for v in NNN_FWD]
        for vec, kind, orient in vecs:
            tx = kx[i] + int(round(vec[0] * 2))
            ty = ky[i] + int(round(vec[1] * 2 * S3))
            wrap = 0
            if periodic:
                for w in (-1, 0, 1):
                    if (tx - 2 * nx * w, ty) in lookup:
                        wrap = w
                        break
            j = lookup.get((tx - 2 * nx * wrap, ty))
            if j is not None:
                out.append((i, j, kind, orient, wrap))
    arr = np.array(out, dtype=np.int64)
    arr.setflags(write=False)
    return arr


def _amplitudes(bonds, t1, t2, phi):
    kind, orient = bonds[:, 2], bonds[:, 3]
    return np.where(kind == 0, t1 + 0j, t2 * np.exp(1j * CHIRALITY * orient * phi))


@dataclass
class LatticeHamiltonian:
    params: HaldaneParams
    matrix: np.ndarray
    positions: np.ndarray
    sublattice: np.ndarray
    cells: np.ndarray
    edge_sites: np.ndarray
    edge_x: np.ndarray
    onsite: np.ndarray
    _eig: tuple | None = field(default=None, repr=False)

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    def site_index(self, n: int, m: int, s: int) -> int:
        return 2 * (m * self.params.nx + n) + s

    def sparse(self):
        return sparse.csr_matrix(self.matrix)

    def eig(self):
        if self._eig is None:
            self._eig = np.linalg.eigh(self.matrix)
        return self._eig

    def site_table(self) -> np.ndarray:
        """Columns: index, n, m, sublattice, x, y."""
        idx = np.arange(self.dimension)
        return np.column_stack([idx, self.cells, self.sublattice, self.positions])


@lru_cache(maxsize=8)
def _clean_matrix(nx, ny, t1, t2, phi):
    b = _bonds(nx, ny, False)
    H = np.zeros((2 * nx * ny,) * 2, dtype=complex)
    np.add.at(H, (b[:, 0], b[:, 1]), _amplitudes(b, t1, t2, phi))
    H.setflags(write=False)
    return H


def edge_site_list(params: HaldaneParams):
    """Outermost bottom-row B sites ordered by x, with edge coordinate x = 0..nx-1."""
    pos, sub, cells = lattice_sites(params.nx, params.ny)
    idx = np.nonzero((sub == 1) & (cells[:, 1] == 0))[0]
    idx = idx[np.argsort(pos[idx, 0])]
    return idx, np.arange(len(idx), dtype=float)


def build_hamiltonian(params: HaldaneParams, seed: int | None = None) -> LatticeHamiltonian:
    """Open-boundary Haldane Hamiltonian with optional uniform on-site disorder."""
    H = np.array(_clean_matrix(params.nx, params.ny, params.t1, params.t2, params.phi))
    N = H.shape[0]
    onsite = np.zeros(N)
    if seed is not None and params.W > 0:
        rng = np.random.default_rng(int(seed))
        onsite = rng.uniform(-params.W / 2, params.W / 2, N)
        H[np.diag_indices(N)] += onsite
    pos, sub, cells = lattice_sites(params.nx, params.ny)
    edge, ex = edge_site_list(params)
    return LatticeHamiltonian(params, H, pos, sub, cells, edge, ex, onsite)


# --------------------------------------------------------------------------
# bulk bands

def bloch_hamiltonian(params: HaldaneParams, k) -> np.ndarray:
    """2x2 Bloch matrix in the (A, B) basis matching the real-space hopping phases."""
    k = np.asarray(k, dtype=float)
    f = params.t1 * np.sum(np.exp(1j * (NN_A @ k)))
    ph = CHIRALITY * params.phi
    kb = NNN_FWD @ k
    haa = 2 * params.t2 * np.sum(np.cos(kb + ph))
    hbb = 2 * params.t2 * np.sum(np.cos(kb - ph))
    return np.array([[haa, f], [np.conj(f), hbb]])


def bloch_bands(params: HaldaneParams, k):
    """(E-, E+) from the Pauli decomposition d0 + |d| ; k may be (..., 2)."""
    k = np.asarray(k, dtype=float)
    kd = k @ NN_A.T
    kb = k @ NNN_FWD.T
    d0 = 2 * params.t2 * math.cos(params.phi) * np.cos(kb).sum(-1)
    dx = params.t1 * np.cos(kd).sum(-1)
    dy = params.t1 * np.sin(kd).sum(-1)
    dz = -2 * params.t2 * math.sin(CHIRALITY * params.phi) * np.sin(kb).sum(-1)
    r = np.sqrt(dx**2 + dy**2 + dz**2)
    return d0 - r, d0 + r


def reciprocal_vectors():
    a = np.array([A1, A2])
    return 2 * np.pi * np.linalg.inv(a).T  # rows b1, b2


def _bz_extremum(fun, n=240):
    b = reciprocal_vectors()
    f = np.linspace(0, 1, n, endpoint=False)
    F1, F2 = np.meshgrid(f, f, indexing="ij")
    K = F1[..., None] * b[0] + F2[..., None] * b[1]
    vals = fun(K)
    i = np.unravel_index(np.argmin(vals), vals.shape)
    res = optimize.minimize(lambda kk: float(fun(kk)), K[i], method="Nelder-Mead",
                            options={"xatol": 1e-12, "fatol": 1e-15, "maxiter": 4000})
    return min(float(res.fun), float(vals[i]))


def band_gap(params: HaldaneParams) -> float:
    """Minimum direct gap E+ - E- over the Brillouin zone."""
    def gap(k):
        lo, hi = bloch_bands(params, k)
        return hi - lo
    return _bz_extremum(gap)


def dirac_points():
    """K and K' for a1 = (1, 0), a2 = (1/2, sqrt3/2)."""
    return np.array([4 * np.pi / 3, 0.0]), np.array([-4 * np.pi / 3, 0.0])


def dirac_gap(params: HaldaneParams) -> float:
    """Direct gap at the Dirac points, where it equals 6 sqrt3 t2 |sin phi|."""
    return float(min(np.subtract(*bloch_bands(params, k)[::-1]) for k in dirac_points()))


def band_extrema(params: HaldaneParams) -> tuple[float, float]:
    """(min E-, max E+) over the Brillouin zone."""
    lo = _bz_extremum(lambda k: bloch_bands(params, k)[0])
    hi = -_bz_extremum(lambda k: -bloch_bands(params, k)[1])
    return lo, hi


# --------------------------------------------------------------------------
# ribbon and edge modes

def ribbon_hamiltonian(params: HaldaneParams, p: float, ny: int | None = None):
    """Bloch Hamiltonian of a ribbon periodic along x (one cell per row), and dH/dp."""
    ny = params.ny if ny is None else ny
    b = _bonds(1, ny, True)
    amp = _amplitudes(b, params.t1, params.t2, params.phi)
    wrap = b[:, 4].astype(float)
    ph = np.exp(1j * p * wrap)
    N = 2 * ny
    H = np.zeros((N, N), complex)
    dH = np.zeros((N, N), complex)
    np.add.at(H, (b[:, 0], b[:, 1]), amp * ph)
    np.add.at(dH, (b[:, 0], b[:, 1]), 1j * wrap * amp * ph)
    return H, dH


@dataclass
class EdgeDispersion:
    p: np.ndarray
    energy: np.ndarray
    v_g: np.ndarray
    edge_weight: np.ndarray
    v_at_pi: float
    weight_at_pi: float
    partner_v_at_pi: float


def _edge_state(params, p, ny, side):
    ny = params.ny if ny is None else ny
    H, dH = ribbon_hamiltonian(params, p, ny)
    E, V = np.linalg.eigh(H)
    pos, _, _ = lattice_sites(1, ny)
    y = pos[:, 1]
    edge = 1 if side == "bottom" else 2 * ny - 2  # outermost B (bottom) / A (top)
    w = np.abs(V[edge, :]) ** 2
    c = int(np.argmax(w))
    # near-degenerate partners (opposite edge) can hybridise in narrow ribbons:
    # rotate within that subspace to the state most localised on the chosen side
    near = np.nonzero(np.abs(E - E[c]) < 0.05 * params.t1)[0]
    if len(near) > 1:
        sub = V[:, near]
        Y = sub.conj().T @ (y[:, None] * sub)
        yw, yv = np.linalg.eigh(Y)
        vec = sub @ yv[:, 0 if side == "bottom" else -1]
    else:
        vec = V[:, c]
    e = float(np.real(vec.conj() @ H @ vec))
    v = float(np.real(vec.conj() @ dH @ vec))
    return e, v, float(np.abs(vec[edge]) ** 2 + np.abs(vec[edge - 1 if side == "bottom" else edge + 1]) ** 2), vec


def edge_dispersion(params: HaldaneParams, p_grid=None, ny: int | None = None) -> EdgeDispersion:
    """Edge branch on the designated (bottom) zigzag edge of a clean ribbon.

    Group velocities come from Hellmann-Feynman, <psi| dH/dp |psi>.
    edge_weight is the probability on the outermost zigzag row (A and B of row 0).
    """
    p_grid = np.linspace(0, 2 * np.pi, 129) if p_grid is None else np.asarray(p_grid, dtype=float)
    rows = [_edge_state(params, p, ny, "bottom")[:3] for p in p_grid]
    e, v, w = (np.array(c) for c in zip(*rows))
    e_pi, v_pi, w_pi, _ = _edge_state(params, math.pi, ny, "bottom")
    _, v_top, _, _ = _edge_state(params, math.pi, ny, "top")
    if w_pi < 0.5 or v_pi <= 0:
        raise NoEdgeBranchFound(f"no forward edge mode on the bottom edge at p=pi (weight {w_pi:.2f}, v {v_pi:.3f})")
    return EdgeDispersion(p_grid, e, v, w, v_pi, w_pi, v_top)


@lru_cache(maxsize=32)
def _edge_velocity(t1, t2, phi, ny):
    return edge_dispersion(HaldaneParams(t1=t1, t2=t2, phi=phi, nx=2, ny=ny), p_grid=[math.pi]).v_at_pi


def edge_velocity(params: HaldaneParams) -> float:
    """Group velocity v_g(pi) of the bottom-edge branch."""
    return _edge_velocity(params.t1, params.t2, params.phi, params.ny)


@lru_cache(maxsize=16)
def _transport_velocity(t1, t2, phi, ny, sigma_x_rel, sigma_p_cm, p_tilt):
    prm = HaldaneParams(t1=t1, t2=t2, phi=phi, nx=128, ny=ny)
    ham = build_hamiltonian(prm)
    spec = LatticeStateSpec("rel", -20.0, 20.0, sigma_x_rel, sigma_p_cm, p_tilt)
    x0 = 40.0
    psi0 = initial_two_particle_state(ham, spec, x0=x0)
    vg = edge_velocity(prm)
    x = np.arange(prm.nx, dtype=float)
    ts = np.linspace(8.0, 20.0, 7) / vg
    cent = []
    for t in ts:
        w = np.abs(evolve(ham, psi0, t, observe=ham.edge_sites).psi) ** 2
        cent.append(float(w.sum(axis=1) @ x / w.sum()))
    return float(np.polyfit(ts, cent, 1)[0])


def transport_velocity(params: HaldaneParams, spec: "LatticeStateSpec | None" = None) -> float:
    """Velocity of the edge-restricted centroid of a clean two-particle packet.

    The packet is the mirror-symmetric state with the widths and tilt of
    `spec` on a clean 128-cell ribbon; the centroid is fitted linearly over
    8..20 edge-mode transit times, after the initial bulk leakage has left the
    edge.  The broad momentum spread of the packet samples the edge branch away
    from p = pi, so this is below v_g(pi).  Used as the unit v in t = travel / v.
    """
    spec = LatticeStateSpec() if spec is None else spec
    return _transport_velocity(params.t1, params.t2, params.phi, params.ny, spec.sigma_x_rel,
                               spec.sigma_p_cm, spec.p_tilt)


# --------------------------------------------------------------------------
# two-particle states and evolution

@dataclass(frozen=True)
class LatticeStateSpec:
    kind: str = "rel"              # "rel" or "noon"
    x_L: float = -20.0
    x_R: float = 20.0
    sigma_x_rel: float = 2.0
    sigma_p_cm: float = 2.0
    p_tilt: float = math.pi
    phi: float = 0.0
    x0: float | None = None        # cm start along the edge; None -> centred trajectory

    def __post_init__(self):
        if self.kind not in ("rel", "noon"):
            raise ValueError("kind must be 'rel' or 'noon'")
        if not (self.sigma_x_rel > 0 and self.sigma_p_cm > 0):
            raise ValueError("widths must be positive")


@dataclass
class TwoParticleLatticeState:
    psi: np.ndarray
    sites: np.ndarray   # lattice indices labelling rows and columns of psi

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.psi))

    def full(self, dimension: int) -> "TwoParticleLatticeState":
        out = np.zeros((dimension, dimension), dtype=complex)
        out[np.ix_(self.sites, self.sites)] = self.psi
        return TwoParticleLatticeState(out, np.arange(dimension))


def edge_amplitudes(nx: int, spec: LatticeStateSpec, x0: float) -> np.ndarray:
    n = np.arange(nx, dtype=float)
    n1, n2 = np.meshgrid(n, n, indexing="ij")
    X = 0.5 * (n1 + n2) - x0
    r = n1 - n2
    a, b = spec.sigma_p_cm**2, 1 / (4 * spec.sigma_x_rel**2)
    ph = np.exp(1j * spec.phi)
    if spec.kind == "rel":
        psi = np.exp(-a * X**2) * (np.exp(-b * (r - spec.x_L) ** 2) + ph * np.exp(-b * (r - spec.x_R) ** 2))
    else:
        psi = (np.exp(-a * (X - spec.x_L) ** 2) + ph * np.exp(-a * (X - spec.x_R) ** 2)) * np.exp(-b * r**2)
    psi = psi * np.exp(1j * spec.p_tilt * (n1 + n2))
    return psi / np.linalg.norm(psi)


def default_start(params: HaldaneParams, travel: float) -> float:
    """cm start so that the packet is centred on the edge halfway through its travel."""
    return 0.5 * (params.nx - 1) - 0.5 * travel


def _check_branches(nx, spec, x0):
    if spec.kind == "rel":
        cs = [x0 + s * c / 2 for c in (spec.x_L, spec.x_R) for s in (1, -1)]
    else:
        cs = [x0 + spec.x_L, x0 + spec.x_R]
    if min(cs) < 0 or max(cs) > nx - 1:
        raise BranchOutsideLattice(f"branch centres {min(cs):.1f}..{max(cs):.1f} outside edge 0..{nx - 1}")


def initial_two_particle_state(ham: LatticeHamiltonian, spec: LatticeStateSpec,
                               x0: float | None = None) -> TwoParticleLatticeState:
    """Gaussian two-particle packet on the edge sites, tilted by exp(i p_tilt x) per particle."""
    nx = len(ham.edge_sites)
    x0 = spec.x0 if x0 is None else x0
    x0 = 0.5 * (nx - 1) if x0 is None else x0
    _check_branches(nx, spec, x0)
    return TwoParticleLatticeState(edge_amplitudes(nx, spec, x0), ham.edge_sites.copy())


def propagator_block(ham: LatticeHamiltonian, t: float, rows, cols) -> np.ndarray:
    E, V = ham.eig()
    return (V[rows, :] * np.exp(-1j * E * t)) @ V[cols, :].conj().T


def evolve(ham: LatticeHamiltonian, psi0: TwoParticleLatticeState, t: float,
           backend: str = "dense", observe=None, tol: float = 1e-9) -> TwoParticleLatticeState:
    """psi(t) = U psi0 U^T with U = exp(-i H t), restricted to `observe` sites (default all)."""
    obs = np.arange(ham.dimension) if observe is None else np.asarray(observe)
    src = psi0.sites
    if backend == "dense":
        U = propagator_block(ham, t, obs, src)
        return TwoParticleLatticeState(U @ psi0.psi @ U.T, obs)
    if backend != "krylov":
        raise ValueError("backend must be 'dense' or 'krylov'")
    Hs = ham.sparse()
    N = ham.dimension
    B = np.zeros((N, len(src)), dtype=complex)
    B[src] = psi0.psi
    A = expm_multiply(-1j * t * Hs, B)                # U[:, src] psi0
    C = np.zeros((N, N), dtype=complex)
    C[src] = A.T
    full = expm_multiply(-1j * t * Hs, C).T           # A U^T
    if abs(np.linalg.norm(full) - psi0.norm) > tol:
        raise PropagatorNotConverged(f"norm drift {abs(np.linalg.norm(full) - psi0.norm):.2e}")
    return TwoParticleLatticeState(full[np.ix_(obs, obs)], obs)


def two_particle_energy(ham: LatticeHamiltonian, state: TwoParticleLatticeState) -> float:
    """<H x 1 + 1 x H> for a state given on all sites."""
    psi = state.psi
    return float(np.real(np.vdot(psi, ham.matrix @ psi) + np.vdot(psi, psi @ ham.matrix.T)))


# --------------------------------------------------------------------------
# observables along the edge

def shift_correlation(psi: np.ndarray, sign: int):
    """C(n) = sum psi*(x1, x2) psi(x1 + n, x2 + sign n) for n = -(L-1)..L-1.

    sign = -1 gives the characteristic function of p1 - p2, +1 of p1 + p2.
    """
    L = psi.shape[0]
    ns = np.arange(-(L - 1), L)
    C = np.empty(len(ns), dtype=complex)
    for k, n in enumerate(ns):
        m = sign * n
        a1, b1 = slice(max(0, -n), L - max(0, n)), slice(max(0, n), L - max(0, -n))
        a2, b2 = slice(max(0, -m), L - max(0, m)), slice(max(0, m), L - max(0, -m))
        C[k] = np.vdot(psi[a1, a2], psi[b1, b2])
    return ns, C


def shift_spectrum(ns, C, p, scale: float):
    """Re sum_n C(n) exp(-i scale p n) / 2pi on momenta p."""
    return (np.exp(-1j * scale * np.outer(p, ns)) @ C).real / (2 * np.pi)


@dataclass
class LatticeEnsembleResult:
    n_realizations: int
    t: float
    kind: str
    correlation_map: np.ndarray      # <x1, x2| rho |x1, x2> on edge sites
    shifts: np.ndarray
    c_rel: np.ndarray
    c_cm: np.ndarray
    edge_weight: float
    p_rel: np.ndarray
    P_rel: np.ndarray
    p_cm: np.ndarray
    P_cm: np.ndarray
    fringe_period: float
    visibility: float
    x0: float
    velocity: float | None = None   # time unit used to place x0, if it was derived


def _accumulate(params, runs, seed):
    """Evolve every prepared initial state in one disorder realization."""
    ham = build_hamiltonian(params, seed)
    edge = ham.edge_sites
    out = {}
    for name, (psi0, t) in runs.items():
        U = propagator_block(ham, t, edge, edge)
        psi = U @ psi0 @ U.T
        _, cr = shift_correlation(psi, -1)
        _, cc = shift_correlation(psi, +1)
        out[name] = (np.abs(psi) ** 2, cr, cc, float(np.linalg.norm(psi) ** 2))
    return out


def ensemble_run(params: HaldaneParams, runs: dict, n_real: int, master_seed: int = 0,
                 n_p: int = 8193) -> dict:
    """Disorder-averaged edge observables for several initial states at once.

    `runs` maps a name to (LatticeStateSpec, t) or (LatticeStateSpec, t, x0).
    All states see the same disorder realizations; realization i uses seed
    derive_seed(master_seed, i), and sums are taken in index order so results
    do not depend on the number of workers.  Only edge-restricted quantities
    are accumulated: the population map and the shift correlations from which
    relative and cm momentum distributions follow.
    """
    if n_real < 1:
        raise ValueError("n_real must be >= 1")
    nx = params.nx
    prepared, meta = {}, {}
    for name, run in runs.items():
        spec, t = run[0], float(run[1])
        x0 = run[2] if len(run) > 2 else spec.x0
        vel = None
        if x0 is None:
            vel = transport_velocity(params, spec)
            x0 = default_start(params, vel * t)
        _check_branches(nx, spec, x0)
        prepared[name] = (edge_amplitudes(nx, spec, x0), t)
        meta[name] = (spec, t, x0, vel)
    seeds = [derive_seed(master_seed, i) if params.W > 0 else None for i in range(n_real)]
    parts = parallel_map(lambda i: _accumulate(params, prepared, seeds[i]), range(n_real), n_workers())
    ns = np.arange(-(nx - 1), nx)
    # p_rel = (p1 - p2)/2 is conjugate to x_rel; a shift n of both particles changes x_rel by 2n
    p_rel = np.linspace(-np.pi / 2, np.pi / 2, n_p)
    p_cm = np.linspace(-np.pi, np.pi, n_p)
    results = {}
    for name, (spec, t, x0, vel) in meta.items():
        stack = [p[name] for p in parts]
        cmap = np.sum(np.stack([s[0] for s in stack]), axis=0) / n_real
        c_rel = np.sum(np.stack([s[1] for s in stack]), axis=0) / n_real
        c_cm = np.sum(np.stack([s[2] for s in stack]), axis=0) / n_real
        weight = float(np.sum([s[3] for s in stack]) / n_real)
        P_rel = shift_spectrum(ns, c_rel, p_rel, 2.0)
        P_cm = shift_spectrum(ns, c_cm, p_cm, 1.0)
        # fringe period: 2 pi over the branch separation of the superposed coordinate
        period = 2 * np.pi / abs(spec.x_R - spec.x_L)
        if spec.kind == "rel":
            vis = fringe_visibility(p_rel, P_rel, period)
        else:
            vis = fringe_visibility(p_cm, P_cm, period)
        results[name] = LatticeEnsembleResult(n_real, t, spec.kind, cmap, ns, c_rel, c_cm, weight,
                                              p_rel, P_rel, p_cm, P_cm, period, vis, x0, vel)
    return results


def ensemble_average(params: HaldaneParams, spec: LatticeStateSpec, t: float, n_real: int,
                     master_seed: int = 0, x0: float | None = None, n_p: int = 8193) -> LatticeEnsembleResult:
    """Disorder-averaged edge observables for a single initial state (see ensemble_run)."""
    run = (spec, t) if x0 is None else (spec, t, x0)
    return ensemble_run(params, {"run": run}, n_real, master_seed, n_p)["run"]


def noon_lattice_run(params: HaldaneParams, t: float, n_real: int, master_seed: int = 0,
                     spec: LatticeStateSpec | None = None) -> float:
    """cm-momentum visibility of the disorder-averaged N00N state after time t."""
    spec = LatticeStateSpec(kind="noon") if spec is None else spec
    return ensemble_average(params, spec, t, n_real, master_seed).visibility
