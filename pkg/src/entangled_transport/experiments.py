"""Experiment drivers behind the command-line interface.

Each driver takes a validated ExperimentConfig and returns (tables, report):
tables map a short name to (column names, 2-D array); the report is a
JSON-serialisable dict.  `reproduce_all` runs the benchmark set and scores it.
"""
from __future__ import annotations

import math
import time

import numpy as np

from . import continuum as cont
from . import haldane as hal
from . import modular as mod
from . import oracle as orc
from .config import ExperimentConfig
from .disorder import DisorderSpec
from .states import StateKind, TwoParticleGaussianState, paper_case


def _cont_params(p: dict, t=None) -> cont.ContinuumParams:
    return cont.ContinuumParams(v=p["v"], t=p["t"] if t is None else t,
                                disorder=DisorderSpec(c0=p["c0"], ell=p["ell"], hbar=p["hbar"]))


def _state_and_params(p: dict):
    if p.get("case") is not None:
        state, params = paper_case(p["case"])
        if p.get("t") is not None:
            params = cont.ContinuumParams(v=params.v, t=float(p["t"]), disorder=params.disorder)
        return state, params
    state = TwoParticleGaussianState(hbar=p.get("hbar", 1.0), **p["state"])
    return state, _cont_params(p)


def _fringe_period(state) -> float:
    sep = abs(state.x_R - state.x_L)
    return 2 * math.pi * state.hbar / sep


def _slice_table(sl: cont.CoherenceSlice):
    A, B = np.meshgrid(sl.axis1, sl.axis2, indexing="ij")
    v = np.asarray(sl.values)
    return (["axis1", "axis2", "re", "im"],
            np.column_stack([A.ravel(), B.ravel(), v.real.ravel(), np.imag(v).ravel()]))


def _criterion_and_vis(params, state, dist):
    rep = mod.criterion(params, state, dist=dist)
    axis = "p_cm" if state.kind is StateKind.NOON else "p_rel"
    vis = mod.visibility(dist, axis, _fringe_period(state))
    return rep, vis, axis


# --------------------------------------------------------------------------

def run_paper_case(cfg: ExperimentConfig):
    p = cfg.parameters
    state, params = _state_and_params(p)
    dist = cont.momentum_distribution(params, state, dr=p.get("dr"), points_per_period=p["points_per_period"])
    rep, vis, axis = _criterion_and_vis(params, state, dist)
    rep.case = str(p["case"])
    ext = max(abs(state.x_L), abs(state.x_R)) + 6 * state.sigma_x_rel
    ax = np.linspace(-ext, ext, 161)
    diag = cont.evolve_slice(params, state, "diag", ax, ax)
    rel = cont.evolve_slice(params, state, "rel", ax, ax)
    tables = {
        "diag": _slice_table(diag),
        "rel_slice": _slice_table(rel),
        "p_rel_marginal": (["p_rel", "value"], np.column_stack([dist.p_rel_grid, dist.marginal_rel()])),
        "p_cm_marginal": (["p_cm", "value"], np.column_stack([dist.p_cm_grid, dist.marginal_cm()])),
    }
    report = {"criterion": rep.to_json(), "visibility": vis, "visibility_axis": axis,
              "norm": dist.norm, "mirror_mismatch": state.mirror_mismatch()}
    return tables, report


def run_influence_map(cfg: ExperimentConfig):
    p = cfg.parameters
    params = _cont_params(p)
    ax = np.linspace(-p["extent"], p["extent"], int(p["n"]))
    A, B = np.meshgrid(ax, ax, indexing="ij")
    if p["slice"] == "rel":
        fixed = 0.0 if p["fixed"] is None else float(p["fixed"])
        F = cont.influence(params, fixed, A, fixed, B)
        anti = cont.influence(params, fixed, ax, fixed, -ax)
        extra = {"max_antidiagonal": float(np.max(np.abs(anti)))}
    elif p["slice"] == "cm":
        fixed = 10.0 if p["fixed"] is None else float(p["fixed"])
        F = cont.influence(params, A, fixed, B, fixed)
        extra = {"max_diagonal": float(np.max(np.abs(np.diag(F))))}
    else:
        from .errors import ConfigInvalid
        raise ConfigInvalid("influence_map slice must be 'rel' or 'cm'")
    table = (["axis1", "axis2", "influence"], np.column_stack([A.ravel(), B.ravel(), F.ravel()]))
    return {"influence": table}, {"slice": p["slice"], "fixed": fixed, "t": params.t,
                                  "max_influence": float(F.max()), **extra}


def run_evolve_slice(cfg: ExperimentConfig):
    p = cfg.parameters
    state, params = _state_and_params(p)
    ax = np.linspace(-p["extent"], p["extent"], int(p["n"]))
    sl = cont.evolve_slice(params, state, p["slice"], ax, ax, fixed=p["fixed"], frame=p["frame"])
    return {"slice": _slice_table(sl)}, {"slice": sl.slice_kind.value, "fixed": sl.fixed,
                                         "frame": sl.frame, "t": sl.t}


def run_momentum(cfg: ExperimentConfig):
    p = cfg.parameters
    state, params = _state_and_params(p)
    dist = cont.momentum_distribution(params, state, dr=p["dr"], points_per_period=p["points_per_period"])
    Pc, Pr = np.meshgrid(dist.p_cm_grid, dist.p_rel_grid, indexing="ij")
    tables = {"joint": (["p_cm", "p_rel", "value"], np.column_stack([Pc.ravel(), Pr.ravel(), dist.values.ravel()])),
              "p_rel_marginal": (["p_rel", "value"], np.column_stack([dist.p_rel_grid, dist.marginal_rel()])),
              "p_cm_marginal": (["p_cm", "value"], np.column_stack([dist.p_cm_grid, dist.marginal_cm()]))}
    axis = "p_cm" if state.kind is StateKind.NOON else "p_rel"
    return tables, {"norm": dist.norm, "visibility": mod.visibility(dist, axis, _fringe_period(state)),
                    "visibility_axis": axis, "t": params.t}


def run_criterion(cfg: ExperimentConfig):
    p = cfg.parameters
    state, params = _state_and_params(p)
    dist = cont.momentum_distribution(params, state, dr=p["dr"], points_per_period=p["points_per_period"])
    rep, vis, axis = _criterion_and_vis(params, state, dist)
    rep.case = "" if p.get("case") is None else str(p["case"])
    return {}, {"criterion": rep.to_json(), "visibility": vis, "visibility_axis": axis}


def run_oracle_compare(cfg: ExperimentConfig):
    p = cfg.parameters
    params = _cont_params(p)
    tup = orc.random_tuples(int(p["n_tuples"]), int(p["tuple_seed"]))
    rows = orc.compare(orc.OracleConfig(int(p["n_realizations"]), cfg.master_seed, params), tup)
    arr = np.array([r["args"] + [r["oracle_mean"], r["oracle_stderr"], r["analytic"], r["z_score"]] for r in rows])
    cols = ["x_cm", "x_rel", "x_cm_p", "x_rel_p", "oracle_mean", "oracle_stderr", "analytic", "z_score"]
    zmax = float(np.max(np.abs(arr[:, -1])))
    return {"comparison": (cols, arr)}, {"rows": rows, "max_abs_z": zmax, "n_realizations": int(p["n_realizations"])}


def _haldane_params(p: dict, **over) -> hal.HaldaneParams:
    keys = {"t1", "t2", "phi", "W", "nx", "ny"}
    kw = {k: v for k, v in p.items() if k in keys}
    kw.update(over)
    return hal.HaldaneParams(**kw)


def run_bands(cfg: ExperimentConfig):
    prm = _haldane_params(cfg.parameters)
    K, _ = hal.dirac_points()
    b = hal.reciprocal_vectors()
    M = 0.5 * b[0]
    G = np.zeros(2)
    legs = [(G, K), (K, M), (M, G)]
    n = int(cfg.parameters["n_path"])
    pts = np.concatenate([a + np.linspace(0, 1, n, endpoint=False)[:, None] * (c - a) for a, c in legs] + [G[None]])
    s = np.concatenate([[0], np.cumsum(np.linalg.norm(np.diff(pts, axis=0), axis=1))])
    lo, hi = hal.bloch_bands(prm, pts)
    emin, emax = hal.band_extrema(prm)
    report = {"gap_min_bz": hal.band_gap(prm), "gap_dirac": hal.dirac_gap(prm),
              "gap_formula": 6 * math.sqrt(3) * prm.t2 * abs(math.sin(prm.phi)),
              "band_min": emin, "band_max": emax}
    return {"bands": (["s", "kx", "ky", "E_minus", "E_plus"], np.column_stack([s, pts, lo, hi]))}, report


def run_edge_dispersion(cfg: ExperimentConfig):
    prm = _haldane_params(cfg.parameters, nx=2)
    ed = hal.edge_dispersion(prm, np.linspace(0, 2 * np.pi, int(cfg.parameters["n_p"])))
    table = (["p", "E", "v_g", "edge_weight"], np.column_stack([ed.p, ed.energy, ed.v_g, ed.edge_weight]))
    return {"edge": table}, {"v_at_pi": ed.v_at_pi, "edge_weight_at_pi": ed.weight_at_pi,
                             "partner_v_at_pi": ed.partner_v_at_pi}


def _lattice(cfg: ExperimentConfig, default_state: dict):
    p = cfg.parameters
    prm = _haldane_params(p)
    state_kw = dict(default_state)
    state_kw.update(p["state"] or {})
    spec = hal.LatticeStateSpec(**state_kw)
    v = hal.transport_velocity(prm, spec)
    t = float(p["t"]) if p["t"] is not None else float(p["travel"]) / v
    res = hal.ensemble_average(prm, spec, t, int(p["n_realizations"]), cfg.master_seed)
    nx = prm.nx
    X1, X2 = np.meshgrid(np.arange(nx), np.arange(nx), indexing="ij")
    tables = {"correlation_map": (["x1", "x2", "value"], np.column_stack([X1.ravel(), X2.ravel(), res.correlation_map.ravel()])),
              "p_rel": (["p_rel", "value"], np.column_stack([res.p_rel, res.P_rel])),
              "p_cm": (["p_cm", "value"], np.column_stack([res.p_cm, res.P_cm]))}
    report = {"visibility": res.visibility, "visibility_axis": "p_rel" if spec.kind == "rel" else "p_cm",
              "edge_weight": res.edge_weight, "v_transport": v, "v_g_pi": hal.edge_velocity(prm), "t": t,
              "x0": res.x0,
              "gap_dirac": hal.dirac_gap(prm), "gap_min_bz": hal.band_gap(prm),
              "n_realizations": res.n_realizations}
    return tables, report


def run_lattice(cfg):
    return _lattice(cfg, {"kind": "rel", "x_L": -20.0, "x_R": 20.0})


def run_noon(cfg):
    return _lattice(cfg, {"kind": "noon", "x_L": -20.0, "x_R": 20.0})


DRIVERS = {"paper_case": run_paper_case, "influence_map": run_influence_map,
           "evolve_slice": run_evolve_slice, "momentum": run_momentum, "criterion": run_criterion,
           "oracle_compare": run_oracle_compare, "bands": run_bands,
           "edge_dispersion": run_edge_dispersion, "lattice_run": run_lattice, "noon_run": run_noon}


def run_experiment(cfg: ExperimentConfig):
    return DRIVERS[cfg.experiment](cfg)


# --------------------------------------------------------------------------
# benchmark reproduction

def _entry(cid, name, measured, target, ok):
    return {"id": cid, "name": name, "measured": measured, "target": target, "pass": bool(ok)}


def continuum_benchmarks(master_seed: int = 0) -> list[dict]:
    rng = np.random.default_rng(master_seed)
    out = []
    # 1: mirror immunity over random tuples and parameters
    n = 1000
    worst = 0.0
    for _ in range(n):
        prm = cont.ContinuumParams(v=rng.uniform(0.5, 2), t=rng.uniform(0, 40),
                                   disorder=DisorderSpec(c0=rng.uniform(0, 3), ell=rng.uniform(0.3, 3)))
        xc, xr = rng.uniform(-30, 30, 2)
        worst = max(worst, abs(float(cont.influence(prm, xc, xr, xc, -xr))))
    out.append(_entry("1", "mirror immunity max|F|", worst, "<= 1e-12", worst <= 1e-12))
    # 2: cm-only reduction and closed form vs q-quadrature
    prm = cont.ContinuumParams(t=10.0)
    red = 0.0
    for d in (1.0, 5.0, 20.0):
        f = float(cont.influence(prm, d, 0, 0, 0))
        q = cont.influence_quadrature(prm, d, 0, 0, 0, epsabs=1e-11)
        red = max(red, abs(f - 4 * float(cont.influence_single(prm, d))) / f, abs(f - q) / q)
    out.append(_entry("2a", "x_rel=x_rel'=0 reduces to 4 F1(d), matches quadrature", red, "<= 1e-6", red <= 1e-6))
    worst = 0.0
    for _ in range(n):
        prm = cont.ContinuumParams(v=rng.uniform(0.5, 2), t=rng.uniform(0.1, 20),
                                   disorder=DisorderSpec(c0=rng.uniform(0.1, 2), ell=rng.uniform(0.5, 2)))
        a = rng.uniform(-10, 10, 4)
        f = float(cont.influence(prm, *a))
        q = cont.influence_quadrature(prm, *a, epsabs=1e-11)
        worst = max(worst, abs(f - q) / max(abs(q), 1e-300) if abs(q) > 1e-6 else abs(f - q))
    out.append(_entry("2b", "closed form vs q-quadrature max rel err", worst, "<= 1e-6", worst <= 1e-6))
    z = max(abs(cont.fbar_scalar(0) - 1 / math.sqrt(math.pi)),
            abs(float(cont.influence_single(cont.ContinuumParams(t=7.0), 0.0))),
            abs(float(cont.influence(cont.ContinuumParams(t=0.0), 1.3, 4.0, -2.0, 0.7))))
    out.append(_entry("3", "fbar(0)=1/sqrt(pi), F1(0)=0, F(t=0)=0 max deviation", z, "<= 1e-15", z <= 1e-15))

    # 4-7: criterion values
    vals, vis = {}, {}
    for tag in ("i", "ii", "iii", "iv", "noon"):
        state, prm = paper_case(tag)
        dist = cont.momentum_distribution(prm, state)
        rep, v, _ = _criterion_and_vis(prm, state, dist)
        vals[tag], vis[tag] = rep, v
    s0, p0 = paper_case("i")
    p0 = cont.ContinuumParams(v=1.0, t=0.0, disorder=p0.disorder)
    r0 = mod.criterion(p0, s0)
    epr = s0.with_(kind="single")
    r_epr = mod.criterion(p0, epr, part=mod.default_partition(p0, s0))
    out.append(_entry("4a", "unperturbed criterion lhs", r0.lhs, "0.117 +- 0.005", abs(r0.lhs - 0.117) <= 0.005))
    out.append(_entry("4b", "threshold", mod.THRESHOLD, "0.156", mod.THRESHOLD == 0.156))
    out.append(_entry("4c", "EPR single-branch scaled variance", r_epr.var_mod_momentum_scaled, "0.167 +- 0.005",
                      abs(r_epr.var_mod_momentum_scaled - 0.167) <= 0.005))
    for tag, target in (("i", 0.136), ("ii", 0.156), ("iii", 0.161), ("iv", 0.120)):
        m = vals[tag].var_mod_momentum_scaled
        out.append(_entry(f"5-{tag}", f"case ({tag}) scaled modular variance t=25", m, f"{target} +- 0.01",
                          abs(m - target) <= 0.01))
    mono = [vals[k].var_mod_momentum_scaled for k in ("i", "ii", "iii")]
    out.append(_entry("5-mono", "(i) < (ii) < (iii)", mono, "strictly increasing", mono[0] < mono[1] < mono[2]))
    m = vals["noon"].var_mod_momentum_scaled
    out.append(_entry("6a", "N00N t=1 cm modular variance", m, "0.159 +- 0.005 and > 0.156",
                      abs(m - 0.159) <= 0.005 and m > mod.THRESHOLD))
    sn, pn = paper_case("noon")
    xr = np.linspace(-10, 10, 201)
    anti = float(np.max(np.abs(cont.influence(pn, 0.0, xr, 0.0, -xr))))
    out.append(_entry("6b", "N00N antidiagonal relative coherences undamped", anti, "== 0", anti == 0.0))
    out.append(_entry("7a", "case (i) central visibility t=25", vis["i"], "1.00 +- 0.02", abs(vis["i"] - 1) <= 0.02))
    seq = [vis["i"], vis["ii"], vis["iii"]]
    out.append(_entry("7b", "visibility (i) > (ii) > (iii)", seq, "strictly decreasing", seq[0] > seq[1] > seq[2]))
    return out


def oracle_benchmark(master_seed: int = 0, n_realizations: int = 10000):
    t0 = time.perf_counter()
    cfg = orc.OracleConfig(n_realizations, master_seed, cont.ContinuumParams(t=10.0))
    rows = orc.compare(cfg, orc.random_tuples(20, master_seed + 1))
    wall = time.perf_counter() - t0
    z = float(max(abs(r["z_score"]) for r in rows))
    return [_entry("8", "oracle max |z| over 20 tuples, N=1e4, C0=1", z, "<= 3", z <= 3)], {"8": wall}


def haldane_benchmarks(master_seed: int = 0, quick: bool = False):
    prm = hal.HaldaneParams()
    out = []
    g = hal.band_gap(prm)
    gd = hal.dirac_gap(prm)
    target = 6 * math.sqrt(3) * prm.t2
    out.append(_entry("9a", "minimum direct gap over the zone", g, f"{target:.6f} +- 1e-6", abs(g - target) <= 1e-6))
    out.append(_entry("9a-K", "direct gap at the Dirac points", gd, f"{target:.6f} +- 1e-6", abs(gd - target) <= 1e-6))
    lo, hi = hal.band_extrema(prm)
    out.append(_entry("9b", "band extrema", [lo, hi], "-3, +3 +- 1e-6", abs(lo + 3) <= 1e-6 and abs(hi - 3) <= 1e-6))
    v = hal.edge_velocity(prm)
    out.append(_entry("9c", "edge group velocity at p=pi", v, "0.8 +- 0.05", abs(v - 0.8) <= 0.05))
    vt = hal.transport_velocity(prm)
    out.append(_entry("9c-packet", "edge packet transport velocity (time unit v)", vt, "0.8 +- 0.05",
                      abs(vt - 0.8) <= 0.05))
    timings = {}
    if quick:
        nx, n_real, travel = 64, 50, 25.0
    else:
        nx, n_real, travel = 128, 100, 50.0
    t0 = time.perf_counter()
    res = lattice_benchmark_runs(nx, n_real, travel, master_seed)
    timings["10"] = time.perf_counter() - t0
    vm, vb, vn = (res[k].visibility for k in ("mirror", "broken", "noon"))
    tag = f"{nx}x6/{n_real}"
    if not quick:
        out.append(_entry("10a", f"mirror relative-momentum visibility {tag}", vm, ">= 0.85", vm >= 0.85))
        out.append(_entry("10b", f"broken-mirror visibility {tag}", vb, "<= 0.30", vb <= 0.30))
        out.append(_entry("10c", f"N00N cm visibility t=5/v {tag}", vn, "<= 0.15", vn <= 0.15))
    out.append(_entry("10-order", f"ordering mirror >> broken > N00N {tag}", [vm, vb, vn],
                      "mirror >> broken > noon", vm > 2 * vb and vb > vn))
    return out, timings, res


def lattice_benchmark_runs(nx: int, n_real: int, travel: float, master_seed: int = 0):
    prm = hal.HaldaneParams(nx=nx, W=1.5)
    v = hal.transport_velocity(prm)
    runs = {"mirror": (hal.LatticeStateSpec("rel", -20.0, 20.0), travel / v),
            "broken": (hal.LatticeStateSpec("rel", -32.0, 8.0), travel / v),
            "noon": (hal.LatticeStateSpec("noon", -20.0, 20.0), 5.0 / v)}
    return hal.ensemble_run(prm, runs, n_real, master_seed)


def determinism_check(master_seed: int = 0) -> dict:
    """Re-run small seeded ensembles and require bit-identical results."""
    def once():
        cfg = orc.OracleConfig(2000, master_seed, cont.ContinuumParams(t=5.0))
        a = orc.averaged_coherence(cfg, orc.random_tuples(5, 3)).mean
        prm = hal.HaldaneParams(nx=24, ny=4, W=1.5)
        r = hal.ensemble_average(prm, hal.LatticeStateSpec("rel", -6.0, 6.0, 1.0, 1.0), 3.0, 4, master_seed,
                                 x0=11.5, n_p=1025)
        return np.concatenate([a.view(float), r.c_rel.view(float), r.correlation_map.ravel()])
    x, y = once(), once()
    same = bool(np.array_equal(x, y))
    return _entry("11", "seeded ensembles bit-identical on re-run", same, "True", same)


def property_checks() -> list[dict]:
    out = []
    # hermiticity of the lattice Hamiltonian and influence symmetry
    ham = hal.build_hamiltonian(hal.HaldaneParams(nx=16, ny=4, W=1.5), seed=5)
    herm = float(np.max(np.abs(ham.matrix - ham.matrix.conj().T)))
    rng = np.random.default_rng(11)
    a = rng.uniform(-10, 10, (200, 4))
    prm = cont.ContinuumParams(t=8.0)
    sym = float(np.max(np.abs(cont.influence(prm, *a.T) - cont.influence(prm, a[:, 2], a[:, 3], a[:, 0], a[:, 1]))))
    out.append(_entry("12a", "Hermiticity (lattice H, influence swap)", [herm, sym], "0", herm == 0 and sym <= 1e-12))
    # trace of the populations
    state, prm = paper_case("ii")
    ax = np.linspace(-40, 40, 641)
    sl = cont.evolve_slice(prm, state, "diag", ax, ax)
    tr = float(np.trapezoid(np.trapezoid(sl.values, ax, axis=1), ax))
    out.append(_entry("12b", "trace of populations", tr, "1 +- 1e-3", abs(tr - 1) <= 1e-3))
    # lattice norm and exchange symmetry
    psi0 = hal.initial_two_particle_state(ham, hal.LatticeStateSpec("rel", -4.0, 4.0, 1.0, 1.0))
    psi = hal.evolve(ham, psi0, 7.0)
    nerr = abs(psi.norm - 1)
    exch = float(np.max(np.abs(psi.psi - psi.psi.T)))
    out.append(_entry("12c", "lattice norm drift / exchange asymmetry", [nerr, exch], "<= 1e-9 / <= 1e-12",
                      nerr <= 1e-9 and exch <= 1e-12))
    # modular reconstruction
    part = mod.ModularPartition(delta=7.3, origin_velocity=0.9)
    x = rng.uniform(-100, 100, 10000)
    n, xb = mod.modular_reduce_position(x, 3.0, part)
    npb, pb = mod.modular_reduce_momentum(x / 10, part)
    ok = (np.all((xb >= 0) & (xb < part.delta)) and np.allclose(n * part.delta + xb, x - 2.7, atol=1e-12, rtol=0)
          and np.all((pb >= -part.momentum_period / 2) & (pb < part.momentum_period / 2))
          and np.allclose(npb * part.momentum_period + pb, x / 10, atol=1e-12, rtol=0))
    out.append(_entry("12d", "modular reconstruction identities", bool(ok), "True", ok))
    # Monte-Carlo convergence slope
    tup = np.array([[0.4, 1.5, -0.3, -0.8]])
    se = []
    ns = (100, 1000, 10000)
    for nr in ns:
        se.append(float(orc.averaged_coherence(orc.OracleConfig(nr, 99, cont.ContinuumParams(t=5.0)), tup).stderr_re[0]))
    slope = float(np.polyfit(np.log(ns), np.log(se), 1)[0])
    out.append(_entry("12e", "Monte-Carlo stderr slope", slope, "-0.5 +- 0.1", abs(slope + 0.5) <= 0.1))
    return out


def reproduce_all(master_seed: int = 0, quick: bool = False) -> tuple[dict, dict]:
    """Run every benchmark; returns (summary, timings).  The summary is deterministic."""
    timings = {}
    t0 = time.perf_counter()
    entries = continuum_benchmarks(master_seed)
    timings["continuum"] = time.perf_counter() - t0
    e8, t8 = oracle_benchmark(master_seed)
    entries += e8
    timings.update(t8)
    e9, t10, _ = haldane_benchmarks(master_seed, quick)
    entries += e9
    timings.update(t10)
    entries.append(determinism_check(master_seed))
    entries += property_checks()
    timings["total"] = time.perf_counter() - t0
    summary = {"mode": "quick" if quick else "full", "master_seed": master_seed, "criteria": entries,
               "all_pass": all(e["pass"] for e in entries)}
    return summary, timings
