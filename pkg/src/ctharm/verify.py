"""Verification battery behind ``ct verify-suite``.

Each check measures one error quantity and compares it with a tolerance from
the defaults file. Families are chosen by model: closed forms only where they
exist (H^3), boundary integrals only on hyperbolic spaces, the full
non-radial transform and geometric convolution only on H^3.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import convolution as conv
from . import geometry as geo
from . import helgason as hg
from . import radial as rd
from . import spectral as sp
from .config import RunConfig
from .density import DensityModel, build_model, check_hypotheses


@dataclass
class Check:
    name: str
    measured: float | None
    tolerance: float | None
    passed: bool
    covered: bool = True
    note: str = ""
    seconds: float = 0.0

    def to_dict(self):
        d = {"name": self.name, "measured": _num(self.measured), "tolerance": _num(self.tolerance),
             "passed": bool(self.passed), "covered": bool(self.covered),
             "seconds": round(float(self.seconds), 3)}
        if self.note:
            d["note"] = self.note
        return d


def _num(x):
    if x is None:
        return None
    x = float(x)
    return x if np.isfinite(x) else None


def _check(name, measured, tol, upper=True, **kw):
    ok = bool(np.isfinite(measured) and (measured <= tol if upper else measured >= tol))
    return Check(name, float(measured), float(tol), ok, **kw)


class _Timer:
    def __enter__(self):
        self.t = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.dt = time.perf_counter() - self.t


def _timed(checks, fn, *args):
    with _Timer() as t:
        out = fn(*args)
    out = out if isinstance(out, list) else [out]
    for c in out:
        c.seconds = t.dt / len(out)
    checks.extend(out)


def solver_config(cfg: RunConfig) -> sp.SolverConfig:
    s = cfg.section("solver")
    return sp.SolverConfig(rtol=s["rtol"], atol=s["atol"], series_order=s["series_order"],
                           r0=s["r0"], match_min=s["match_min"], match_max=s["match_max"],
                           match_offset=s["match_offset"], tail_tol=s["tail_tol"])


def hyperbolic_dim(model: DensityModel) -> int | None:
    if model.name == "hyperbolic":
        return int(dict(model.params)["n"])
    if model.name == "damek_ricci":
        p, q = dict(model.params)["p"], dict(model.params)["q"]
        return p + q + 1 if p == 0 else None
    return None


# ----------------------------------------------------------------------
# families


def density_checks(model):
    rep = check_hypotheses(model)
    return Check("density_hypotheses", float(len(rep.failures)), 0.0, rep.all_pass,
                 note="; ".join(rep.failures))


def spectral_checks(model, cfg: RunConfig, scfg):
    out = []
    r = np.linspace(0.05, 10.0, 60)
    lams = [0.5, 1 + 0.3j, 2 - 1j]
    out.append(_check("phi_at_zero", max(abs(sp.phi(model, l, [0.0], scfg)[0] - 1) for l in lams),
                      cfg.tol("phi_at_zero")))
    sym = max(np.max(np.abs(sp.phi(model, l, r, scfg, canonicalize=False)
                            - sp.phi(model, -l, r, scfg, canonicalize=False))) for l in lams)
    out.append(_check("phi_symmetry", sym, cfg.tol("phi_symmetry")))
    out.append(_check("phi_real", max(np.max(np.abs(sp.phi(model, l, r, scfg).imag)) for l in (0.5, 3.0, 20.0)),
                      cfg.tol("phi_real")))
    out.append(_check("phi_trivial", np.max(np.abs(sp.phi(model, 1j * model.rho, r, scfg) - 1)),
                      cfg.tol("phi_trivial")))
    out.append(_check("reduced_residual", max(sp.reduced_residual(model, l, r, scfg) for l in lams + [20.0]),
                      cfg.tol("reduced_residual")))
    lg = np.geomspace(0.1, 50.0, 8)
    c, err = sp.c_values(model, lg, scfg)
    out.append(_check("c_two_radius", float(np.max(err / np.abs(c))), cfg.tol("c_two_radius")))
    lam = 1 - 0.5j
    ratio = sp.phi(model, lam, [30.0], scfg)[0] / np.exp((1j * lam - model.rho) * 30.0)
    cw = sp.c_function(model, lam, scfg)
    out.append(_check("c_limit", abs(ratio - cw) / abs(cw), cfg.tol("c_limit")))
    return out


def growth_checks(model, cfg, scfg):
    g = sp.c_growth_check(model, cfg=scfg)
    tol = cfg.tol("growth_slope_rel")
    small = abs(g.small_slope - 1.0)
    large = abs(g.large_slope - g.expected_large) / g.expected_large
    note = "" if g.alpha_covered else "|alpha| = 1/2: growth law outside the stated hypotheses"
    return [Check("growth_small_slope", small, tol, small <= tol, g.alpha_covered, note),
            Check("growth_large_slope", large, tol, large <= tol, g.alpha_covered, note)]


def closed_form_checks(model, cfg, scfg):
    r = np.linspace(0.05, 10.0, 200)
    err = 0.0
    for lam in (0.5, 1.0, 2.0, 5.0):
        err = max(err, np.max(np.abs(sp.phi(model, lam, r, scfg) - np.sin(lam * r) / (lam * np.sinh(r)))))
    lams = np.array([0.1, 1.0, 10.0, 100.0])
    c, _ = sp.c_values(model, lams, scfg)
    cerr = float(np.max(np.abs(c - 1 / (1j * lams)) * lams))
    return [_check("phi_closed_form", err, cfg.tol("phi_closed_form")),
            _check("c_closed_form", cerr, cfg.tol("c_closed_form"))]


def boundary_checks(model, n, cfg, scfg):
    pts = [1 - 0.5j, 2 - 1j, 0.5 - 0.3j]
    cross = max(abs(sp.c_function(model, l, scfg) - geo.c_boundary_integral(n, l))
                / abs(geo.c_boundary_integral(n, l)) for l in pts)
    pairs = [(2.0, 1.0), (1 + 0.5j, 0.7), (0.5, 3.0), (3.0, 2.0)]
    pois = max(abs(geo.phi_poisson(n, l, r) - sp.phi(model, l, [r], scfg)[0]) for l, r in pairs)
    return [_check("c_cross", cross, cfg.tol("c_cross")),
            _check("poisson", pois, cfg.tol("poisson"))]


def radial_checks(model, cfg, scfg, state):
    rs = cfg.section("radial")
    table = rd.build_c_table(model, s_max=rs["s_max"], lam_max=rs["lambda_max"], cfg=scfg,
                             lam_min=rs["lambda_min"])
    bumps = [rd.bump(s) for s in rs["calibration_bumps"]]
    C0, disp = rd.calibrate_C0(model, bumps, table, rs["max_calibration_dispersion"])
    state["table"] = table
    out = [_check("c0_dispersion", disp, cfg.tol("c0_dispersion"))]
    pred = table.predicted_C0()
    out.append(Check("c0_vs_prediction", abs(C0 - pred) / pred, cfg.tol("c0_dispersion"),
                     abs(C0 - pred) / pred <= cfg.tol("c0_dispersion"),
                     note=f"C0={C0:.15g}, 1/(2 pi C)={pred:.15g}"))
    u = rd.bump(2.0)
    r = np.linspace(0.0, 2.0, 81)
    fh = rd.spherical_transform(model, u, table=table).values
    inv = rd.inverse_transform(model, fh, table, r, rs["tail_budget"])
    out.append(_check("roundtrip", float(np.max(np.abs(inv.values - u(r)))), cfg.tol("roundtrip")))
    p = rd.plancherel_radial(model, u, u, table)
    out.append(_check("plancherel_self", p.relative_gap, cfg.tol("plancherel")))
    q = rd.plancherel_radial(model, rd.annular_bump(0.2, 1.0), rd.annular_bump(1.5, 3.0), table)
    out.append(_check("plancherel_disjoint", q.relative_gap, cfg.tol("plancherel")))
    return out


def geometry_identity_suite(n: int, cases: int, seed: int) -> dict:
    """Maximum violations over seeded random configurations."""
    rng = np.random.default_rng(seed)
    o = geo.origin(n)
    res = dict(cocycle=0.0, bound=-np.inf, mvt=0.0, limit=0.0, asymptotic=0.0)
    for _ in range(cases):
        x, y, z = (geo.random_point(rng, n) for _ in range(3))
        xi = geo.random_direction(rng, n)
        eta = geo.random_direction(rng, n)
        lxi, leta = geo.boundary(o, xi), geo.boundary(o, eta)
        b_xy = geo.busemann_cocycle(x, y, lxi)
        b_yz = geo.busemann_cocycle(y, z, lxi)
        b_xz = geo.busemann_cocycle(x, z, lxi)
        res["cocycle"] = max(res["cocycle"], abs(b_xz - b_xy - b_yz))
        res["bound"] = max(res["bound"], abs(b_xy) - geo.distance(x, y))
        rx = geo.visual_metric_angle(x, lxi, leta)
        ry = geo.visual_metric_angle(y, lxi, leta)
        mvt = rx**2 * np.exp(b_xy + geo.busemann_cocycle(x, y, leta))
        res["mvt"] = max(res["mvt"], abs(ry**2 - mvt))
        res["limit"] = max(res["limit"], abs(geo.busemann(o, xi, x) - geo.busemann_limit(o, xi, x, 35.0)))
        if geo.visual_metric(o, xi, eta) >= 0.2:
            t = 30.0
            xt = geo.geodesic(o, geo.unit_tangent(o, leta), t)
            val = geo.busemann(o, xi, xt) - t + 2 * geo.gromov_product(o, xi, eta)
            res["asymptotic"] = max(res["asymptotic"], abs(val))
    eps = np.geomspace(1e-4, 1.0, 25)
    ratios = geo.shadow_ratio(n, eps)
    res["shadow_constant"] = float(max(np.max(ratios), 1.0 / np.min(ratios)))
    return res


def geometry_checks(n, cfg):
    gs = cfg.section("geometry")
    res = geometry_identity_suite(n, int(gs["cases"]), int(cfg.seed))
    idt = cfg.tol("geometry_identity")
    note = f"seed={cfg.seed}"
    return [Check("busemann_cocycle", res["cocycle"], idt, res["cocycle"] <= idt, note=note),
            Check("busemann_bound", res["bound"], cfg.tol("geometry_bound_slack"),
                  res["bound"] <= cfg.tol("geometry_bound_slack"), note=note),
            Check("geometric_mvt", res["mvt"], idt, res["mvt"] <= idt, note=note),
            Check("busemann_limit", res["limit"], idt, res["limit"] <= idt, note=note),
            Check("busemann_asymptotics", res["asymptotic"], cfg.tol("geometry_asymptotic"),
                  res["asymptotic"] <= cfg.tol("geometry_asymptotic"), note=note),
            Check("shadow_ratio", res["shadow_constant"], cfg.tol("shadow_constant"),
                  res["shadow_constant"] <= cfg.tol("shadow_constant"))]


def helgason_checks(model, cfg, scfg, state):
    hs = cfg.section("helgason")
    grid = hg.HelgasonGrid(hs["n_r"], hs["n_b"], hs["n_phi"], hs["n_psi"])
    ht = rd.build_c_table(model, s_max=3.0, lam_max=hs["lambda_max"], cfg=scfg)
    ht.C0 = state["table"].C0
    f = hg.off_center(rd.gauss_bump(0.5, 2.5), 0.5)
    T = hg.helgason_forward(f, ht.lambda_grid, grid=grid)
    pts = [hg.axis_point(0.0), hg.axis_point(0.5)]
    inv = hg.helgason_inverse(T, ht, pts)
    exact = np.array([f.at_points(p[None, :])[0] for p in pts])
    out = [_check("helgason_inversion", float(np.max(np.abs(inv.values - exact))), cfg.tol("helgason_inversion"))]
    pl = hg.helgason_plancherel(f, f, ht, grid=grid, tf=T)
    out.append(_check("helgason_plancherel", pl.relative_gap, cfg.tol("helgason_plancherel")))
    u = rd.bump(2.0)
    Tr = hg.helgason_forward(hg.AxialFunction.radial(u), ht.lambda_grid, grid=grid, estimate_error=False)
    fh = rd.spherical_transform(model, u, ht.lambda_grid, cfg=scfg).values
    red = float(np.max(np.abs(Tr.values - fh[:, None])) / np.max(np.abs(fh)))
    out.append(_check("radial_reduction", red, cfg.tol("radial_reduction")))
    return out


def convolution_checks(model, cfg, state):
    table = state["table"]
    f, g = rd.bump(1.0), rd.bump(2.0)
    fg = conv.convolve_geometric(f, g)
    gf = conv.convolve_geometric(g, f)
    out = [_check("commutativity", float(np.max(np.abs(fg.profile.values - gf.profile.values))),
                  cfg.tol("commutativity"))]
    fh = rd.spherical_transform(model, f, table=table).values
    gh = rd.spherical_transform(model, g, table=table).values
    ch = rd.spherical_transform(model, fg.as_profile(), table=table).values
    out.append(_check("multiplicativity", float(np.max(np.abs(ch - fh * gh))), cfg.tol("multiplicativity")))
    spc = conv.convolve_spectral(model, f, g, table, fhat=fh, ghat=gh)
    out.append(_check("spectral_vs_geometric", float(np.max(np.abs(spc.profile.values - fg.profile.values))),
                      cfg.tol("spectral_vs_geometric")))
    y = conv.young_check(model, f, g, fg)
    out.append(Check("young_bound", -y.slack, cfg.tol("young_slack"), y.slack >= -cfg.tol("young_slack")))
    return out


def run_suite(cfg: RunConfig) -> dict:
    model = build_model(cfg.model)
    scfg = solver_config(cfg)
    quick = bool(cfg.inputs.get("quick", False))
    checks: list[Check] = []
    state: dict = {}
    _timed(checks, density_checks, model)
    _timed(checks, spectral_checks, model, cfg, scfg)
    n = hyperbolic_dim(model)
    if not quick:
        _timed(checks, growth_checks, model, cfg, scfg)
    if n == 3:
        _timed(checks, closed_form_checks, model, cfg, scfg)
    if n is not None:
        _timed(checks, boundary_checks, model, n, cfg, scfg)
        _timed(checks, geometry_checks, n, cfg)
    _timed(checks, radial_checks, model, cfg, scfg, state)
    if n == 3 and not quick:
        _timed(checks, helgason_checks, model, cfg, scfg, state)
        _timed(checks, convolution_checks, model, cfg, state)
    relevant = [c for c in checks if c.covered]
    return {"schema_version": "1.0", "command": cfg.command, "model": model.to_descriptor(),
            "seed": int(cfg.seed), "checks": [c.to_dict() for c in checks],
            "all_passed": all(c.passed for c in relevant)}
