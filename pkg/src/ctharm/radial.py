"""Spherical transform of radial profiles, C0 calibration, inversion and Plancherel.

The spectral side lives on a fixed grid of composite Gauss-Legendre panels in
lambda. Everything expensive (c-function values, phi_lambda at quadrature
nodes) is computed once per model and grid and reused.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from . import spectral
from .density import DensityModel
from .errors import InconsistentCalibration, TailTooFat, UnboundedSupport

GAUSS_N = 32
LAMBDA_MIN = 1e-3
LAMBDA_MAX = 500.0
TAIL_REL = 1e-14
TAIL_RUN = 50


# ----------------------------------------------------------------------
# profiles


@dataclass
class RadialProfile:
    """u(r) on [0, support_radius], zero beyond.

    Either ``func`` (vectorised callable) or ``r_grid``/``values`` (cubic
    spline) must be given.
    """

    support_radius: float
    func: Callable | None = None
    r_grid: np.ndarray | None = None
    values: np.ndarray | None = None
    name: str = "profile"
    inner_radius: float = 0.0
    _spline: CubicSpline | None = field(default=None, init=False, repr=False)

    def __post_init__(self):
        if not np.isfinite(self.support_radius) or self.support_radius <= 0:
            raise UnboundedSupport("profile needs a finite positive support radius")
        if self.func is None:
            if self.r_grid is None or self.values is None:
                raise ValueError("RadialProfile needs func or (r_grid, values)")
            self.r_grid = np.asarray(self.r_grid, dtype=float)
            self.values = np.asarray(self.values)
            if np.any(np.diff(self.r_grid) <= 0) or self.r_grid[0] < 0:
                raise ValueError("r_grid must be increasing and start at r >= 0")
            self._spline = CubicSpline(self.r_grid, self.values)

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        inside = (r < self.support_radius) & (r >= 0)
        out = np.zeros(r.shape, dtype=complex if self._is_complex() else float)
        if self.func is not None:
            out[inside] = self.func(r[inside])
        else:
            out[inside] = self._spline(r[inside])
        return out

    def _is_complex(self):
        return self.values is not None and np.iscomplexobj(self.values)

    def scaled(self, a) -> "RadialProfile":
        f = self
        return RadialProfile(self.support_radius, func=lambda r: a * f(r),
                             name=f"{a}*{self.name}", inner_radius=self.inner_radius)

    def nodes(self, lam_max: float = LAMBDA_MAX):
        """Composite Gauss nodes/weights on [inner, support] resolving phi up to lam_max."""
        return radial_nodes(self.inner_radius, self.support_radius, lam_max)

    def norm(self, model: DensityModel, p: int = 2) -> float:
        r, w = radial_nodes(self.inner_radius, self.support_radius, 0.0)
        return float(np.sum(w * np.abs(self(r)) ** p * model.A(r)) ** (1.0 / p))


def bump(s: float) -> RadialProfile:
    """C-infinity cutoff exp(-1/(1 - (r/s)^2)) on [0, s)."""

    def f(r):
        x = (r / s) ** 2
        with np.errstate(divide="ignore", over="ignore"):
            return np.where(x < 1, np.exp(-1.0 / np.maximum(1.0 - x, 1e-300)), 0.0)

    return RadialProfile(float(s), func=f, name=f"bump(s={s})")


def gauss_bump(sigma: float, s: float) -> RadialProfile:
    """exp(-r^2/sigma^2) tapered to compact support [0, s) by exp(1 - 1/(1 - (r/s)^2)).

    The transform decays like a Gaussian in lambda until a negligible
    cutoff-induced tail, which suits short lambda grids.
    """

    def f(r):
        x = (r / s) ** 2
        with np.errstate(divide="ignore", over="ignore"):
            return np.where(x < 1, np.exp(-(r / sigma) ** 2 + 1.0 - 1.0 / np.maximum(1.0 - x, 1e-300)), 0.0)

    return RadialProfile(float(s), func=f, name=f"gauss(sigma={sigma},s={s})")


def annular_bump(a: float, b: float) -> RadialProfile:
    """Smooth bump supported in (a, b); vanishes to infinite order at both ends."""
    mid, half = 0.5 * (a + b), 0.5 * (b - a)

    def f(r):
        x = ((r - mid) / half) ** 2
        with np.errstate(divide="ignore", over="ignore"):
            return np.where(x < 1, np.exp(-1.0 / np.maximum(1.0 - x, 1e-300)), 0.0)

    return RadialProfile(float(b), func=f, name=f"annulus({a},{b})", inner_radius=float(a))


def profile_from_spec(spec: dict) -> RadialProfile:
    kind = spec.get("kind", "bump")
    if kind == "bump":
        return bump(float(spec.get("s", 1.0)))
    if kind == "gauss":
        return gauss_bump(float(spec.get("sigma", 0.5)), float(spec.get("s", 2.5)))
    if kind == "annulus":
        return annular_bump(float(spec["a"]), float(spec["b"]))
    if kind == "grid":
        return RadialProfile(float(spec.get("support", spec["r"][-1])), r_grid=spec["r"],
                             values=spec["values"], name="grid")
    raise ValueError(f"unknown profile kind {kind!r}")


# ----------------------------------------------------------------------
# quadrature grids


def _gauss(n=GAUSS_N):
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


def _panels(edges, n=GAUSS_N):
    x, w = _gauss(n)
    a, b = edges[:-1, None], edges[1:, None]
    nodes = 0.5 * (b - a) * x[None, :] + 0.5 * (a + b)
    weights = 0.5 * (b - a) * w[None, :]
    return nodes.ravel(), weights.ravel()


def radial_nodes(a: float, b: float, lam_max: float, n: int = GAUSS_N):
    """Gauss panels on [a, b] fine enough for integrands oscillating like exp(i lam_max r)."""
    width = min(b - a, 0.25, 30.0 / max(lam_max, 1e-9))
    npan = max(int(np.ceil((b - a) / width)), 4)
    return _panels(np.linspace(a, b, npan + 1), n)


def lambda_grid(s_max: float, lam_min: float = LAMBDA_MIN, lam_max: float = LAMBDA_MAX,
                n: int = GAUSS_N):
    """Composite Gauss grid on [lam_min, lam_max]: panel widths double up to 16/s_max."""
    w_max = 16.0 / s_max
    edges = [lam_min]
    w = lam_min
    while edges[-1] < lam_max:
        nxt = edges[-1] + w
        if nxt >= lam_max or lam_max - nxt < 0.25 * w:
            nxt = lam_max
        edges.append(nxt)
        w = min(2 * w, w_max)
    return _panels(np.asarray(edges), n)


# ----------------------------------------------------------------------
# c-function table


@dataclass
class CFunctionTable:
    model: DensityModel
    lambda_grid: np.ndarray
    weights: np.ndarray
    c_values: np.ndarray
    c_errors: np.ndarray
    plancherel_density: np.ndarray
    C0: float | None = None
    C0_dispersion: float | None = None
    C0_samples: np.ndarray | None = None
    cfg: spectral.SolverConfig | None = None
    s_max: float = 4.0
    _phi_cache: dict = field(default_factory=dict, repr=False)

    @property
    def lam_min(self):
        return float(self.lambda_grid[0])

    def phi_matrix(self, r) -> np.ndarray:
        """phi_lambda(r) for all grid lambdas (real; memoised on the r array)."""
        r = np.ascontiguousarray(r, dtype=float)
        key = (r.shape, r.tobytes())
        if key not in self._phi_cache:
            out = np.empty((len(self.lambda_grid), len(r)))
            for sl in _chunks(len(self.lambda_grid), 512):
                out[sl] = spectral.phi(self.model, self.lambda_grid[sl], r, self.cfg).real
            self._phi_cache[key] = out
        return self._phi_cache[key]

    def transform_nodes(self, profile: "RadialProfile"):
        """Shared r-quadrature nodes on [0, s_max] (one phi matrix serves every profile)."""
        if profile.support_radius <= self.s_max:
            return radial_nodes(0.0, self.s_max, float(self.lambda_grid[-1]))
        return radial_nodes(profile.inner_radius, profile.support_radius,
                            float(self.lambda_grid[-1]))

    def small_lambda_exponent(self, npts: int = 64) -> float:
        """Log-log slope of the Plancherel density over the first grid nodes (2 expected)."""
        x = np.log(self.lambda_grid[:npts])
        y = np.log(self.plancherel_density[:npts])
        return float(np.polyfit(x, y, 1)[0])

    def predicted_C0(self) -> float:
        """1 / (2 pi C) with C the leading density coefficient."""
        return 1.0 / (2.0 * np.pi * float(self.model.leading_coefficient))

    def to_rows(self):
        return np.column_stack([self.lambda_grid, self.c_values.real, self.c_values.imag,
                                self.plancherel_density])


def _chunks(n, size):
    for i in range(0, n, size):
        yield slice(i, min(i + size, n))


def build_c_table(model: DensityModel, s_max: float = 4.0, lam_max: float = LAMBDA_MAX,
                  cfg: spectral.SolverConfig | None = None, lam_min: float = LAMBDA_MIN,
                  n: int = GAUSS_N) -> CFunctionTable:
    lam, w = lambda_grid(s_max, lam_min, lam_max, n)
    c, err = spectral.c_values(model, lam, cfg)
    return CFunctionTable(model=model, lambda_grid=lam, weights=w, c_values=c, c_errors=err,
                          plancherel_density=np.abs(c) ** -2.0, cfg=cfg, s_max=s_max)


# ----------------------------------------------------------------------
# transform / calibration / inversion


@dataclass
class Transform:
    lam: np.ndarray
    values: np.ndarray
    error: float | None = None
    profile: RadialProfile | None = None


def spherical_transform(model: DensityModel, profile: RadialProfile, lambda_grid=None,
                        table: CFunctionTable | None = None, estimate_error: bool = False,
                        cfg=None) -> Transform:
    """f^(lambda) = int_0^s u(r) phi_lambda(r) A(r) dr by composite Gauss quadrature in r.

    With ``table`` the cached phi matrix on its lambda grid is used. The
    error estimate compares against a 24-point rule on the same panels.
    """
    if not np.isfinite(profile.support_radius):
        raise UnboundedSupport("profile support must be finite")
    if table is not None and lambda_grid is None:
        lam = table.lambda_grid
        cfg = table.cfg
    else:
        lam = np.atleast_1d(np.asarray(lambda_grid, dtype=complex))
    lam_max = float(np.max(np.abs(lam))) if len(lam) else 1.0

    def run(n):
        use_table = table is not None and lambda_grid is None
        if use_table and n == GAUSS_N:
            r, w = table.transform_nodes(profile)
        else:
            r, w = radial_nodes(profile.inner_radius, profile.support_radius, lam_max, n)
        weight = w * profile(r) * model.A(r)
        if use_table and n == GAUSS_N:
            return table.phi_matrix(r) @ weight
        out = np.empty(len(lam), dtype=complex)
        for sl in _chunks(len(lam), 512):
            out[sl] = spectral.phi(model, lam[sl], r, cfg) @ weight
        return out

    vals = run(GAUSS_N)
    err = None
    if estimate_error:
        err = float(np.max(np.abs(vals - run(24))))
    return Transform(lam=np.asarray(lam), values=vals, error=err, profile=profile)


def lambda_cutoff(table: CFunctionTable, fhat: np.ndarray, rel: float = TAIL_REL,
                  run: int = TAIL_RUN) -> int:
    """Number of grid nodes kept: up to the first run of `run` nodes below rel*peak."""
    mag = np.abs(fhat) * table.plancherel_density
    small = mag < rel * np.max(mag)
    count = 0
    for i, s in enumerate(small):
        count = count + 1 if s else 0
        if count >= run:
            return i - run + 1
    return len(mag)


def _spectral_integral(table, integrand, keep):
    """Quadrature of integrand (nodes along axis 0) with the [0, lam_min] quadratic piece."""
    w = table.weights[:keep]
    body = np.tensordot(w, integrand[:keep], axes=(0, 0))
    return body + integrand[0] * table.lam_min / 3.0


def calibrate_C0(model: DensityModel, profiles: Sequence[RadialProfile],
                 table: CFunctionTable, max_dispersion: float = 1e-4):
    """C0 = u(0) / int f^ |c|^-2 d lambda per profile; stores mean and dispersion on the table."""
    if len(profiles) < 1:
        raise ValueError("need at least one reference profile")
    samples = []
    for p in profiles:
        fh = spherical_transform(model, p, table=table).values
        keep = lambda_cutoff(table, fh)
        integral = _spectral_integral(table, fh * table.plancherel_density, keep).real
        samples.append(float(p(np.array([0.0]))[0].real) / integral)
    samples = np.asarray(samples)
    mean = float(np.mean(samples))
    disp = float(np.max(np.abs(samples - mean)) / abs(mean))
    table.C0, table.C0_dispersion, table.C0_samples = mean, disp, samples
    if disp > max_dispersion:
        raise InconsistentCalibration(f"C0 dispersion {disp:.3g} exceeds {max_dispersion}")
    return mean, disp


@dataclass
class Inversion:
    r: np.ndarray
    values: np.ndarray
    lambda_max: float
    truncation_bound: float

    def profile(self, support=None) -> RadialProfile:
        s = support if support is not None else float(self.r[-1])
        return RadialProfile(s, r_grid=self.r, values=self.values, name="inverse")


def inverse_transform(model: DensityModel, fhat: np.ndarray, table: CFunctionTable, r_grid,
                      tail_budget: float = 1e-6) -> Inversion:
    """u(r) = C0 int f^(lambda) phi_lambda(r) |c|^-2 d lambda, truncated at Lambda_max."""
    if table.C0 is None:
        raise InconsistentCalibration("table has no calibrated C0")
    fhat = np.asarray(fhat)
    r = np.asarray(r_grid, dtype=float)
    mag = np.abs(fhat) * table.plancherel_density
    peak = float(np.max(mag)) if len(mag) else 0.0
    if peak == 0.0:
        return Inversion(r, np.zeros(len(r)), table.lambda_grid[-1], 0.0)
    keep = lambda_cutoff(table, fhat)
    if keep == len(fhat) and mag[-1] > tail_budget * peak:
        raise TailTooFat(f"|f^| |c|^-2 at Lambda_max is {mag[-1] / peak:.3g} of peak")
    P = table.phi_matrix(r)
    integrand = (fhat * table.plancherel_density)[:, None] * P
    vals = table.C0 * _spectral_integral(table, integrand, keep)
    # crude tail bound: last retained magnitude over one panel width, times sup|phi| = 1
    bound = float(table.C0 * mag[keep - 1] * (table.lambda_grid[keep - 1] - table.lambda_grid[max(keep - GAUSS_N, 0)]))
    return Inversion(r, np.real_if_close(vals, tol=1e6),
                     float(table.lambda_grid[keep - 1]), bound)


@dataclass
class PlancherelResult:
    lhs: complex
    rhs: complex
    relative_gap: float
    norm_f: float
    norm_g: float

    def to_dict(self):
        return {"lhs": [self.lhs.real, self.lhs.imag], "rhs": [self.rhs.real, self.rhs.imag],
                "relative_gap": self.relative_gap, "norm_f": self.norm_f, "norm_g": self.norm_g}


def plancherel_radial(model: DensityModel, f: RadialProfile, g: RadialProfile,
                      table: CFunctionTable) -> PlancherelResult:
    """lhs = int f conj(g) A dr, rhs = C0 int f^ conj(g^) |c|^-2; gap relative to ||f|| ||g||."""
    if table.C0 is None:
        raise InconsistentCalibration("table has no calibrated C0")
    lo = min(f.inner_radius, g.inner_radius)
    hi = max(f.support_radius, g.support_radius)
    r, w = radial_nodes(lo, hi, 0.0)
    lhs = complex(np.sum(w * f(r) * np.conj(g(r)) * model.A(r)))
    fh = spherical_transform(model, f, table=table).values
    gh = spherical_transform(model, g, table=table).values
    keep = max(lambda_cutoff(table, fh), lambda_cutoff(table, gh))
    rhs = complex(table.C0 * _spectral_integral(table, fh * np.conj(gh) * table.plancherel_density, keep))
    nf, ng = f.norm(model), g.norm(model)
    denom = nf * ng
    gap = abs(lhs - rhs) / denom if denom > 0 else abs(lhs - rhs)
    return PlancherelResult(lhs, rhs, float(gap), nf, ng)
