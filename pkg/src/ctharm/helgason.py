"""Non-radial Fourier transform on H^3 for functions with axial symmetry.

Conventions: basepoint o = e0, symmetry axis e = (0, 0, 1), rho = 1.
A boundary point at polar angle psi from the axis is xi(psi) = (sin psi, 0, cos psi);
by axial symmetry the transform depends on xi only through psi.

Forward transform. In polar coordinates (r, t, phi) about o with the pole
aligned with xi, B_{xi,o}(y) = log(cosh r - sinh r cos t). Substituting
b = B_{xi,o}(y) (so sin t dt = e^b db / sinh r) gives

    f~(lambda, xi) = int_0^s sinh r int_{-r}^{r} e^{-i lambda b} Phi(r, b) db dr,
    Phi(r, b)      = int_0^{2 pi} f(r, theta(t(b), phi)) d phi,

where theta is the angle to the symmetry axis. The b-integral is done by a
Filon-type rule: Phi is expanded in Legendre polynomials on [-r, r] and
int_{-1}^{1} e^{-i w x} P_k(x) dx = 2 (-i)^k j_k(w), so the cost does not
depend on lambda.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import spherical_jn

from . import geometry as geo
from .errors import DomainError, QuadratureBudgetExceeded, TailTooFat
from .radial import CFunctionTable, RadialProfile

RHO = 1.0
GAUSS_TAIL = 32  # nodes per lambda panel, for the truncation bound


@dataclass(frozen=True)
class HelgasonGrid:
    n_r: int = 96
    n_b: int = 64
    n_phi: int = 64
    n_psi: int = 48

    def coarser(self) -> "HelgasonGrid":
        # floor of 4 keeps the nested grid strictly coarser for every n >= 6
        return HelgasonGrid(*(max(4, 2 * n // 3) for n in (self.n_r, self.n_b, self.n_phi, self.n_psi)))

    def finer(self) -> "HelgasonGrid":
        return HelgasonGrid(2 * self.n_r, 2 * self.n_b, 2 * self.n_phi, 2 * self.n_psi)


DEFAULT_GRID = HelgasonGrid()


@dataclass
class AxialFunction:
    """f(r, theta) on H^3, theta the angle at o to the symmetry axis; zero for r >= s."""

    func: object
    support_radius: float
    name: str = "axial"

    def __call__(self, r, theta):
        r = np.asarray(r, dtype=float)
        out = np.zeros(np.broadcast(r, theta).shape)
        rr, tt = np.broadcast_arrays(r, theta)
        inside = rr < self.support_radius
        out[inside] = self.func(rr[inside], tt[inside])
        return out

    def at_points(self, pts):
        """Evaluate at hyperboloid points (N, 4)."""
        pts = np.asarray(pts, dtype=float)
        r = np.arccosh(np.maximum(pts[..., 0], 1.0))
        nrm = np.linalg.norm(pts[..., 1:], axis=-1)
        cos_t = np.where(nrm > 0, pts[..., 3] / np.where(nrm > 0, nrm, 1.0), 1.0)
        return self(r, np.arccos(np.clip(cos_t, -1.0, 1.0)))

    @classmethod
    def from_point_function(cls, F, support_radius, name="axial"):
        """Wrap F(points) (points on the hyperboloid) as an axial function."""

        def func(r, theta):
            pts = np.stack([np.cosh(r), np.sinh(r) * np.sin(theta), np.zeros_like(r),
                            np.sinh(r) * np.cos(theta)], axis=-1)
            return F(pts)

        return cls(func, float(support_radius), name)

    @classmethod
    def from_samples(cls, r_grid, theta_grid, values, name="samples"):
        from scipy.interpolate import RectBivariateSpline

        spl = RectBivariateSpline(r_grid, theta_grid, values, kx=3, ky=3)
        return cls(lambda r, t: spl.ev(r, t), float(r_grid[-1]), name)

    @classmethod
    def radial(cls, profile: RadialProfile):
        return cls(lambda r, t: profile(r), profile.support_radius, f"radial[{profile.name}]")

    def translated(self, x) -> "AxialFunction":
        """y -> f(boost(x) y) for a point x on the axis (keeps axial symmetry)."""
        x = np.asarray(x, dtype=float)
        if np.linalg.norm(x[1:3]) > 1e-12:
            raise DomainError("translation must be along the symmetry axis")
        M = geo.boost(x)
        base = self
        d = float(np.arccosh(x[0]))
        return AxialFunction.from_point_function(lambda p: base.at_points(p @ M.T),
                                                 self.support_radius + d, f"{self.name}@x")


def axis_point(d: float) -> np.ndarray:
    """Point at signed distance d from o along the symmetry axis."""
    return np.array([np.cosh(d), 0.0, 0.0, np.sinh(d)])


def off_center(profile: RadialProfile, d: float) -> AxialFunction:
    """y -> u(dist(p, y)) for the axis point p at signed distance d from o."""
    p = axis_point(d)

    def F(pts):
        c = np.maximum(-geo.mink(pts, p[None, :]), 1.0)
        return profile(np.arccosh(c))

    return AxialFunction.from_point_function(F, abs(d) + profile.support_radius,
                                             f"{profile.name}@{d}")


def xi_of_psi(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=float)
    return np.stack([np.sin(psi), np.zeros_like(psi), np.cos(psi)], axis=-1)


def psi_nodes(n: int):
    """Gauss nodes in cos psi; weights are those of d lambda_o = (1/2) sin psi d psi."""
    x, w = np.polynomial.legendre.leggauss(n)
    return np.arccos(x[::-1]), 0.5 * w[::-1]


@dataclass
class HelgasonTable:
    lambda_grid: np.ndarray
    psi_grid: np.ndarray
    values: np.ndarray  # (n_lambda, n_psi)
    basepoint: np.ndarray
    error: np.ndarray | None = None
    psi_weights: np.ndarray | None = None

    def to_rows(self):
        L, P = np.meshgrid(self.lambda_grid, self.psi_grid, indexing="ij")
        return np.column_stack([L.ravel(), P.ravel(), self.values.real.ravel(),
                                self.values.imag.ravel()])


def _forward_once(f: AxialFunction, lam, psi, grid: HelgasonGrid):
    s = f.support_radius
    xr, wr = np.polynomial.legendre.leggauss(grid.n_r)
    r = 0.5 * s * (xr + 1.0)
    wr = 0.5 * s * wr
    xb, wb = np.polynomial.legendre.leggauss(grid.n_b)
    K = grid.n_b
    # Legendre analysis matrix: a_k = (2k+1)/2 sum_j w_j P_k(x_j) g(x_j)
    P = np.polynomial.legendre.legvander(xb, K - 1)  # (n_b, K)
    analysis = (P * wb[:, None]).T * ((2 * np.arange(K) + 1) / 2.0)[:, None]  # (K, n_b)
    phis = 2 * np.pi * np.arange(grid.n_phi) / grid.n_phi

    R, X = np.meshgrid(r, xb, indexing="ij")  # (n_r, n_b)
    b = R * X
    cos_t = np.clip((np.cosh(R) - np.exp(b)) / np.sinh(R), -1.0, 1.0)
    sin_t = np.sqrt(1.0 - cos_t**2)

    lam = np.asarray(lam, dtype=float)
    # J[l, i, k] = 2 (-i)^k j_k(lam_l r_i)
    kk = np.arange(K)
    J = 2.0 * (-1j) ** kk[None, None, :] * spherical_jn(kk[None, None, :], lam[:, None, None] * r[None, :, None])
    radial_w = wr * np.sinh(r) * r  # db = r dx

    out = np.empty((len(lam), len(psi)), dtype=complex)
    for j, ps in enumerate(psi):
        cos_th = cos_t[..., None] * np.cos(ps) + sin_t[..., None] * np.sin(ps) * np.cos(phis)
        theta = np.arccos(np.clip(cos_th, -1.0, 1.0))
        vals = f(np.broadcast_to(R[..., None], theta.shape), theta)
        Phi = vals.sum(axis=-1) * (2 * np.pi / grid.n_phi)  # (n_r, n_b)
        coef = Phi @ analysis.T  # (n_r, K)
        out[:, j] = np.einsum("lik,ik,i->l", J, coef, radial_w)
    return out


def helgason_forward(f: AxialFunction, lambda_grid, psi_grid=None, grid: HelgasonGrid = DEFAULT_GRID,
                     estimate_error: bool = True, budget: float | None = None) -> HelgasonTable:
    """f~^o(lambda, xi(psi)) on a (lambda, psi) grid.

    ``psi_grid`` defaults to Gauss nodes in cos psi. With ``estimate_error`` a
    coarser nested grid is evaluated and |fine - coarse| is reported per entry;
    if ``budget`` is given and the largest estimate exceeds budget * max|f~|,
    QuadratureBudgetExceeded is raised.
    """
    lam = np.asarray(lambda_grid, dtype=float)
    weights = None
    if psi_grid is None:
        psi_grid, weights = psi_nodes(grid.n_psi)
    psi = np.asarray(psi_grid, dtype=float)
    vals = _forward_once(f, lam, psi, grid)
    err = None
    if estimate_error:
        err = np.abs(vals - _forward_once(f, lam, psi, grid.coarser()))
        if budget is not None and np.max(err) > budget * max(np.max(np.abs(vals)), 1e-300):
            raise QuadratureBudgetExceeded(f"forward transform error {np.max(err):.3g} over budget")
    return HelgasonTable(lam, psi, vals, geo.origin(3), err, weights)


def basepoint_shift(table: HelgasonTable, x) -> HelgasonTable:
    """f~^x(lambda, xi) = exp((i lambda + 1) B_{xi,o}(x)) f~^o(lambda, xi), x on the axis."""
    x = geo.check_point(x)
    if np.linalg.norm(x[1:3]) > 1e-12:
        raise DomainError("basepoint_shift keeps axial symmetry only for points on the axis")
    o = table.basepoint
    ls = np.column_stack([np.ones(len(table.psi_grid)), xi_of_psi(table.psi_grid)])
    # B_{xi,o}(x) with l normalised relative to the table basepoint
    B = np.log(geo.mink(x[None, :], ls) / geo.mink(o[None, :], ls))
    factor = np.exp((1j * table.lambda_grid[:, None] + RHO) * B[None, :])
    err = None if table.error is None else table.error * np.abs(factor)
    return HelgasonTable(table.lambda_grid, table.psi_grid, table.values * factor, x, err,
                         table.psi_weights)


def aberration(x, psi) -> np.ndarray:
    """Polar angle at the axis point x of the boundary point xi(psi) (seen from o)."""
    x = np.asarray(x, dtype=float)
    ls = np.column_stack([np.ones(len(psi)), xi_of_psi(psi)])
    loc = ls @ np.linalg.inv(geo.boost(x)).T
    loc = loc / loc[:, :1]
    return np.arccos(np.clip(loc[:, 3], -1.0, 1.0))


def forward_at(f: AxialFunction, x, lambda_grid, psi_grid, grid: HelgasonGrid = DEFAULT_GRID):
    """Direct f~^x: transform of the translated function with the quadrature centred at x."""
    g = f.translated(x)
    psi_local = aberration(x, np.asarray(psi_grid, dtype=float))
    return _forward_once(g, np.asarray(lambda_grid, dtype=float), psi_local, grid)


@dataclass
class InversionResult:
    values: np.ndarray
    error: np.ndarray
    truncation: float


def _boundary_kernel(table: HelgasonTable, x, n_chi: int):
    """Nodes for the xi-integral: returns (B_{xi,o}(x) over (psi, chi), weights)."""
    psi = table.psi_grid
    wpsi = table.psi_weights
    if wpsi is None:
        raise DomainError("inversion needs a table on Gauss nodes in cos psi")
    x = np.asarray(x, dtype=float)
    on_axis = np.linalg.norm(x[1:3]) < 1e-14
    chis = np.array([0.0]) if on_axis else 2 * np.pi * np.arange(n_chi) / n_chi
    wchi = np.full(len(chis), 1.0 / len(chis))
    l = np.stack([np.ones((len(psi), len(chis))),
                  np.sin(psi)[:, None] * np.cos(chis)[None, :],
                  np.sin(psi)[:, None] * np.sin(chis)[None, :],
                  np.cos(psi)[:, None] * np.ones(len(chis))[None, :]], axis=-1)
    B = np.log(-geo.mink(x[None, None, :], l))
    return B, wpsi[:, None] * wchi[None, :]


def helgason_inverse(table: HelgasonTable, c_table: CFunctionTable, points, n_chi: int = 64,
                     tail_budget: float = 1e-3) -> InversionResult:
    """f(x) = C0 int int f~^o(lambda, xi) e^{(i lambda - 1) B_{xi,o}(x)} d lambda_o(xi) |c|^-2 d lambda."""
    if c_table.C0 is None:
        raise DomainError("c_table needs a calibrated C0")
    lam = table.lambda_grid
    if len(lam) != len(c_table.lambda_grid) or np.max(np.abs(lam - c_table.lambda_grid)) > 0:
        raise DomainError("Helgason table and c-table must share the lambda grid")
    dens = c_table.plancherel_density
    w = c_table.weights
    mag = np.max(np.abs(table.values), axis=1) * dens
    if mag[-1] > tail_budget * np.max(mag):
        raise TailTooFat(f"|f~| |c|^-2 at Lambda_max is {mag[-1] / np.max(mag):.3g} of peak")
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    vals = np.empty(len(pts))
    errs = np.empty(len(pts))
    trunc = float(c_table.C0 * mag[-1] * (lam[-1] - lam[-GAUSS_TAIL]))
    for i, x in enumerate(pts):
        B, wb = _boundary_kernel(table, x, n_chi)
        # integrand over (lambda, psi, chi)
        ker = np.exp((1j * lam[:, None, None] - RHO) * B[None, :, :])
        inner = np.einsum("lp,lpc,pc->l", table.values, ker, wb)
        total = inner * dens
        val = c_table.C0 * (np.dot(w, total) + total[0] * lam[0] / 3.0)
        q_err = 0.0
        if table.error is not None:
            q_err = c_table.C0 * float(np.dot(w, np.einsum("lp,lpc,pc->l", table.error, np.abs(ker), wb) * dens))
        vals[i] = val.real
        errs[i] = q_err + trunc
    return InversionResult(vals, errs, trunc)



@dataclass
class HelgasonPlancherel:
    lhs: float
    rhs: float
    relative_gap: float
    lhs_error: float
    rhs_error: float


def l2_inner(f: AxialFunction, g: AxialFunction, n_r: int = 128, n_theta: int = 96):
    """int f g dvol in polar coordinates about o (axial functions)."""
    s = max(f.support_radius, g.support_radius)
    xr, wr = np.polynomial.legendre.leggauss(n_r)
    r = 0.5 * s * (xr + 1)
    wr = 0.5 * s * wr
    xt, wt = np.polynomial.legendre.leggauss(n_theta)
    th = np.arccos(xt)
    R, T = np.meshgrid(r, th, indexing="ij")
    val = f(R, T) * g(R, T)
    return float(2 * np.pi * np.einsum("ij,i,j->", val, wr * np.sinh(r) ** 2, wt))


def helgason_plancherel(f: AxialFunction, g: AxialFunction, c_table: CFunctionTable,
                        grid: HelgasonGrid = DEFAULT_GRID, tf: HelgasonTable | None = None,
                        tg: HelgasonTable | None = None) -> HelgasonPlancherel:
    """lhs = int f g dvol; rhs = C0 int int f~ conj(g~) d lambda_o |c|^-2 d lambda."""
    lam = c_table.lambda_grid
    tf = tf or helgason_forward(f, lam, grid=grid)
    tg = tg if tg is not None else (tf if g is f else helgason_forward(g, lam, grid=grid))
    dens = c_table.plancherel_density
    w = c_table.weights
    inner = (tf.values * np.conj(tg.values)) @ tf.psi_weights * dens
    rhs = c_table.C0 * (np.dot(w, inner) + inner[0] * lam[0] / 3.0)
    rhs_err = 0.0
    if tf.error is not None and tg.error is not None:
        e = (tf.error * np.abs(tg.values) + np.abs(tf.values) * tg.error) @ tf.psi_weights * dens
        rhs_err = float(c_table.C0 * np.dot(w, e))
    lhs = l2_inner(f, g)
    lhs_c = l2_inner(f, g, 96, 64)
    nf = np.sqrt(abs(l2_inner(f, f)))
    ng = np.sqrt(abs(l2_inner(g, g)))
    denom = nf * ng if nf * ng > 0 else 1.0
    return HelgasonPlancherel(lhs, float(rhs.real), float(abs(lhs - rhs.real) / denom),
                              abs(lhs - lhs_c), rhs_err)
