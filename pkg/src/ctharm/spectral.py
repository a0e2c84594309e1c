"""Spherical functions, Jost solutions and the c-function.

The radial eigenvalue problem ``u'' + (A'/A) u' = -(lambda^2 + rho^2) u`` is
solved in three regimes:

1. ``r <= r0``: power series about the regular singular point (indicial root 0).
2. ``r0 < r <= switch``: the scaled variable ``y = exp(rho r) u``, which obeys
   ``y'' = (2 rho - L) y' + (rho L - 2 rho^2 - lambda^2) y`` with ``L = A'/A``
   and stays O(1) for real lambda.
3. ``r > switch`` (only when ``|lambda| >= ab_min``): variation of parameters
   for the reduced function ``v = A^{1/2} u = a e^{i lambda r} + b e^{-i lambda r}``,
   ``a' = G v e^{-i lambda r} / (2 i lambda)``, ``b' = -G v e^{i lambda r} / (2 i lambda)``.
   The coefficients move only where G is non-negligible, so large lambda is cheap.

All stages use an adaptive embedded Runge-Kutta pair (DOP853) and are
vectorised over a batch of spectral parameters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .density import DensityModel
from .errors import (
    DomainError,
    MatchRadiusTooSmall,
    SeriesDivergence,
    StiffnessFailure,
    WronskianDegenerate,
    ZeroLambda,
)


@dataclass(frozen=True)
class SolverConfig:
    rtol: float = 1e-10
    atol: float = 1e-12
    series_order: int = 8
    r0: float = 1e-3
    switch: float = 1.0
    switch_min: float = 0.05
    switch_scale: float = 8.0
    ab_min: float = 1.0
    match_min: float = 20.0
    match_max: float = 60.0
    match_offset: float = 5.0
    tail_tol: float = 1e-10
    batch_rtol_scale: float = 0.1


DEFAULT_CONFIG = SolverConfig()


def _cfg(cfg):
    return DEFAULT_CONFIG if cfg is None else cfg


def match_radius(model: DensityModel, cfg: SolverConfig | None = None) -> float:
    """Smallest R >= match_min with the fitted tail of r|G| below tail_tol (capped)."""
    cfg = _cfg(cfg)
    for R in np.arange(cfg.match_min, cfg.match_max + 1e-9, 0.5):
        if model.g_tail_integral(R) < cfg.tail_tol:
            return float(R)
    return float(cfg.match_max)


def canonical_lambda(lam):
    """Representative of {lambda, -lambda} with Im <= 0 (and Re >= 0 on the real axis)."""
    lam = np.asarray(lam, dtype=complex)
    flip = (lam.imag > 0) | ((lam.imag == 0) & (lam.real < 0))
    return np.where(flip, -lam, lam)


# ----------------------------------------------------------------------
# series start


def series_coefficients(model: DensityModel, lams, order: int) -> np.ndarray:
    """Power-series coefficients u_m of phi_lambda, shape (order + 1, len(lams))."""
    lams = np.atleast_1d(np.asarray(lams, dtype=complex))
    mu = lams**2 + model.rho**2
    coefs, k = model.taylor_coefficients
    b = coefs[k:]
    if len(b) < order + 1:
        raise SeriesDivergence("not enough density Taylor coefficients")
    u = np.zeros((order + 1, len(lams)), dtype=complex)
    u[0] = 1.0
    for N in range(1, order + 1):
        acc = np.zeros(len(lams), dtype=complex)
        for m in range(1, N):
            acc += m * u[m] * b[N - m]
        acc *= (k + N - 1)
        if N >= 2:
            T = np.zeros(len(lams), dtype=complex)
            for m in range(0, N - 1):
                T += u[m] * b[N - 2 - m]
            acc += mu * T
        u[N] = -acc / ((k + N - 1) * N * b[0])
    return u


def _series_values(model, lams, r, order):
    """u and u' from the series at the points r (vector), shape (len(lams), len(r))."""
    u = series_coefficients(model, lams, order)
    r = np.atleast_1d(r)
    m = np.arange(order + 1)[:, None, None]
    pw = r[None, None, :] ** m
    val = np.sum(u[:, :, None] * pw, axis=0)
    der = np.sum((m[1:] * u[1:, :, None]) * r[None, None, :] ** (m[1:] - 1), axis=0)
    last = np.abs(u[-1][:, None] * r[None, :] ** order)
    first = np.abs(u[-3][:, None] * r[None, :] ** (order - 2)) if order >= 2 else last
    if np.any(last > 1e-6 * np.maximum(np.abs(val), 1e-300)) and np.any(last > first):
        raise SeriesDivergence("series start radius too large for the series order")
    return val, der


# ----------------------------------------------------------------------
# integrators


def _run(rhs, span, y0, t_eval, rtol, atol):
    sol = solve_ivp(rhs, span, y0, method="DOP853", rtol=rtol, atol=atol,
                    t_eval=t_eval if len(t_eval) else None)
    if sol.status != 0:
        raise StiffnessFailure(f"integrator failed: {sol.message}")
    return sol


def _y_rhs(model, lams):
    rho = model.rho
    k2 = lams**2
    N = len(lams)

    def rhs(r, Y):
        L, _ = model.scalar_LG(r)
        y = Y[:N]
        yp = Y[N:]
        return np.concatenate([yp, (2.0 * rho - L) * yp + (rho * L - 2.0 * rho * rho - k2) * y])

    return rhs


G_FLOOR = 1e-14


def _ab_rhs(model, lams):
    N = len(lams)
    inv = 1.0 / (2j * lams)
    # G below this floor is rounding noise (e.g. G == 0 on H^3). For Im lambda < 0
    # b' carries a factor e^{2 |Im lambda| r}, so noise there would force tiny steps.
    floor = G_FLOOR * max(1.0, model.rho**2)

    def rhs(r, Y):
        _, G = model.scalar_LG(r)
        if abs(G) < floor:
            G = 0.0
        a = Y[:N]
        b = Y[N:]
        e = np.exp(1j * lams * r)
        v = a * e + b / e
        k = G * inv * v
        return np.concatenate([k / e, -k * e])

    return rhs


class _Conv:
    """Conversions between (u, u'), scaled (y, y') and (a, b) at a radius r."""

    def __init__(self, model, lams, r):
        self.lams = lams
        self.r = r
        self.rho = model.rho
        L, _ = model.scalar_LG(r)
        self.L = L
        # At = A e^{-2 rho r}; sqrt(At) = A^{1/2} e^{-rho r}
        self.sAt = math.sqrt(float(model.A(r)) * math.exp(-2.0 * model.rho * r)) \
            if r < 300 else math.sqrt(float(model._direct(np.array([r]))[0][0]))
        self.e = np.exp(1j * lams * r)

    def y_to_ab(self, y, yp):
        # v = sAt * y ; v' = sAt * (y' - rho y + (L/2) y)
        v = self.sAt * y
        vp = self.sAt * (yp + (0.5 * self.L - self.rho) * y)
        w = vp / (1j * self.lams)
        return 0.5 * (v + w) / self.e, 0.5 * (v - w) * self.e

    def ab_to_y(self, a, b):
        v = a * self.e + b / self.e
        vp = 1j * self.lams * (a * self.e - b / self.e)
        y = v / self.sAt
        yp = vp / self.sAt - (0.5 * self.L - self.rho) * y
        return y, yp


def _ab_to_y_grid(model, lams, r, a, b):
    """Vectorised (a, b) -> (y, y') on a grid of radii; a, b have shape (N, len(r))."""
    sAt = np.sqrt(model.A(r) * np.exp(-2.0 * model.rho * r))
    half_L = 0.5 * model.log_derivative(r) - model.rho
    e = np.exp(1j * lams[:, None] * r[None, :])
    v = a * e + b / e
    vp = 1j * lams[:, None] * (a * e - b / e)
    y = v / sAt
    return y, vp / sAt - half_L * y


def _switch_radius(lams, cfg):
    """Handoff radius to the (a, b) form: about switch_scale / |lambda| periods in."""
    lmin = float(np.min(np.abs(lams)))
    return min(cfg.switch, max(cfg.switch_min, cfg.switch_scale / lmin))


def _points_in(r_eval, lo, hi):
    return r_eval[(r_eval > lo) & (r_eval <= hi)]


def _outward(model, lams, r_eval, r_stop, cfg):
    """Scaled (y, y') of phi_lambda at r_eval and at r_stop (>= max r_eval).

    Returns arrays Y, YP of shape (len(lams), len(r_eval)) and the pair at r_stop.
    """
    lams = np.asarray(lams, dtype=complex)
    N = len(lams)
    r_eval = np.asarray(r_eval, dtype=float)
    Y = np.empty((N, len(r_eval)), dtype=complex)
    YP = np.empty_like(Y)
    rho = model.rho
    r0 = cfg.r0
    order = cfg.series_order
    rtol = cfg.rtol * (cfg.batch_rtol_scale if N > 1 else 1.0)

    small = r_eval <= r0
    if np.any(small):
        rs = r_eval[small]
        u, du = _series_values(model, lams, rs, order)
        ex = np.exp(rho * rs)[None, :]
        Y[:, small] = u * ex
        YP[:, small] = (du + rho * u) * ex
    u0, du0 = _series_values(model, lams, np.array([r0]), order)
    y0 = u0[:, 0] * math.exp(rho * r0)
    yp0 = (du0[:, 0] + rho * u0[:, 0]) * math.exp(rho * r0)

    r_sw = _switch_radius(lams, cfg)
    use_ab = bool(np.min(np.abs(lams)) >= cfg.ab_min) and r_stop > r_sw
    r_mid = r_sw if use_ab else r_stop
    order_idx = np.arange(len(r_eval))

    stage1 = _points_in(r_eval, r0, r_mid)
    if r_mid > r0:
        sol = _run(_y_rhs(model, lams), (r0, r_mid), np.concatenate([y0, yp0]),
                   np.unique(np.append(stage1, r_mid)), rtol, cfg.atol)
        idx = order_idx[(r_eval > r0) & (r_eval <= r_mid)]
        pos = np.searchsorted(sol.t, r_eval[idx])
        Y[:, idx] = sol.y[:N, pos]
        YP[:, idx] = sol.y[N:, pos]
        y_end, yp_end = sol.y[:N, -1], sol.y[N:, -1]
    else:
        y_end, yp_end = y0, yp0

    if use_ab:
        conv = _Conv(model, lams, r_mid)
        a0, b0 = conv.y_to_ab(y_end, yp_end)
        scale = np.maximum(np.abs(a0), np.abs(b0))
        stage2 = _points_in(r_eval, r_mid, r_stop)
        sol = _run(_ab_rhs(model, lams), (r_mid, r_stop), np.concatenate([a0, b0]),
                   np.unique(np.append(stage2, r_stop)), rtol,
                   np.concatenate([scale, scale]) * cfg.atol)
        idx = order_idx[(r_eval > r_mid) & (r_eval <= r_stop)]
        pos = np.searchsorted(sol.t, r_eval[idx])
        if len(idx):
            Y[:, idx], YP[:, idx] = _ab_to_y_grid(model, lams, sol.t[pos],
                                                  sol.y[:N, pos], sol.y[N:, pos])
        y_end, yp_end = _Conv(model, lams, r_stop).ab_to_y(sol.y[:N, -1], sol.y[N:, -1])
    return Y, YP, (y_end, yp_end)


def _inward(model, lams, R, r_eval, cfg):
    """Scaled (y, y') of the Jost solution Phi_lambda on r_eval (all < R)."""
    lams = np.asarray(lams, dtype=complex)
    N = len(lams)
    r_eval = np.asarray(r_eval, dtype=float)
    Y = np.empty((N, len(r_eval)), dtype=complex)
    YP = np.empty_like(Y)
    rtol = cfg.rtol * (cfg.batch_rtol_scale if N > 1 else 1.0)
    eR = np.exp(1j * lams * R)
    y, yp = eR, 1j * lams * eR
    r_low = float(np.min(r_eval))
    order_idx = np.arange(len(r_eval))
    at_R = r_eval == R
    Y[:, at_R] = y[:, None]
    YP[:, at_R] = yp[:, None]
    r_sw = _switch_radius(lams, cfg)
    use_ab = bool(np.min(np.abs(lams)) >= cfg.ab_min) and R > r_sw
    r_cur = R
    if use_ab and r_low < R:
        r_mid = max(r_sw, r_low)
        a0, b0 = _Conv(model, lams, R).y_to_ab(y, yp)
        scale = np.maximum(np.abs(a0), np.abs(b0))
        pts = r_eval[(r_eval >= r_mid) & (r_eval < R)]
        sol = _run(_ab_rhs(model, lams), (R, r_mid), np.concatenate([a0, b0]),
                   np.unique(np.append(pts, r_mid))[::-1], rtol,
                   np.concatenate([scale, scale]) * cfg.atol)
        idx = order_idx[(r_eval >= r_mid) & (r_eval < R)]
        for j in idx:
            p = int(np.argmin(np.abs(sol.t - r_eval[j])))
            Y[:, j], YP[:, j] = _Conv(model, lams, float(sol.t[p])).ab_to_y(sol.y[:N, p], sol.y[N:, p])
        y, yp = _Conv(model, lams, r_mid).ab_to_y(sol.y[:N, -1], sol.y[N:, -1])
        r_cur = r_mid
    if r_low < r_cur:
        pts = r_eval[r_eval < r_cur]
        scale = np.maximum(np.abs(y), 1.0)
        sol = _run(_y_rhs(model, lams), (r_cur, r_low), np.concatenate([y, yp]),
                   np.unique(np.append(pts, r_low))[::-1], rtol,
                   cfg.atol)
        idx = order_idx[r_eval < r_cur]
        for j in idx:
            p = int(np.argmin(np.abs(sol.t - r_eval[j])))
            Y[:, j], YP[:, j] = sol.y[:N, p], sol.y[N:, p]
    return Y, YP


def _batches(lams, cfg, max_size=2048):
    """Index groups of similar |lambda| (factor-2 bands) for vectorised solves."""
    mags = np.abs(lams)
    order = np.argsort(mags)
    groups = []
    cur = []
    band_lo = None
    for i in order:
        m = mags[i]
        key_small = m < cfg.ab_min
        if cur and (len(cur) >= max_size
                    or (band_lo is not None and (key_small != (band_lo < cfg.ab_min)
                                                 or (not key_small and m > 2.0 * band_lo)))):
            groups.append(np.array(cur))
            cur = []
            band_lo = None
        if band_lo is None:
            band_lo = m
        cur.append(i)
    if cur:
        groups.append(np.array(cur))
    return groups


# ----------------------------------------------------------------------
# public operations


def phi(model: DensityModel, lam, r_grid, cfg: SolverConfig | None = None,
        canonicalize: bool = True) -> np.ndarray:
    """Spherical function phi_lambda on r_grid (r >= 0).

    ``lam`` may be a scalar (result shape ``(len(r_grid),)``) or an array
    (result shape ``(len(lam), len(r_grid))``). Since phi_lambda = phi_{-lambda},
    lambda is mapped to the lower half plane first unless ``canonicalize`` is off.
    """
    cfg = _cfg(cfg)
    scalar = np.ndim(lam) == 0
    lams = np.atleast_1d(np.asarray(lam, dtype=complex))
    if canonicalize:
        lams = canonical_lambda(lams)
    r = np.asarray(r_grid, dtype=float)
    flat = np.atleast_1d(r)
    if np.any(flat < 0):
        raise DomainError("r_grid must be nonnegative")
    if model.alpha <= -0.5:
        raise DomainError("alpha must exceed -1/2 for a regular spherical function")
    uniq, inv = np.unique(flat, return_inverse=True)
    pos = uniq[uniq > 0]
    out = np.empty((len(lams), len(uniq)), dtype=complex)
    out[:, uniq == 0] = 1.0
    if len(pos):
        vals = np.empty((len(lams), len(pos)), dtype=complex)
        r_top = float(pos[-1])
        for g in _batches(lams, cfg):
            Y, _, _ = _outward(model, lams[g], pos, r_top, cfg)
            vals[g] = Y
        out[:, uniq > 0] = vals * np.exp(-model.rho * pos)[None, :]
    out = out[:, inv].reshape((len(lams),) + np.shape(r))
    return out[0] if scalar else out


def phi_with_derivative(model, lam, r_grid, cfg=None):
    """phi_lambda and its r-derivative on a grid of positive radii (scalar lambda)."""
    cfg = _cfg(cfg)
    lams = canonical_lambda(np.atleast_1d(lam))
    r = np.asarray(r_grid, dtype=float)
    uniq, inv = np.unique(r, return_inverse=True)
    if uniq[0] <= 0:
        raise DomainError("radii must be positive")
    Y, YP, _ = _outward(model, lams, uniq, float(uniq[-1]), cfg)
    ex = np.exp(-model.rho * uniq)
    u = Y[0] * ex
    du = (YP[0] - model.rho * Y[0]) * ex
    return u[inv], du[inv]


def modified_wronskian(model: DensityModel, u1, du1, u2, du2, r):
    """A(r) (u1 u2' - u2 u1'), constant in r for two solutions of L u = -(lambda^2+rho^2) u."""
    return model.A(r) * (np.asarray(u1) * du2 - np.asarray(u2) * du1)


def _check_R(model, R, cfg):
    if R is None:
        return match_radius(model, cfg)
    if model.g_tail_integral(R) >= cfg.tail_tol and R < cfg.match_max:
        raise MatchRadiusTooSmall(
            f"tail integral {model.g_tail_integral(R):.3g} at R={R} exceeds {cfg.tail_tol}")
    return float(R)


def jost(model: DensityModel, lam, r_grid, R: float | None = None,
         cfg: SolverConfig | None = None):
    """Jost solutions (Phi_lambda, Phi_{-lambda}) on r_grid, started at R."""
    cfg = _cfg(cfg)
    lam = complex(lam)
    if lam == 0:
        raise ZeroLambda("lambda must be nonzero")
    R = _check_R(model, R, cfg)
    r = np.asarray(r_grid, dtype=float)
    if np.any(r <= 0) or np.any(r > R):
        raise DomainError("r_grid must lie in (0, R]")
    uniq, inv = np.unique(r, return_inverse=True)
    Y, _ = _inward(model, np.array([lam, -lam]), R, uniq, cfg)
    ex = np.exp(-model.rho * uniq)
    plus = (Y[0] * ex)[inv]
    minus = (Y[1] * ex)[inv]
    return plus, minus


def jost_with_derivative(model, lam, r_grid, R=None, cfg=None):
    """Like :func:`jost` but also returns r-derivatives: (P, dP, M, dM)."""
    cfg = _cfg(cfg)
    lam = complex(lam)
    if lam == 0:
        raise ZeroLambda("lambda must be nonzero")
    R = _check_R(model, R, cfg)
    r = np.asarray(r_grid, dtype=float)
    uniq, inv = np.unique(r, return_inverse=True)
    Y, YP = _inward(model, np.array([lam, -lam]), R, uniq, cfg)
    ex = np.exp(-model.rho * uniq)
    u = Y * ex
    du = (YP - model.rho * Y) * ex
    return u[0][inv], du[0][inv], u[1][inv], du[1][inv]


def _c_from_y(lams, R, y, yp):
    """c = W_A[phi, Phi_-] / W_A[Phi_+, Phi_-] at R, from scaled phi data."""
    return np.exp(-1j * lams * R) * (1j * lams * y + yp) / (2j * lams)


def c_values(model: DensityModel, lams, cfg: SolverConfig | None = None, R: float | None = None):
    """c(lambda) for an array of nonzero lambda with two-radius error estimates.

    Returns ``(c, err)``; ``err`` is |c(R) - c(R + offset)|.
    """
    cfg = _cfg(cfg)
    lams = np.atleast_1d(np.asarray(lams, dtype=complex))
    if np.any(lams == 0):
        raise ZeroLambda("lambda must be nonzero")
    if np.any(np.abs(lams) < 1e-12):
        raise WronskianDegenerate("|lambda| too small for Wronskian matching")
    R = _check_R(model, R, cfg)
    R2 = R + cfg.match_offset
    c = np.empty(len(lams), dtype=complex)
    err = np.empty(len(lams))
    for g in _batches(lams, cfg):
        L = lams[g]
        Y, YP, (y2, yp2) = _outward(model, L, np.array([R]), R2, cfg)
        c1 = _c_from_y(L, R, Y[:, 0], YP[:, 0])
        c2 = _c_from_y(L, R2, y2, yp2)
        c[g] = c1
        err[g] = np.abs(c1 - c2)
    return c, err


def c_function_with_error(model: DensityModel, lam, cfg: SolverConfig | None = None,
                          R: float | None = None):
    lam = complex(lam)
    if lam == 0:
        raise ZeroLambda("lambda must be nonzero")
    c, err = c_values(model, np.array([lam]), cfg, R)
    return complex(c[0]), float(err[0])


def c_function(model: DensityModel, lam, cfg: SolverConfig | None = None,
               R: float | None = None) -> complex:
    """c(lambda) by Wronskian matching against the Jost solutions at the match radius."""
    return c_function_with_error(model, lam, cfg, R)[0]


@dataclass
class SphericalEval:
    lam: complex
    r_grid: np.ndarray
    phi: np.ndarray
    jost_plus: np.ndarray
    jost_minus: np.ndarray
    c_value: complex
    c_error: float
    residual: float
    match_radius: float


def ode_residual(model, lam, r_grid, cfg=None) -> float:
    """Relative defect |u'' + (A'/A) u' + mu u| / (|mu| max|u|) with u'' by differences of u'."""
    cfg = _cfg(cfg)
    lam = complex(canonical_lambda(lam))
    r = np.asarray(r_grid, dtype=float)
    r = r[r > 10 * cfg.r0]
    if not len(r):
        return 0.0
    h = 1e-3 / max(1.0, abs(lam))
    stencil = np.concatenate([r - 2 * h, r - h, r, r + h, r + 2 * h])
    u, du = phi_with_derivative(model, lam, stencil, cfg)
    n = len(r)
    d = du.reshape(5, n)
    ddu = (d[0] - 8 * d[1] + 8 * d[3] - d[4]) / (12 * h)
    mu = lam**2 + model.rho**2
    res = ddu + model.log_derivative(r) * d[2] + mu * u.reshape(5, n)[2]
    scale = max(abs(mu), 1.0) * max(np.max(np.abs(u)), 1e-300)
    return float(np.max(np.abs(res)) / scale)


def spherical_eval(model: DensityModel, lam, r_grid, cfg: SolverConfig | None = None) -> SphericalEval:
    """phi, Jost solutions, c and diagnostics for one lambda."""
    cfg = _cfg(cfg)
    lam = complex(lam)
    if lam == 0:
        raise ZeroLambda("lambda must be nonzero")
    r = np.asarray(r_grid, dtype=float)
    R = match_radius(model, cfg)
    ph = phi(model, lam, r, cfg)
    jp, jm = jost(model, lam, r[r > 0], R, cfg)
    c, err = c_function_with_error(model, lam, cfg, R)
    return SphericalEval(lam=lam, r_grid=r, phi=ph, jost_plus=jp, jost_minus=jm,
                         c_value=c, c_error=err, residual=ode_residual(model, lam, r, cfg),
                         match_radius=R)


@dataclass
class GrowthFit:
    small_slope: float
    large_slope: float
    small_residual: float
    large_residual: float
    expected_large: float
    alpha_covered: bool = field(default=True)

    def to_dict(self):
        return dict(self.__dict__)


def c_growth_check(model: DensityModel, small_range=(1e-3, 1e-1), large_range=(50.0, 500.0),
                   npts: int = 12, cfg: SolverConfig | None = None) -> GrowthFit:
    """Log-log slopes of |c(lambda)|^{-1} on a small-lambda and a large-lambda window."""
    ls = np.geomspace(*small_range, npts)
    ll = np.geomspace(*large_range, npts)
    c, _ = c_values(model, np.concatenate([ls, ll]), cfg)
    y = -np.log(np.abs(c))
    fits = []
    for x, yy in ((ls, y[:npts]), (ll, y[npts:])):
        A = np.vstack([np.log(x), np.ones_like(x)]).T
        coef, res, *_ = np.linalg.lstsq(A, yy, rcond=None)
        resid = float(np.sqrt(res[0] / len(x))) if len(res) else 0.0
        fits.append((float(coef[0]), resid))
    return GrowthFit(small_slope=fits[0][0], large_slope=fits[1][0],
                     small_residual=fits[0][1], large_residual=fits[1][1],
                     expected_large=model.alpha + 0.5,
                     alpha_covered=abs(abs(model.alpha) - 0.5) > 1e-12)


REDUCED_RMIN = 0.5


def reduced_residual(model: DensityModel, lam, r_grid, cfg: SolverConfig | None = None) -> float:
    """Relative defect of v'' = (G - lambda^2) v for v = A^{1/2} phi_lambda.

    v' comes from the solver; v'' from fourth-order differences of v'. This
    checks the solution against the reduced equation, which the solver never
    integrates directly on the y-form stretch. Radii below ``REDUCED_RMIN``
    are skipped: there v ~ r^{alpha + 1/2} and differencing v' loses accuracy.
    """
    cfg = _cfg(cfg)
    lam = complex(canonical_lambda(lam))
    r = np.asarray(r_grid, dtype=float)
    r = r[r >= REDUCED_RMIN]
    if not len(r):
        return 0.0
    h = 1e-3 / max(1.0, abs(lam))
    st = np.concatenate([r - 2 * h, r - h, r, r + h, r + 2 * h])
    u, du = phi_with_derivative(model, lam, st, cfg)
    sA = np.sqrt(model.A(st))
    v = sA * u
    vp = sA * (du + 0.5 * model.log_derivative(st) * u)
    n = len(r)
    d = vp.reshape(5, n)
    vpp = (d[0] - 8 * d[1] + 8 * d[3] - d[4]) / (12 * h)
    res = vpp - (model.G(r) - lam**2) * v.reshape(5, n)[2]
    scale = max(abs(lam) ** 2, 1.0) * max(np.max(np.abs(v)), 1e-300)
    return float(np.max(np.abs(res)) / scale)
