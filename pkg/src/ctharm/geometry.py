"""Hyperboloid-model geometry of real hyperbolic space H^n.

Points are (n+1)-vectors x with <x, x> = -1 and x0 > 0 for the Minkowski form
diag(-1, 1, ..., 1). A boundary point is represented by a null vector l
(defined up to positive scale); a unit vector xi in R^n stands for the
boundary point in direction xi as seen from a basepoint o.

Busemann functions, visual metrics and Gromov products all reduce to ratios
of Minkowski products with null vectors:

    B_{xi,o}(x)     = log(<x, l> / <o, l>)
    rho_o(xi, eta)^2 = -<l_xi, l_eta> / (2 <o, l_xi> <o, l_eta>)
"""

from __future__ import annotations

import warnings
from functools import lru_cache

import numpy as np
from scipy import integrate, special

from .errors import CoincidentDirections, DomainError, InvalidPoint, NotInLowerHalfPlane, QuadratureFailure

POINT_TOL = 1e-12
SEED = 0x5EED


def mink(x, y):
    """Minkowski product, broadcasting over leading axes."""
    x = np.asarray(x)
    y = np.asarray(y)
    return -x[..., 0] * y[..., 0] + np.sum(x[..., 1:] * y[..., 1:], axis=-1)


def origin(n: int) -> np.ndarray:
    o = np.zeros(n + 1)
    o[0] = 1.0
    return o


def check_point(x, tol: float = POINT_TOL) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or len(x) < 3:
        raise InvalidPoint("a point needs n+1 >= 3 coordinates")
    q = mink(x, x)
    if not np.isfinite(q) or abs(q + 1.0) > tol * max(1.0, x[0] ** 2) or x[0] < 1.0 - tol:
        raise InvalidPoint(f"not on the upper hyperboloid: <x,x> = {q!r}, x0 = {x[0]!r}")
    return x


def lift(v) -> np.ndarray:
    """The point exp_o(v) for a tangent vector v in R^n at the origin."""
    v = np.asarray(v, dtype=float)
    t = np.linalg.norm(v)
    if t == 0:
        return origin(len(v))
    return np.concatenate([[np.cosh(t)], np.sinh(t) * v / t])


def polar_point(r: float, direction) -> np.ndarray:
    d = np.asarray(direction, dtype=float)
    return np.concatenate([[np.cosh(r)], np.sinh(r) * d / np.linalg.norm(d)])


def distance(x, y) -> float:
    """Hyperbolic distance: arccosh(-<x, y>), or 2 asinh(|x - y|_M / 2) when d is small."""
    x = check_point(x)
    y = check_point(y)
    c = -mink(x, y)
    if c > 2.0:
        return float(np.arccosh(c))
    dx = x - y
    q = max(mink(dx, dx), 0.0)
    return float(2.0 * np.arcsinh(0.5 * np.sqrt(q)))


def boost(x) -> np.ndarray:
    """Lorentz transformation (pure boost) sending the origin to x."""
    x = np.asarray(x, dtype=float)
    n = len(x) - 1
    M = np.empty((n + 1, n + 1))
    xv = x[1:]
    M[0, 0] = x[0]
    M[0, 1:] = xv
    M[1:, 0] = xv
    M[1:, 1:] = np.eye(n) + np.outer(xv, xv) / (1.0 + x[0])
    return M


def boundary(o, xi) -> np.ndarray:
    """Null vector (scaled to l0 = 1) for a boundary point given relative to o.

    ``xi`` of length n is a unit direction in the tangent sphere at o (in the
    frame obtained by boosting the origin frame to o); a vector of length
    n + 1 is taken as a null vector already.
    """
    o = np.asarray(o, dtype=float)
    xi = np.asarray(xi, dtype=float)
    n = len(o) - 1
    if xi.shape[-1] == n + 1:
        return xi / xi[..., :1]
    if xi.shape[-1] != n:
        raise DomainError(f"boundary direction must have {n} (or {n + 1}) components")
    nrm = np.linalg.norm(xi, axis=-1, keepdims=True)
    if np.any(np.abs(nrm - 1.0) > 1e-10):
        raise DomainError("boundary direction must be a unit vector")
    tangent = np.concatenate([np.zeros(xi.shape[:-1] + (1,)), xi], axis=-1)
    l = (tangent + origin(n)) @ boost(o).T
    return l / l[..., :1]


def boundary_from_tangent(o, v) -> np.ndarray:
    """Null vector o + v for a unit tangent v at o (<v, v> = 1, <o, v> = 0)."""
    l = np.asarray(o, dtype=float) + np.asarray(v, dtype=float)
    return l / l[0]


def unit_tangent(o, l) -> np.ndarray:
    """Unit tangent vector at o pointing to the boundary point l (null vector or direction at o)."""
    o = np.asarray(o, dtype=float)
    l = boundary(o, l)
    return l / (-mink(o, l)) - o


def tangent_to(o, x) -> np.ndarray:
    """Unit tangent vector at o pointing to the point x != o."""
    o = np.asarray(o, dtype=float)
    x = np.asarray(x, dtype=float)
    w = x + mink(o, x) * o
    return w / np.sqrt(mink(w, w))


def geodesic(o, v, t):
    """gamma(t) = cosh t o + sinh t v for a unit tangent v at o."""
    return np.cosh(t) * np.asarray(o) + np.sinh(t) * np.asarray(v)


def angle_at(o, a, b) -> float:
    """Riemannian angle at o between unit tangents a and b."""
    c = float(np.clip(mink(a, b), -1.0, 1.0))
    # atan2 form is accurate for nearly parallel and nearly antipodal vectors
    diff = np.asarray(a) - np.asarray(b)
    s = np.sqrt(max(mink(diff, diff), 0.0))
    return float(2.0 * np.arctan2(0.5 * s, np.sqrt(max((1 + c) / 2.0, 0.0))))


def busemann(o, xi, x) -> float:
    """B_{xi,o}(x) = log(<x, l> / <o, l>): normalised to vanish at o."""
    l = boundary(o, xi)
    return float(np.log(mink(np.asarray(x, dtype=float), l) / mink(np.asarray(o, dtype=float), l)))


def busemann_polar(r, theta):
    """B_{xi,o}(x) from d(o, x) = r and the angle theta at o between x and xi."""
    return np.log(np.cosh(r) - np.sinh(r) * np.cos(theta))


def busemann_cocycle(x, y, xi, o_chart=None) -> float:
    """B(x, y, xi) = B_{xi,o}(x) - B_{xi,o}(y); xi is a direction at o_chart (default origin)."""
    x = np.asarray(x, dtype=float)
    o = origin(len(x) - 1) if o_chart is None else o_chart
    l = boundary(o, xi)
    return float(np.log(mink(np.asarray(x, dtype=float), l) / mink(np.asarray(y, dtype=float), l)))


def busemann_limit(o, xi, x, t: float = 35.0) -> float:
    """d(x, gamma(t)) - t along the ray from o to xi (the defining limit)."""
    gam = geodesic(o, unit_tangent(o, xi), t)
    return distance(x, gam) - t


def visual_metric(o, xi, eta) -> float:
    """rho_o(xi, eta) from the Minkowski formula (equals sin of half the angle at o)."""
    o = np.asarray(o, dtype=float)
    lx, le = boundary(o, xi), boundary(o, eta)
    val = -mink(lx, le) / (2.0 * mink(o, lx) * mink(o, le))
    return float(np.sqrt(max(val, 0.0)))


def visual_metric_angle(o, xi, eta) -> float:
    """sin(theta/2) with theta the angle at o between the rays to xi and eta."""
    return float(np.sin(0.5 * angle_at(o, unit_tangent(o, xi), unit_tangent(o, eta))))


def gromov_product(o, xi, eta) -> float:
    """(xi | eta)_o = -log rho_o(xi, eta)."""
    rho = visual_metric(o, xi, eta)
    if rho <= 1e-300:
        raise CoincidentDirections("xi and eta coincide: Gromov product is infinite")
    return float(-np.log(rho))


def visibility_density(o, x, xi, rho: float | None = None) -> float:
    """d lambda_x / d lambda_o at xi, i.e. exp(-2 rho B_{xi,o}(x)), rho = (n-1)/2 by default."""
    n = len(np.asarray(o)) - 1
    rho = (n - 1) / 2.0 if rho is None else rho
    return float(np.exp(-2.0 * rho * busemann(o, xi, x)))


# ----------------------------------------------------------------------
# sphere quadrature


def _norm_const(n: int) -> float:
    """Z_n = int_0^pi sin^{n-2} theta d theta."""
    return float(np.sqrt(np.pi) * special.gamma((n - 1) / 2.0) / special.gamma(n / 2.0))


@lru_cache(maxsize=16)
def sphere_rule(n: int = 3, m: int = 256, k: int = 128):
    """Nodes (unit vectors in R^n) and weights (sum 1) on S^{n-1}, for n = 2 or 3."""
    if n == 2:
        t = 2 * np.pi * np.arange(m) / m
        return np.column_stack([np.cos(t), np.sin(t)]), np.full(m, 1.0 / m)
    if n == 3:
        x, w = np.polynomial.legendre.leggauss(m)
        ph = 2 * np.pi * np.arange(k) / k
        st = np.sqrt(1 - x**2)
        nodes = np.stack([np.outer(x, np.ones(k)), np.outer(st, np.cos(ph)),
                          np.outer(st, np.sin(ph))], axis=-1).reshape(-1, 3)
        weights = (np.outer(w, np.ones(k)) / (2.0 * k)).ravel()
        return nodes, weights
    raise DomainError("full sphere quadrature is implemented for n = 2, 3 only")


def sphere_average(f, center, r: float, n: int, m: int = 256, k: int = 128):
    """Average of f over the geodesic sphere S(center, r); f takes an (N, n+1) point array."""
    dirs, w = sphere_rule(n, m, k)
    pts = np.column_stack([np.full(len(dirs), np.cosh(r)), np.sinh(r) * dirs])
    pts = pts @ boost(center).T
    return np.sum(w * f(pts))


def radialize(o, f, x, n: int | None = None, rtol: float = 1e-8):
    """(M_o f)(x): mean of f over the sphere around o through x.

    Two rules (256x128 and 128x64 for n = 3) are compared; disagreement beyond
    rtol * max|f| raises QuadratureFailure.
    """
    o = check_point(o)
    x = check_point(x)
    n = len(o) - 1 if n is None else n
    r = distance(o, x)
    fine = sphere_average(f, o, r, n, 256, 128)
    coarse = sphere_average(f, o, r, n, 128, 64)
    scale = max(abs(fine), 1e-300)
    if abs(fine - coarse) > rtol * max(scale, 1.0):
        raise QuadratureFailure(f"sphere quadrature did not converge ({abs(fine - coarse):.3g})")
    return fine


def visibility_total_mass(o, x, m: int = 256, k: int = 128) -> float:
    """int over the boundary of exp(-2 rho B_{xi,o}(x)) d lambda_o(xi) (should be 1)."""
    o = np.asarray(o, dtype=float)
    n = len(o) - 1
    dirs, w = sphere_rule(n, m, k)
    ls = np.column_stack([np.ones(len(dirs)), dirs]) @ boost(o).T
    ls = ls / ls[:, :1]
    B = np.log(mink(np.asarray(x)[None, :], ls) / mink(o[None, :], ls))
    return float(np.sum(w * np.exp(-(n - 1) * B)))


# ----------------------------------------------------------------------
# boundary-integral representations


def _theta_panels(r: float, lam: complex, n_gauss: int):
    """Gauss nodes on [0, pi], graded towards theta = 0 where the kernel varies on scale e^{-r}."""
    edges = [np.pi]
    floor = 1e-3 * np.exp(-r)
    while edges[-1] > floor:
        edges.append(edges[-1] / 2.0)
    edges.append(0.0)
    edges = np.array(edges[::-1])
    # extra subdivision for oscillation: the phase lambda log(base) changes by <= 2 r |lambda|
    x, w = np.polynomial.legendre.leggauss(n_gauss)
    nodes, weights = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        m = 1 + int(abs(lam) * min(b - a, 1.0) * max(r, 1.0) / 8.0)
        sub = np.linspace(a, b, m + 1)
        for c, d in zip(sub[:-1], sub[1:]):
            nodes.append(0.5 * (d - c) * x + 0.5 * (c + d))
            weights.append(0.5 * (d - c) * w)
    return np.concatenate(nodes), np.concatenate(weights)


def phi_poisson(n: int, lam, r, rtol: float = 1e-12, max_nodes: int = 256):
    """phi_lambda(r) on H^n as the boundary integral of exp((i lam - rho) B_{xi,o}(y)).

    Reduced to int_0^pi (cosh r - sinh r cos theta)^{i lam - rho} sin^{n-2} theta d theta / Z_n
    and evaluated with graded Gauss panels; the panel order is doubled until
    two successive values agree to rtol.
    """
    lam = complex(lam)
    rho = (n - 1) / 2.0
    Z = _norm_const(n)
    scalar = np.ndim(r) == 0
    rs = np.atleast_1d(np.asarray(r, dtype=float))
    out = np.empty(len(rs), dtype=complex)
    for i, rr in enumerate(rs):
        if rr == 0:
            out[i] = 1.0
            continue
        prev = None
        q = 16
        while True:
            th, w = _theta_panels(rr, lam, q)
            # log(cosh r - sinh r cos theta) computed stably as r + log(sin^2(th/2) + e^{-2r} cos^2(th/2))
            logb = rr + np.log(np.sin(th / 2) ** 2 + np.exp(-2 * rr) * np.cos(th / 2) ** 2)
            val = np.sum(w * np.exp((1j * lam - rho) * logb) * np.sin(th) ** (n - 2)) / Z
            if prev is not None and abs(val - prev) <= rtol * max(abs(val), 1e-300 + abs(prev)):
                break
            if q >= max_nodes:
                raise QuadratureFailure(f"phi_poisson did not converge at r={rr}, lambda={lam}")
            prev = val
            q *= 2
        out[i] = val
    return complex(out[0]) if scalar else out


def c_boundary_integral(n: int, lam, epsabs: float = 1e-14, epsrel: float = 1e-12) -> complex:
    """c(lambda) = int rho_o(xi, eta)^{2(i lam - rho)} d lambda_o(eta) on H^n, Im lambda < 0.

    With u = sin(theta/2) = e^{-t} the integral becomes
    (2^{n-1}/Z_n) int_0^inf e^{-2 i lam t} (1 - e^{-2t})^{(n-3)/2} dt:
    the t^{(n-3)/2} endpoint behaviour goes to an algebraic QUADPACK weight on
    [0, 1] and the oscillatory tail to a Fourier-weight rule on [1, inf).
    """
    lam = complex(lam)
    if not lam.imag < 0:
        raise NotInLowerHalfPlane("boundary integral converges only for Im lambda < 0")
    a = (n - 3) / 2.0
    om = 2.0 * lam.real
    dec = 2.0 * lam.imag  # e^{-2 i lam t} = e^{dec t} e^{-i om t}, dec < 0

    def smooth(t):
        # (1 - e^{-2t})^a / t^a, continuous at 0 with limit 2^a
        if t == 0:
            return 2.0**a
        return (-np.expm1(-2 * t) / t) ** a

    def run(fn, lo, hi, **kw):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            val, err = integrate.quad(fn, lo, hi, epsabs=epsabs, **kw)[:2]
        if not np.isfinite(val) or err > 1e-9:
            raise QuadratureFailure(f"boundary integral error estimate {err:.3g}")
        return val

    alg = dict(weight="alg", wvar=(a, 0.0), epsrel=epsrel, limit=400)
    re0 = run(lambda t: smooth(t) * np.exp(dec * t) * np.cos(om * t), 0.0, 1.0, **alg)
    im0 = run(lambda t: -smooth(t) * np.exp(dec * t) * np.sin(om * t), 0.0, 1.0, **alg)

    def env(t):
        return np.exp(dec * t) * (-np.expm1(-2 * t)) ** a

    if om != 0.0:
        re1 = run(env, 1.0, np.inf, weight="cos", wvar=om, limlst=200)
        im1 = -run(env, 1.0, np.inf, weight="sin", wvar=om, limlst=200)
    else:
        re1 = run(env, 1.0, np.inf, epsrel=epsrel)
        im1 = 0.0
    return (2.0 ** (n - 1) / _norm_const(n)) * complex(re0 + re1, im0 + im1)


def c_closed_form(n: int, lam) -> complex:
    """2^{n-2} Gamma(n/2) Gamma(i lam) / (sqrt(pi) Gamma(i lam + (n-1)/2)) on H^n."""
    z = 1j * complex(lam)
    lg = special.loggamma(z) - special.loggamma(z + (n - 1) / 2.0)
    return complex(2.0 ** (n - 2) * special.gamma(n / 2.0) / np.sqrt(np.pi) * np.exp(lg))


def cap_mass(n: int, eps: float) -> float:
    """lambda_o of the visual ball of radius eps (cap theta < 2 arcsin eps), by quadrature.

    In x = sin^2(theta/2) the normalised cap measure is
    x^a (1 - x)^a dx / B(a+1, a+1), a = (n-3)/2, integrated with algebraic weights.
    """
    if not 0 < eps <= 1:
        raise DomainError("eps must lie in (0, 1]")
    a = (n - 3) / 2.0
    top = eps * eps
    if eps == 1.0:
        val = integrate.quad(lambda x: 1.0, 0.0, 1.0, weight="alg", wvar=(a, a))[0]
    else:
        val = integrate.quad(lambda x: (1.0 - x) ** a, 0.0, top, weight="alg", wvar=(a, 0.0),
                             epsabs=0.0, epsrel=1e-13)[0]
    return float(val / special.beta(a + 1.0, a + 1.0))


def shadow_ratio(n: int, eps_list) -> np.ndarray:
    """lambda_o(B(xi, eps)) / eps^{2 rho} for each eps, rho = (n-1)/2."""
    eps = np.atleast_1d(np.asarray(eps_list, dtype=float))
    return np.array([cap_mass(n, e) / e ** (n - 1) for e in eps])


# ----------------------------------------------------------------------
# random sampling for property tests


def random_direction(rng, n: int) -> np.ndarray:
    v = rng.standard_normal(n)
    return v / np.linalg.norm(v)


def random_point(rng, n: int, r_max: float = 3.0) -> np.ndarray:
    return polar_point(rng.uniform(0.0, r_max), random_direction(rng, n))
