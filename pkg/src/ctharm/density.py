"""Density functions A(r) of harmonic manifolds as exponential polynomials.

A model stores ``A(r) = scale * sum_k Re[P_k(r) exp(z_k r)]`` with complex
polynomials ``P_k`` and ``z_k = a_k + i beta_k``; a ``sin`` phase is folded
into ``P_k`` as a factor ``-i``.  Convention: ``A`` includes the area of the
unit sphere, so for a radial function ``f = u o d_x`` the volume integral is
``int_0^inf u(r) A(r) dr``.

Two evaluation paths are used:

* ``r < SERIES_RADIUS``: a Taylor expansion ``A = scale * r**k0 * S(r)`` with
  coefficients computed in extended precision, so that ``A'/A`` and ``G``
  keep full relative accuracy near the singular point.
* ``r >= SERIES_RADIUS``: the exponential form, rescaled by ``exp(-2 rho r)``
  and written through the shifted derivative ``S = d/dr - 2 rho`` which kills
  the leading term exactly.  ``A'/A - 2 rho`` and ``G`` are then free of
  cancellation for large ``r``.
"""

from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Mapping, Sequence

import mpmath
import numpy as np
from scipy.special import comb, gamma

from .errors import (
    DecreasingDensity,
    DomainError,
    NonMonotoneLogDerivative,
    NonPositiveDensity,
    NoPositiveRho,
)

SERIES_RADIUS = 1.0
SERIES_TERMS = 80
_VANISH_RTOL = 1e-12


def sphere_area(n: int) -> float:
    """Area of the unit sphere S^{n-1} in R^n."""
    return 2.0 * math.pi ** (n / 2.0) / gamma(n / 2.0)


@dataclass(frozen=True)
class Term:
    """One summand ``poly(r) * trig(beta r) * exp(exp r)``."""

    poly: tuple[float, ...]
    beta: float = 0.0
    phase: str = "cos"
    exp: float = 0.0

    def __post_init__(self):
        if self.phase not in ("cos", "sin"):
            raise ValueError(f"phase must be 'cos' or 'sin', got {self.phase!r}")
        poly = tuple(float(c) for c in self.poly)
        while len(poly) > 1 and poly[-1] == 0.0:
            poly = poly[:-1]
        object.__setattr__(self, "poly", poly or (0.0,))

    @property
    def is_zero(self) -> bool:
        if all(c == 0.0 for c in self.poly):
            return True
        return self.phase == "sin" and self.beta == 0.0

    def complex_form(self) -> tuple[np.ndarray, complex]:
        coeffs = np.asarray(self.poly, dtype=complex)
        if self.phase == "sin":
            coeffs = -1j * coeffs
        return coeffs, complex(self.exp, self.beta)

    def to_dict(self) -> dict:
        return {"poly": list(self.poly), "beta": self.beta, "phase": self.phase, "exp": self.exp}


def _merge_terms(terms: Sequence[Term]) -> tuple[Term, ...]:
    merged: dict[tuple[float, float, str], list[float]] = {}
    for t in terms:
        key = (t.exp, t.beta, t.phase)
        acc = merged.setdefault(key, [])
        for j, c in enumerate(t.poly):
            if j >= len(acc):
                acc.append(0.0)
            acc[j] += c
    out = [Term(tuple(p), beta=k[1], phase=k[2], exp=k[0]) for k, p in merged.items()]
    out = [t for t in out if not t.is_zero]
    return tuple(sorted(out, key=lambda t: (t.exp, t.beta, t.phase)))


def _shift_poly(coeffs: np.ndarray, z: complex) -> np.ndarray:
    """Coefficients of (d/dr + z) applied to the polynomial ``coeffs``."""
    out = z * coeffs
    if len(coeffs) > 1:
        out[:-1] += coeffs[1:] * np.arange(1, len(coeffs))
    return out


@dataclass(frozen=True)
class DensityModel:
    terms: tuple[Term, ...]
    scale: float = 1.0
    sphere_factor: float = 1.0
    name: str = "custom"
    params: tuple[tuple[str, Any], ...] = ()
    alpha: float = field(init=False)
    rho: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "terms", _merge_terms(self.terms))
        if not self.terms:
            raise NonPositiveDensity("density has no nonzero terms")
        object.__setattr__(self, "rho", 0.5 * max(t.exp for t in self.terms))
        k0 = self.vanishing_order
        object.__setattr__(self, "alpha", 0.5 * (k0 - 1))

    # ------------------------------------------------------------------
    # structure

    @property
    def label(self) -> str:
        if self.name == "hyperbolic":
            return f"hyperbolic({dict(self.params)['n']})"
        if self.name == "damek_ricci":
            p = dict(self.params)
            return f"damek_ricci({p['p']},{p['q']})"
        return self.name

    @property
    def dimension(self) -> int | None:
        p = dict(self.params)
        if self.name == "hyperbolic":
            return p["n"]
        if self.name == "damek_ricci":
            return p["p"] + p["q"] + 1
        return None

    @property
    def experimental(self) -> bool:
        """True when trigonometric terms are present (no shipped model uses them)."""
        return any(t.beta != 0.0 for t in self.terms)

    @cached_property
    def leading_terms(self) -> tuple[Term, ...]:
        top = max(t.exp for t in self.terms)
        return tuple(t for t in self.terms if t.exp == top)

    @cached_property
    def leading_coefficient(self) -> float | None:
        """C in A(r) = C e^{2 rho r} + P(r), or None if the top term is not a constant."""
        lead = self.leading_terms
        if len(lead) != 1:
            return None
        t = lead[0]
        if t.beta != 0.0 or t.phase != "cos" or len(t.poly) != 1:
            return None
        return self.scale * t.poly[0]

    @cached_property
    def lower_degree(self) -> float:
        """Exponential degree delta of the remainder P (-inf if P == 0)."""
        rest = [t.exp for t in self.terms if t.exp < 2 * self.rho]
        return max(rest) if rest else -math.inf

    @cached_property
    def _complex_terms(self):
        return [t.complex_form() for t in self.terms]

    @cached_property
    def taylor_coefficients(self) -> tuple[np.ndarray, int]:
        """Taylor coefficients of A/scale at 0 and the vanishing order k0."""
        with mpmath.workdps(60):
            coefs = [mpmath.mpf(0)] * SERIES_TERMS
            fact = [mpmath.factorial(m) for m in range(SERIES_TERMS)]
            for P, z in self._complex_terms:
                zm = mpmath.mpc(z.real, z.imag)
                zpow = [mpmath.mpc(1)]
                for _ in range(SERIES_TERMS):
                    zpow.append(zpow[-1] * zm)
                for j, pj in enumerate(P):
                    if pj == 0:
                        continue
                    pjm = mpmath.mpc(pj.real, pj.imag)
                    for k in range(j, SERIES_TERMS):
                        coefs[k] += mpmath.re(pjm * zpow[k - j] / fact[k - j])
            mag = max(sum(abs(c) for c in P) for P, _ in self._complex_terms)
            thresh = _VANISH_RTOL * mag
            k0 = next((k for k, c in enumerate(coefs) if abs(c) > thresh), None)
            if k0 is None:
                raise NonPositiveDensity("density vanishes to all computed orders at r = 0")
            return np.array([float(c) for c in coefs]), k0

    @property
    def vanishing_order(self) -> int:
        return self.taylor_coefficients[1]

    @cached_property
    def _series(self) -> np.ndarray:
        coefs, k0 = self.taylor_coefficients
        return coefs[k0:]

    @cached_property
    def _shifted(self):
        """Per-term polynomials for A, A', A'', S A, S^2 A (S = d/dr - 2 rho)."""
        out = []
        two_rho = 2.0 * self.rho
        for P, z in self._complex_terms:
            d1 = _shift_poly(P, z)
            d2 = _shift_poly(d1, z)
            s1 = _shift_poly(P, z - two_rho)
            s2 = _shift_poly(s1, z - two_rho)
            out.append((z, P, d1, d2, s1, s2))
        return out

    # ------------------------------------------------------------------
    # evaluation

    def _direct(self, r: np.ndarray) -> np.ndarray:
        """Rows: A, A', A'', SA, S^2A, all times scale * exp(-2 rho r)."""
        res = np.zeros((5,) + r.shape)
        two_rho = 2.0 * self.rho
        for z, *polys in self._shifted:
            e = np.exp((z - two_rho) * r)
            for i, P in enumerate(polys):
                res[i] += (np.polyval(P[::-1], r) * e).real
        return self.scale * res

    def _series_eval(self, r: np.ndarray):
        """S, S', S'' of the reduced series S = A / (scale r^k0)."""
        b = self._series
        m = np.arange(len(b))
        s0 = np.polyval(b[::-1], r)
        s1 = np.polyval((b[1:] * m[1:])[::-1], r)
        s2 = np.polyval((b[2:] * m[2:] * (m[2:] - 1))[::-1], r)
        return s0, s1, s2

    def _split(self, r):
        r = np.asarray(r, dtype=float)
        if np.any(~(r > 0)):
            raise DomainError("r must be positive")
        return r, r < SERIES_RADIUS

    def A(self, r):
        r, small = self._split(r)
        out = np.empty_like(r)
        if np.any(small):
            rs = r[small]
            out[small] = self.scale * rs ** self.vanishing_order * self._series_eval(rs)[0]
        if np.any(~small):
            rl = r[~small]
            out[~small] = self._direct(rl)[0] * np.exp(2.0 * self.rho * rl)
        return out if out.ndim else float(out)

    def dA(self, r):
        r, small = self._split(r)
        return self.A(r) * self.log_derivative(r)

    def _L_parts(self, r):
        """Return (L, L', G) with L = A'/A."""
        r, small = self._split(r)
        L = np.empty_like(r)
        dL = np.empty_like(r)
        G = np.empty_like(r)
        rho = self.rho
        k0 = self.vanishing_order
        if np.any(small):
            rs = r[small]
            s0, s1, s2 = self._series_eval(rs)
            sig = s1 / s0
            dsig = s2 / s0 - sig**2
            L[small] = k0 / rs + sig
            dL[small] = -k0 / rs**2 + dsig
            G[small] = ((k0 * k0 / 4.0 - k0 / 2.0) / rs**2 + 0.5 * k0 * sig / rs
                        + 0.25 * sig**2 + 0.5 * dsig - rho**2)
        if np.any(~small):
            a, _, _, sa, s2a = self._direct(r[~small])
            eps = sa / a
            q = s2a / a
            L[~small] = 2.0 * rho + eps
            dL[~small] = q - eps**2
            G[~small] = rho * eps - 0.25 * eps**2 + 0.5 * q
        return L, dL, G

    def log_derivative(self, r):
        L = self._L_parts(r)[0]
        return L if L.ndim else float(L)

    def log_derivative_prime(self, r):
        dL = self._L_parts(r)[1]
        return dL if dL.ndim else float(dL)

    def G(self, r):
        G = self._L_parts(r)[2]
        return G if G.ndim else float(G)

    # scalar fast paths for ODE right-hand sides ------------------------

    @cached_property
    def _scalar_data(self):
        two_rho = 2.0 * self.rho
        data = []
        for z, P, d1, d2, s1, s2 in self._shifted:
            data.append((z - two_rho, [complex(c) for c in P], [complex(c) for c in s1],
                         [complex(c) for c in s2]))
        b = [float(c) for c in self._series]
        b1 = [b[m] * m for m in range(1, len(b))]
        b2 = [b[m] * m * (m - 1) for m in range(2, len(b))]
        return data, b, b1, b2

    def scalar_LG(self, r: float) -> tuple[float, float]:
        """(A'/A, G) at a single float r > 0, without numpy overhead."""
        data, b, b1, b2 = self._scalar_data
        rho = self.rho
        if r < SERIES_RADIUS:
            k0 = self.vanishing_order
            s0 = s1 = s2 = 0.0
            for c in reversed(b):
                s0 = s0 * r + c
            for c in reversed(b1):
                s1 = s1 * r + c
            for c in reversed(b2):
                s2 = s2 * r + c
            sig = s1 / s0
            dsig = s2 / s0 - sig * sig
            L = k0 / r + sig
            G = ((k0 * k0 / 4.0 - k0 / 2.0) / (r * r) + 0.5 * k0 * sig / r
                 + 0.25 * sig * sig + 0.5 * dsig - rho * rho)
            return L, G
        a = sa = s2a = 0.0
        for zs, P, S1, S2 in data:
            e = cmath.exp(zs * r)
            p0 = p1 = p2 = 0j
            for c in reversed(P):
                p0 = p0 * r + c
            for c in reversed(S1):
                p1 = p1 * r + c
            for c in reversed(S2):
                p2 = p2 * r + c
            a += (p0 * e).real
            sa += (p1 * e).real
            s2a += (p2 * e).real
        eps = sa / a
        q = s2a / a
        return 2.0 * rho + eps, rho * eps - 0.25 * eps * eps + 0.5 * q

    # ------------------------------------------------------------------
    # tail of G

    @cached_property
    def g_tail_fit(self) -> tuple[float, float]:
        """Envelope |G(r)| <= K exp(-gamma r) fitted on [5, 50]."""
        r = np.linspace(5.0, 50.0, 400)
        g = np.abs(self.G(r))
        mask = g > 1e-300
        if mask.sum() < 10:
            return 0.0, math.inf
        slope, _ = np.polyfit(r[mask], np.log(g[mask]), 1)
        gam = -slope
        K = float(np.max(g * np.exp(gam * r)))
        return K, float(gam)

    def g_tail_integral(self, R: float) -> float:
        """Bound for int_R^inf r |G(r)| dr from the fitted envelope."""
        K, gam = self.g_tail_fit
        if K == 0.0:
            return 0.0
        if gam <= 0:
            return math.inf
        return K * math.exp(-gam * R) * (R / gam + 1.0 / gam**2)

    # ------------------------------------------------------------------

    def to_descriptor(self) -> dict:
        if self.name in ("hyperbolic", "damek_ricci"):
            return {"name": self.name, **dict(self.params)}
        return {"terms": [t.to_dict() for t in self.terms], "scale": self.scale,
                "sphere_factor": self.sphere_factor}


# ----------------------------------------------------------------------
# construction


def _binomial_exponentials(n_minus: int, n_plus: int) -> dict[float, float]:
    """Expand (e^{r/2} - e^{-r/2})^m (e^{r/2} + e^{-r/2})^q into {exponent: coeff}."""
    out: dict[float, float] = {}
    for i in range(n_minus + 1):
        ci = comb(n_minus, i, exact=True) * (-1) ** i
        for j in range(n_plus + 1):
            cj = comb(n_plus, j, exact=True)
            e = 0.5 * ((n_minus - 2 * i) + (n_plus - 2 * j))
            out[e] = out.get(e, 0) + ci * cj
    return out


def hyperbolic_terms(n: int) -> tuple[list[Term], float]:
    """omega_{n-1} sinh^{n-1}(r) as exponential terms (scale, terms)."""
    m = n - 1
    terms = []
    for k in range(m + 1):
        c = comb(m, k, exact=True) * (-1) ** k / 2.0**m
        terms.append(Term((float(c),), exp=float(m - 2 * k)))
    return terms, sphere_area(n)


def damek_ricci_terms(p: int, q: int) -> tuple[list[Term], float]:
    """C sinh^{p+q}(r/2) cosh^q(r/2) normalised so that A ~ omega_{n-1} r^{n-1}."""
    n = p + q + 1
    expansion = _binomial_exponentials(p + q, q)
    # sinh^{p+q}(r/2) cosh^q(r/2) = 2^{-(p+2q)} * expansion;  C = omega * 2^{p+q}
    terms = [Term((float(c) / 2.0**q,), exp=e) for e, c in expansion.items() if c != 0]
    return terms, sphere_area(n)


def build_model(spec: Mapping[str, Any] | str, *, scan: bool = True) -> DensityModel:
    """Build a density model from a JSON-like descriptor.

    Accepted forms: ``{"name": "hyperbolic", "n": 3}``,
    ``{"name": "damek_ricci", "p": 1, "q": 2}`` (``p = dim v``, ``q = dim z``,
    dimension ``p + q + 1``) or ``{"terms": [...], "scale": ..., "sphere_factor": ...}``.
    A string is parsed as JSON.
    """
    if isinstance(spec, str):
        spec = json.loads(spec)
    spec = dict(spec)
    name = spec.get("name")
    if name == "hyperbolic":
        n = int(spec["n"])
        if n < 2:
            raise DomainError("hyperbolic(n) needs n >= 2")
        terms, scale = hyperbolic_terms(n)
        model = DensityModel(tuple(terms), scale=scale, sphere_factor=scale,
                             name="hyperbolic", params=(("n", n),))
    elif name == "damek_ricci":
        p, q = int(spec["p"]), int(spec["q"])
        if p < 0 or q < 0 or p + q < 1:
            raise DomainError("damek_ricci needs p, q >= 0 and p + q >= 1")
        terms, scale = damek_ricci_terms(p, q)
        model = DensityModel(tuple(terms), scale=scale, sphere_factor=scale,
                             name="damek_ricci", params=(("p", p), ("q", q)))
    elif "terms" in spec:
        try:
            terms = [Term(tuple(t["poly"]), beta=float(t.get("beta", 0.0)),
                          phase=t.get("phase", "cos"), exp=float(t.get("exp", 0.0)))
                     for t in spec["terms"]]
        except (KeyError, TypeError) as exc:
            raise DomainError(f"each term needs a 'poly' coefficient list: {exc!r}") from exc
        model = DensityModel(tuple(terms), scale=float(spec.get("scale", 1.0)),
                             sphere_factor=float(spec.get("sphere_factor", 1.0)),
                             name=str(spec.get("name", "custom")))
    else:
        raise DomainError(f"unrecognised model descriptor: {spec!r}")
    if scan:
        _coarse_scan(model)
    return model


def _coarse_scan(model: DensityModel, npts: int = 256) -> None:
    r = np.geomspace(1e-3, 50.0, npts)
    A = model.A(r)
    if np.any(~(A > 0)):
        raise NonPositiveDensity(f"A(r) <= 0 at r = {r[np.argmax(~(A > 0))]:.6g}")
    if model.rho <= 0:
        raise NoPositiveRho(f"limit of A'/A is {2 * model.rho} <= 0")
    L = model.log_derivative(r)
    if np.any(L <= 0):
        raise DecreasingDensity(f"A decreases near r = {r[np.argmax(L <= 0)]:.6g}")
    if np.any(np.diff(L) > 1e-12):
        raise NonMonotoneLogDerivative(
            f"A'/A increases near r = {r[1:][np.argmax(np.diff(L) > 1e-12)]:.6g}")


# ----------------------------------------------------------------------
# module-level operations


def eval_A(model: DensityModel, r):
    return model.A(r)


def log_derivative(model: DensityModel, r):
    return model.log_derivative(r)


def eval_G(model: DensityModel, r):
    return model.G(r)


@dataclass
class HypothesisReport:
    model: str
    h1: bool
    h2: bool
    h3: bool
    h4: bool
    decomposition: bool
    leading_coefficient: float | None
    two_rho: float
    two_rho_numeric: float
    delta: float | None
    alpha: float
    tail_integral: float
    g_bound: float
    g_decay_rate: float
    g_decay_rate_bound: float | None
    pure_exp_constant: float | None
    experimental: bool
    failures: list[str]

    @property
    def all_pass(self) -> bool:
        return self.h1 and self.h2 and self.h3 and self.h4 and self.decomposition

    def to_dict(self) -> dict:
        def clean(v):
            if isinstance(v, float) and not math.isfinite(v):
                return None
            return v

        d = {k: clean(v) for k, v in self.__dict__.items()}
        d["all_pass"] = self.all_pass
        return d


def check_hypotheses(model: DensityModel, r_max: float = 50.0, tol: float = 1e-12,
                     r0: float = 1.0) -> HypothesisReport:
    """Scan (H1)-(H4) and the leading-term decomposition A = C e^{2 rho r} + P."""
    if r_max < 10:
        raise DomainError("r_max must be >= 10")
    failures: list[str] = []
    r = np.geomspace(1e-4, r_max, 2048)
    A = model.A(r)
    L, dL, G = model._L_parts(r)

    h1 = bool(np.all(A > 0) and np.all(L > 0) and model.rho > 0)
    if not h1:
        failures.append("H1: A not positive and increasing")

    two_rho_num = float(L[-1])
    h2 = bool(np.all(np.diff(L) <= tol) and model.rho > 0)
    if not h2:
        failures.append("H2: A'/A not non-increasing or limit <= 0")

    coefs, k0 = model.taylor_coefficients
    b = coefs[k0:]
    odd = np.abs(b[1:20:2]).max() if len(b) > 2 else 0.0
    h3 = bool(k0 >= 1 and b[0] > 0 and odd <= 1e-10 * np.abs(b[:20]).max())
    if not h3:
        failures.append("H3: A(r)/r^(2 alpha + 1) is not an even function positive at 0")

    C = model.leading_coefficient
    decomposition = C is not None and C > 0
    if decomposition and abs(two_rho_num - 2 * model.rho) > 1e-8:
        decomposition = False
    if not decomposition:
        failures.append("decomposition: leading term is not C exp(2 rho r) with C > 0")
    delta = model.lower_degree

    rt = np.linspace(r0, r_max, 4001)
    Gt = np.abs(model.G(rt))
    tail = float(np.trapezoid(rt * Gt, rt))
    K, gam = model.g_tail_fit
    g_zero = K == 0.0 or K < 1e-14
    h4 = bool(decomposition and np.all(np.isfinite(Gt)) and (g_zero or gam > 0.05))
    if not h4:
        failures.append("H4: r |G(r)| does not decay exponentially")

    pure_c = None
    if model.rho > 0:
        rr = np.linspace(1.0, max(r_max, 200.0), 2000)
        with np.errstate(over="ignore"):
            ratio = model._direct(rr)[0]
        if np.all(ratio > 0):
            pure_c = float(max(ratio.max(), 1.0 / ratio.min()))
    return HypothesisReport(
        model=model.label, h1=h1, h2=h2, h3=h3, h4=h4, decomposition=bool(decomposition),
        leading_coefficient=C, two_rho=2 * model.rho, two_rho_numeric=two_rho_num,
        delta=None if not math.isfinite(delta) else delta, alpha=model.alpha,
        tail_integral=tail, g_bound=K, g_decay_rate=gam,
        g_decay_rate_bound=(model.rho - delta / 2) if math.isfinite(delta) else None,
        pure_exp_constant=pure_c, experimental=model.experimental, failures=failures,
    )
