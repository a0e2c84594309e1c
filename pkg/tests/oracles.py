"""Closed forms used as independent oracles (mpmath hypergeometric functions).

Rank-one models reduce to Jacobi functions: for A proportional to
sinh^{2a+1}(t) cosh^{2b+1}(t) with t = r / k, the spherical function is
2F1((rho + i mu)/2, (rho - i mu)/2; a + 1; -sinh^2 t) with rho = a + b + 1 and
mu = k lambda, and the c-function is the Jacobi c-function at mu.
"""

import mpmath as mp
import numpy as np


def jacobi_params(model_desc):
    """(a, b, k) for hyperbolic(n) or damek_ricci(p, q)."""
    if model_desc["name"] == "hyperbolic":
        n = model_desc["n"]
        return (n - 2) / 2.0, -0.5, 1.0
    p, q = model_desc["p"], model_desc["q"]
    return (p + q - 1) / 2.0, (q - 1) / 2.0, 2.0


def phi_exact(model_desc, lam, r):
    a, b, k = jacobi_params(model_desc)
    rho, mu = a + b + 1, k * complex(lam)
    out = [complex(mp.hyp2f1((rho + 1j * mu) / 2, (rho - 1j * mu) / 2, a + 1, -mp.sinh(x / k) ** 2))
           for x in np.atleast_1d(r)]
    return np.array(out)


def c_exact(model_desc, lam):
    a, b, k = jacobi_params(model_desc)
    rho, z = a + b + 1, 1j * k * complex(lam)
    val = (mp.mpf(2) ** (rho - z) * mp.gamma(a + 1) * mp.gamma(z)
           / (mp.gamma((z + rho) / 2) * mp.gamma((z + a - b + 1) / 2)))
    return complex(val)


def phi_h3(lam, r):
    r = np.asarray(r, dtype=float)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.sin(lam * r) / (lam * np.sinh(r))
    return np.where(r == 0, 1.0, out)


def c_h3(lam):
    return 1.0 / (1j * lam)
