"""Shared models and independent numerical oracles for the test suite."""

from __future__ import annotations

import math

import numpy as np

from finslercap import ConformalModel, RandersModel, RiemannianModel

E = math.e
SIGMA = "0.3*sin(x1)*cos(x2)"


def euclid(n=2, box=4.0):
    a = [["1" if i == j else "0" for j in range(n)] for i in range(n)]
    return RiemannianModel(a, [-box] * n, [box] * n)


def riemann_var():
    a = [["1 + 0.1*x1^2", "0.05*sin(x2)"], ["0.05*sin(x2)", "1.2 + 0.1*cos(x1)"]]
    return RiemannianModel(a, [-2, -2], [2, 2])


def randers_const(b=(0.3, 0.0)):
    return RandersModel([["1", "0"], ["0", "1"]], [repr(float(c)) for c in b], [-4, -4], [4, 4])


def randers_var():
    a = [["1 + 0.1*x1^2", "0"], ["0", "1"]]
    b = ["0.3", "0.1*sin(x1)"]
    return RandersModel(a, b, [-2, -2], [2, 2])


def randers_var3():
    a = [["1 + 0.1*x1^2", "0", "0"], ["0", "1", "0.1*x3"], ["0", "0.1*x3", "1"]]
    b = ["0.2*cos(x2)", "0.1", "0.05*x1"]
    return RandersModel(a, b, [-1, -1, -1], [1, 1, 1])


def conformal_randers():
    return ConformalModel(randers_var(), SIGMA)


FAMILIES = {
    "euclid": euclid,
    "riemann_var": riemann_var,
    "randers_const": randers_const,
    "randers_var": randers_var,
    "randers_var3": randers_var3,
    "conformal_randers": conformal_randers,
}


def samples(m, count, seed=0, margin=0.1):
    """Random interior points and directions of assorted lengths."""
    rng = np.random.default_rng(seed)
    lo, hi = m.lo + margin, m.hi - margin
    x = lo + (hi - lo) * rng.random((count, m.dim))
    y = rng.normal(size=(count, m.dim))
    y *= np.exp(rng.uniform(-1, 1, size=(count, 1)))
    return x, y


def rel_err(a, b, floor=1.0):
    a, b = np.asarray(a, float), np.asarray(b, float)
    return float(np.max(np.abs(a - b)) / max(np.max(np.abs(b)), floor))


# --- oracles ---------------------------------------------------------------


def richardson(f, t0, h):
    """First derivative of f at t0 by Richardson-extrapolated central differences."""
    d1 = (f(t0 + h) - f(t0 - h)) / (2 * h)
    d2 = (f(t0 + h / 2) - f(t0 - h / 2)) / h
    return (4 * d2 - d1) / 3


def fd_hessian_half_F2(Ffun, y, h=1e-3):
    """Hessian of F^2/2 in y from values only (fourth-order central stencil)."""
    n = len(y)
    H = np.zeros((n, n))
    E2 = lambda v: 0.5 * Ffun(v) ** 2
    for i in range(n):
        for j in range(n):
            ei, ej = np.eye(n)[i] * h, np.eye(n)[j] * h

            def mixed(s):
                return (E2(y + s * ei + s * ej) - E2(y + s * ei - s * ej) - E2(y - s * ei + s * ej) + E2(y - s * ei - s * ej)) / (4 * (s * h) ** 2)

            H[i, j] = (4 * mixed(0.5) - mixed(1.0)) / 3
    return H


def randers_g_closed(a, b, y):
    """Closed-form Randers fundamental tensor for F = alpha + beta.

    g_ij = (F/alpha) (a_ij - ah_i ah_j) + l_i l_j with ah_i = a_ij y^j / alpha,
    l_i = ah_i + b_i.
    """
    alpha = math.sqrt(y @ a @ y)
    F = alpha + b @ y
    ah = a @ y / alpha
    ell = ah + b
    return (F / alpha) * (a - np.outer(ah, ah)) + np.outer(ell, ell)


def randers_coeffs(m, x):
    X = np.asarray(x, float)[None, :]
    return m.a_matrix(X)[0], m.b_vector(X)[0]
