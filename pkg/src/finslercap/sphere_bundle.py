"""The sphere bundle SM over a chart: Hilbert form, volume element, gradients.

Points of SM are written ``(x, phi)`` where ``phi`` parametrizes the Euclidean
unit sphere S^{n-1}; the ray [y] is represented on the indicatrix by
``y = yhat(phi) / F(x, yhat(phi))``.  For n = 2, ``phi`` is the polar angle;
for n = 3 it is the pair ``(theta, psi)`` (polar angle, azimuth), the ordering
for which the Euclidean volume density is positive.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import forms
from .finsler import (
    FinslerModel,
    _batch,
    _connection,
    _out,
)


# --- sphere parametrization ------------------------------------------------


def sphere_point(phi, n: int):
    """Unit vector yhat(phi) and its Jacobian d yhat / d phi.

    Returns arrays of shape (P, n) and (P, n, n-1).
    """
    phi = np.asarray(phi, dtype=float).reshape(-1, n - 1)
    if n == 2:
        t = phi[:, 0]
        c, s = np.cos(t), np.sin(t)
        yhat = np.stack([c, s], axis=1)
        jac = np.stack([-s, c], axis=1)[:, :, None]
        return yhat, jac
    if n == 3:
        th, psi = phi[:, 0], phi[:, 1]
        cp, sp, ct, st = np.cos(psi), np.sin(psi), np.cos(th), np.sin(th)
        yhat = np.stack([st * cp, st * sp, ct], axis=1)
        d_psi = np.stack([-st * sp, st * cp, np.zeros_like(st)], axis=1)
        d_th = np.stack([ct * cp, ct * sp, -st], axis=1)
        return yhat, np.stack([d_th, d_psi], axis=2)
    raise ValueError("fiber parametrization is available for n = 2 and n = 3 only")


def direction_to_phi(y) -> np.ndarray:
    """Fiber parameter of the ray through y (inverse of :func:`sphere_point`)."""
    y = np.asarray(y, dtype=float)
    single = y.ndim == 1
    y = y.reshape(-1, y.shape[-1])
    u = y / np.linalg.norm(y, axis=1, keepdims=True)
    if y.shape[1] == 2:
        phi = np.mod(np.arctan2(u[:, 1], u[:, 0]), 2 * np.pi)[:, None]
    elif y.shape[1] == 3:
        phi = np.stack([np.arccos(np.clip(u[:, 2], -1, 1)), np.mod(np.arctan2(u[:, 1], u[:, 0]), 2 * np.pi)], axis=1)
    else:
        raise ValueError("fiber parametrization is available for n = 2 and n = 3 only")
    return phi[0] if single else phi


# --- Hilbert form and its exterior derivative ------------------------------


def hilbert_form(m: FinslerModel, x, y):
    """Components l_i of the Hilbert form, l_i = g_ij y^j / F = dF/dy^i."""
    xb, yb, single = _batch(m, x, y)
    return _out(m.hilbert(xb, yb), single)


def hilbert_form_from_metric(m: FinslerModel, x, y):
    """l_i computed as g_ij l^j (the other route to the same covector)."""
    xb, yb, single = _batch(m, x, y)
    F = m.F(xb, yb)
    return _out(np.einsum("pij,pj->pi", m.g(xb, yb), yb / F[:, None]), single)


def angular_metric(m: FinslerModel, x, y):
    """h_ij = g_ij - l_i l_j."""
    xb, yb, single = _batch(m, x, y)
    return _out(_angular(m, xb, yb), single)


def _angular(m, x, y):
    ell = m.hilbert(x, y)
    return m.g(x, y) - ell[:, :, None] * ell[:, None, :]


def d_omega_frame(m: FinslerModel, x, y):
    """Coefficient matrix of d(omega) on dx^i ^ (delta y^j / F), i.e. -h_ij."""
    xb, yb, single = _batch(m, x, y)
    return _out(-_angular(m, xb, yb), single)


def d_omega_natural(m: FinslerModel, x, y, step: float = 1e-4):
    """d(omega) in the natural coordinates z = (x, y) of TM_0.

    Returns the antisymmetric 2n x 2n matrix W with d(omega) = 1/2 W_ab dz^a ^ dz^b.
    The partial derivatives of l_i are taken by Richardson-extrapolated
    central differences of :func:`hilbert_form`, independently of the
    fundamental tensor.
    """
    xb, yb, single = _batch(m, x, y)
    P, n = xb.shape
    hx = step * np.maximum(1.0, np.abs(xb).max(axis=1))
    hy = step * np.linalg.norm(yb, axis=1)
    dl = np.zeros((P, n, 2 * n))  # dl[p, i, a] = d l_i / d z^a
    for a in range(2 * n):
        h = hx if a < n else hy
        est = []
        for s in (1.0, 0.5):
            dz = np.zeros((P, 2 * n))
            dz[:, a] = s * h
            lp = m.hilbert(xb + dz[:, :n], yb + dz[:, n:])
            lm = m.hilbert(xb - dz[:, :n], yb - dz[:, n:])
            est.append((lp - lm) / (2 * s * h[:, None]))
        dl[:, :, a] = (4 * est[1] - est[0]) / 3
    W = np.zeros((P, 2 * n, 2 * n))
    for i in range(n):
        # d(l_i dx^i) = d l_i/dz^a dz^a ^ dx^i
        W[:, :, i] += dl[:, i, :]
        W[:, i, :] -= dl[:, i, :]
    return _out(W, single)


def natural_to_adapted(m: FinslerModel, x, y, W):
    """Re-express a 2-form given in (dx, dy) in the co-frame (dx, delta y / F).

    Uses dy^j = F (delta y^j / F) - N^j_k dx^k.  Returns the antisymmetric
    matrix in the adapted co-frame; its off-diagonal block ``[:n, n:]`` is the
    coefficient of dx^i ^ (delta y^j / F).
    """
    xb, yb, single = _batch(m, x, y)
    P, n = xb.shape
    W = np.asarray(W).reshape(P, 2 * n, 2 * n)
    F = m.F(xb, yb)
    Nfull = F[:, None, None] * _connection(m, xb, yb)  # N^j_k
    T = np.zeros((P, 2 * n, 2 * n))
    T[:, :n, :n] = np.eye(n)
    T[:, n:, :n] = -Nfull
    T[:, n:, n:] = F[:, None, None] * np.eye(n)
    out = np.einsum("pab,pac,pbd->pcd", W, T, T)
    return _out(out, single)


# --- volume element --------------------------------------------------------


class OrientationError(ArithmeticError):
    """The volume density came out non-positive."""


def volume_density(m: FinslerModel, x, phi):
    """Density D of eta(g) = (-1)^N/(n-1)! omega ^ (d omega)^(n-1) in (x, phi).

    omega and d(omega) are pulled back along (x, phi) -> (x, yhat(phi)) (l_i is
    0-homogeneous, so no normalization onto the indicatrix is needed) and
    wedged to top degree in the coordinates (x^1..x^n, phi^1..phi^(n-1)).
    """
    xb, phib, single = _base_and_fiber(m, x, phi)
    D = _density(m, xb, phib)
    return float(D[0]) if single else D


def _base_and_fiber(m, x, phi):
    n = m.dim
    xb, _, single = _batch(m, x)
    phib = np.asarray(phi, dtype=float).reshape(-1, n - 1)
    single = single and len(phib) == 1
    P = max(len(xb), len(phib))
    return np.array(np.broadcast_to(xb, (P, n))), np.array(np.broadcast_to(phib, (P, n - 1))), single


def _density(m, x, phi):
    n = m.dim
    yhat, jac = sphere_point(phi, n)
    Fj = m.F_jet_xy(x, yhat)
    L = Fj.grad[n:]  # (n, P): l_i
    dL_dx = Fj.hess[n:, :n]  # (n, n, P): d l_i / d x^j
    dL_dphi = np.einsum("ikp,pka->iap", Fj.hess[n:, n:], jac)  # d l_i / d phi^a
    omega = {(i,): L[i] for i in range(n)}
    terms = []
    for i in range(n):
        for j in range(n):
            terms.append(((j, i), dL_dx[i, j]))
        for a in range(n - 1):
            terms.append(((n + a, i), dL_dphi[i, a]))
    domega = forms.from_terms(terms)
    top = forms.wedge(omega, forms.wedge_power(domega, n - 1))
    D = forms.volume_factor(n) * np.asarray(forms.top_coefficient(top, 2 * n - 1), dtype=float)
    D = np.broadcast_to(D, (x.shape[0],))
    if np.any(~(D > 0)):
        bad = int(np.argmin(np.where(np.isfinite(D), D, -np.inf)))
        raise OrientationError(f"non-positive volume density {D[bad]:.6g} at x={x[bad].tolist()}, phi={phi[bad].tolist()}")
    return np.array(D)


def sasaki_volume_density(m: FinslerModel, x, phi):
    """Riemannian volume density of the Sasaki metric restricted to SM, in (x, phi)."""
    n = m.dim
    xb, phib, single = _base_and_fiber(m, x, phi)
    yhat, jac = sphere_point(phib, n)
    Fj = m.F_jet_xy(xb, yhat)
    F = Fj.val
    Fx, Fy = Fj.grad[:n].T, Fj.grad[n:].T
    y = yhat / F[:, None]
    # y(x, phi) = yhat / F(x, yhat)
    dy_dx = -yhat[:, :, None] * Fx[:, None, :] / F[:, None, None] ** 2
    Fy_jac = np.einsum("pk,pka->pa", Fy, jac)
    dy_dphi = jac / F[:, None, None] - yhat[:, :, None] * Fy_jac[:, None, :] / F[:, None, None] ** 2
    Nfull = _connection(m, xb, y)  # F(x, y) = 1 on the indicatrix
    P = len(xb)
    theta = np.zeros((P, n, 2 * n - 1))
    theta[:, :, :n] = dy_dx + Nfull
    theta[:, :, n:] = dy_dphi
    E = np.zeros((P, n, 2 * n - 1))
    E[:, :, :n] = np.eye(n)
    g = m.g(xb, y)
    G = np.einsum("pia,pij,pjb->pab", E, g, E) + np.einsum("pia,pij,pjb->pab", theta, g, theta)
    dens = np.sqrt(np.linalg.det(G))
    return float(dens[0]) if single else dens


# --- fiber quadrature ------------------------------------------------------


@dataclass(frozen=True)
class FiberNodes:
    """Quadrature nodes on the indicatrix S_xM at one base point.

    ``sum(w * D * f(y))`` approximates the fiber integral of f against eta(g).
    """

    x: np.ndarray
    phi: np.ndarray  # (K, n-1)
    yhat: np.ndarray  # (K, n) Euclidean unit directions
    y: np.ndarray  # (K, n) with F(x, y) = 1
    w: np.ndarray  # (K,)
    D: np.ndarray  # (K,)

    def __len__(self):
        return len(self.w)

    @property
    def measure(self) -> float:
        return float(np.sum(self.w * self.D))


def fiber_rule(n: int, order: int):
    """Parameter nodes and weights on S^{n-1}: trapezoid (n=2), trapezoid x Gauss-Legendre (n=3)."""
    if order < 4:
        raise ValueError("quadrature order must be at least 4")
    if n == 2:
        t = 2 * np.pi * np.arange(order) / order
        return t[:, None], np.full(order, 2 * np.pi / order)
    if n == 3:
        psi = 2 * np.pi * np.arange(order) / order
        nt = max(order // 2, 2)
        s, ws = np.polynomial.legendre.leggauss(nt)
        th = 0.5 * np.pi * (s + 1.0)
        wt = 0.5 * np.pi * ws
        T, P = np.meshgrid(th, psi, indexing="ij")
        W = np.outer(wt, np.full(order, 2 * np.pi / order))
        return np.stack([T.ravel(), P.ravel()], axis=1), W.ravel()
    raise ValueError("fiber quadrature is available for n = 2 and n = 3 only")


def fiber_quadrature(m: FinslerModel, x, order: int) -> FiberNodes:
    xb, _, _ = _batch(m, x)
    if len(xb) != 1:
        raise ValueError("fiber_quadrature takes a single base point")
    phi, w = fiber_rule(m.dim, order)
    X = np.repeat(xb, len(w), axis=0)
    yhat, _ = sphere_point(phi, m.dim)
    y = yhat / m.F(X, yhat)[:, None]
    D = _density(m, X, phi)
    return FiberNodes(xb[0], phi, yhat, y, w, D)


# --- gradients on SM -------------------------------------------------------


def vertical_lift_grad_norm(m: FinslerModel, x, y, du):
    """|grad u^V| = sqrt(g^ij(x, y) du_i du_j) for a function u of position only."""
    xb, yb, single = _batch(m, x, y)
    du = np.broadcast_to(np.asarray(du, dtype=float), xb.shape)
    q = np.einsum("pij,pi,pj->p", m.g_inv(xb, yb), du, du)
    out = np.sqrt(np.maximum(q, 0.0))
    return float(out[0]) if single else out


def gradient_norm_sm(m: FinslerModel, x, y, df_dx, df_dy):
    """Sasaki norm of grad f for f on SM.

    ``df_dx`` and ``df_dy`` are callables ``(x, y) -> (P, n)`` (or arrays)
    giving the natural partial derivatives of f.  The horizontal part uses
    delta f/delta x^i = df/dx^i - N^j_i df/dy^j.
    """
    xb, yb, single = _batch(m, x, y)
    fx = df_dx(xb, yb) if callable(df_dx) else df_dx
    fy = df_dy(xb, yb) if callable(df_dy) else df_dy
    fx = np.broadcast_to(np.asarray(fx, dtype=float), xb.shape)
    fy = np.broadcast_to(np.asarray(fy, dtype=float), xb.shape)
    F = m.F(xb, yb)
    Nfull = F[:, None, None] * _connection(m, xb, yb)
    dfh = fx - np.einsum("pji,pj->pi", Nfull, fy)
    ginv = m.g_inv(xb, yb)
    q = np.einsum("pij,pi,pj->p", ginv, dfh, dfh) + F**2 * np.einsum("pij,pi,pj->p", ginv, fy, fy)
    out = np.sqrt(np.maximum(q, 0.0))
    return float(out[0]) if single else out
