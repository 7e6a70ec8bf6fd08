"""Finsler structures on a coordinate box and their pointwise tensors.

Three families are provided: Riemannian (``F = sqrt(a_ij y^i y^j)``), Randers
(``F = sqrt(a_ij y^i y^j) + b_i y^i``) and conformally scaled models
(``F' = exp(sigma(x)) F``).  Coefficients are :class:`~finslercap.expr.ScalarField`
expressions in the chart coordinates.

Every operation accepts a single point (``x`` and ``y`` of shape ``(n,)``) or a
batch (shape ``(P, n)``, broadcast against each other) and returns arrays with
the batch axis first.  Index conventions:

* ``fundamental_tensor`` -> ``g[..., i, j]``
* ``cartan_tensor`` -> ``C[..., i, j, k] = 1/2 dg_ij/dy^k``
* ``formal_christoffel`` -> ``gamma[..., i, j, k]`` (upper index first)
* ``nonlinear_connection`` -> ``N[..., i, j]`` holding ``N^i_j / F``
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import jet as J
from .expr import ScalarField, parse
from .jet import Jet

#: directions with sup-norm below this are treated as the zero section
MIN_DIRECTION = 1e-8
#: Randers models must keep ||b||_a <= 1 - RANDERS_MARGIN
RANDERS_MARGIN = 1e-6
#: base step of the Richardson-extrapolated central differences
FD_STEP = 1e-3


class ModelValidityError(ValueError):
    """The Finsler structure is not strongly convex at some sample."""

    def __init__(self, message, sample=None):
        super().__init__(message)
        self.sample = sample


class PointError(ValueError):
    """A point lies outside the chart domain or a direction is degenerate."""


def _as_field(f, n) -> ScalarField:
    if isinstance(f, ScalarField):
        return f
    if isinstance(f, (int, float)):
        return parse(repr(float(f)), n)
    return parse(str(f), n)


def _bcast(v, P):
    """Broadcast a coefficient value (float, array or Jet) to batch size P."""
    if isinstance(v, Jet):
        return v
    return np.broadcast_to(np.asarray(v, dtype=float), (P,))


# --- models ----------------------------------------------------------------


class FinslerModel:
    """Base class; subclasses define :meth:`F_generic`."""

    family = "abstract"

    def __init__(self, dim: int, lo: Sequence[float], hi: Sequence[float]):
        if dim < 2:
            raise ValueError("dimension must be at least 2")
        self.dim = int(dim)
        self.lo = np.asarray(lo, dtype=float).reshape(self.dim)
        self.hi = np.asarray(hi, dtype=float).reshape(self.dim)
        if np.any(self.hi <= self.lo):
            raise ValueError("empty chart domain")

    def F_generic(self, X, Y):
        """F evaluated on coordinate components (arrays or jets)."""
        raise NotImplementedError

    # batch kernels; x, y are (P, n) arrays, no domain checks

    def F(self, x, y):
        return np.asarray(self.F_generic(list(x.T), list(y.T)), dtype=float)

    def F_jet_y(self, x, y) -> Jet:
        Y = Jet.variables(list(y.T))
        return self.F_generic(list(x.T), Y)

    def F_jet_xy(self, x, y) -> Jet:
        n = self.dim
        V = Jet.variables(list(x.T) + list(y.T))
        return self.F_generic(V[:n], V[n:])

    def g(self, x, y):
        Fj = self.F_jet_y(x, y)
        gr = Fj.grad.T  # (P, n)
        hs = np.moveaxis(Fj.hess, -1, 0)  # (P, n, n)
        return Fj.val[:, None, None] * hs + gr[:, :, None] * gr[:, None, :]

    def g_inv(self, x, y):
        return np.linalg.inv(self.g(x, y))

    def hilbert(self, x, y):
        return self.F_jet_y(x, y).grad.T

    def dg_dx(self, x, y):
        h = FD_STEP * np.maximum(1.0, np.abs(x).max(axis=1))
        return _richardson(lambda xx, yy: self.g(xx, yy), x, y, h, wrt="x")

    def dg_dy(self, x, y):
        h = FD_STEP * np.linalg.norm(y, axis=1)
        return _richardson(lambda xx, yy: self.g(xx, yy), x, y, h, wrt="y")

    def sigma(self, x):
        """Accumulated conformal exponent relative to the innermost base model."""
        return np.zeros(x.shape[0])

    def __repr__(self):
        return f"{type(self).__name__}(dim={self.dim}, lo={self.lo.tolist()}, hi={self.hi.tolist()})"


class RiemannianModel(FinslerModel):
    family = "riemannian"

    def __init__(self, a, lo, hi):
        n = len(a)
        super().__init__(n, lo, hi)
        self.a = _sym_fields(a, n)

    def coefficient_fields(self):
        return [f for row in self.a for f in row]

    def a_generic(self, X):
        n = self.dim
        return [[self.a[i][j].evaluate(X) for j in range(n)] for i in range(n)]

    def a_matrix(self, x):
        P, n = x.shape
        X = list(x.T)
        out = np.empty((P, n, n))
        for i in range(n):
            for j in range(i, n):
                out[:, i, j] = out[:, j, i] = _bcast(self.a[i][j].evaluate(X), P)
        return out

    def F_generic(self, X, Y):
        return J.sqrt(_quad(self.a_generic(X), Y))

    def g(self, x, y):
        return self.a_matrix(x)

    def dg_dx(self, x, y):
        P, n = x.shape
        X = Jet.variables(list(x.T))
        out = np.zeros((P, n, n, n))
        for i in range(n):
            for j in range(i, n):
                v = self.a[i][j].evaluate(X)
                if isinstance(v, Jet):
                    out[:, i, j, :] = out[:, j, i, :] = v.grad.T
        return out

    def dg_dy(self, x, y):
        P, n = x.shape
        return np.zeros((P, n, n, n))


class RandersModel(RiemannianModel):
    family = "randers"

    def __init__(self, a, b, lo, hi):
        super().__init__(a, lo, hi)
        if len(b) != self.dim:
            raise ValueError("one-form b must have one component per coordinate")
        self.b = [_as_field(bi, self.dim) for bi in b]

    def coefficient_fields(self):
        return super().coefficient_fields() + list(self.b)

    def b_vector(self, x):
        P = x.shape[0]
        X = list(x.T)
        return np.stack([_bcast(bi.evaluate(X), P) for bi in self.b], axis=1)

    def b_norm(self, x):
        a = self.a_matrix(x)
        b = self.b_vector(x)
        return np.sqrt(np.einsum("pi,pi->p", b, np.linalg.solve(a, b[..., None])[..., 0]))

    def F_generic(self, X, Y):
        alpha = J.sqrt(_quad(self.a_generic(X), Y))
        beta = 0.0
        for bi, yi in zip(self.b, Y):
            beta = beta + bi.evaluate(X) * yi
        return alpha + beta

    # Randers g is y-dependent: use the generic (AD + finite difference) kernels
    g = FinslerModel.g
    dg_dx = FinslerModel.dg_dx
    dg_dy = FinslerModel.dg_dy


class ConformalModel(FinslerModel):
    """``F' = exp(sigma(x)) F_base``; tensors follow the exact scaling laws."""

    family = "conformal"

    def __init__(self, base: FinslerModel, sigma):
        super().__init__(base.dim, base.lo, base.hi)
        self.base = base
        self.sigma_field = _as_field(sigma, base.dim)

    def coefficient_fields(self):
        return self.base.coefficient_fields() + [self.sigma_field]

    def _sigma(self, x):
        return _bcast(self.sigma_field.evaluate(list(x.T)), x.shape[0])

    def sigma(self, x):
        return self._sigma(x) + self.base.sigma(x)

    def F_generic(self, X, Y):
        return J.exp(self.sigma_field.evaluate(X)) * self.base.F_generic(X, Y)

    def F(self, x, y):
        return np.exp(self._sigma(x)) * self.base.F(x, y)

    def g(self, x, y):
        return np.exp(2.0 * self._sigma(x))[:, None, None] * self.base.g(x, y)

    def g_inv(self, x, y):
        return np.exp(-2.0 * self._sigma(x))[:, None, None] * self.base.g_inv(x, y)

    def hilbert(self, x, y):
        return np.exp(self._sigma(x))[:, None] * self.base.hilbert(x, y)

    def dg_dx(self, x, y):
        # d(e^{2s} g)/dx^k = e^{2s} (2 ds/dx^k g + dg/dx^k)
        s = self.sigma_field.jet(x)
        ds = _bcast_grad(s, x.shape)
        g = self.base.g(x, y)
        dg = self.base.dg_dx(x, y)
        scale = np.exp(2.0 * s.val)[:, None, None, None]
        return scale * (2.0 * g[..., None] * ds[:, None, None, :] + dg)

    def dg_dy(self, x, y):
        return np.exp(2.0 * self._sigma(x))[:, None, None, None] * self.base.dg_dy(x, y)


def _bcast_grad(s: Jet, shape):
    P, n = shape
    return np.broadcast_to(s.grad.T, (P, n))


def _sym_fields(a, n):
    if any(len(row) != n for row in a):
        raise ValueError("metric coefficient matrix must be square")
    fields = [[_as_field(a[i][j], n) for j in range(n)] for i in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            if fields[i][j].ast != fields[j][i].ast:
                raise ValueError(f"metric coefficients a[{i}][{j}] and a[{j}][{i}] differ")
    return fields


def _quad(a, Y):
    n = len(Y)
    q = 0.0
    for i in range(n):
        q = q + a[i][i] * (Y[i] * Y[i])
        for j in range(i + 1, n):
            q = q + 2.0 * (a[i][j] * (Y[i] * Y[j]))
    return q


def _richardson(fun, x, y, h, wrt):
    """d fun / d(x or y)^k by Richardson-extrapolated central differences.

    Returns an array with the differentiation index appended last.  All
    4n shifted evaluations go through ``fun`` in a single batch.
    """
    P, n = x.shape
    shifts = []
    for k in range(n):
        for s in (h, -h, 0.5 * h, -0.5 * h):
            d = np.zeros((P, n))
            d[:, k] = s
            shifts.append(d)
    D = np.concatenate(shifts)  # (4nP, n)
    xs = np.tile(x, (4 * n, 1))
    ys = np.tile(y, (4 * n, 1))
    if wrt == "x":
        xs = xs + D
    else:
        ys = ys + D
    vals = fun(xs, ys)
    vals = vals.reshape((n, 4, P) + vals.shape[1:])
    hb = h.reshape((P,) + (1,) * (vals.ndim - 3))
    d1 = (vals[:, 0] - vals[:, 1]) / (2.0 * hb)
    d2 = (vals[:, 2] - vals[:, 3]) / hb
    est = (4.0 * d2 - d1) / 3.0  # (n, P, ...)
    return np.moveaxis(est, 0, -1)


# --- input handling --------------------------------------------------------


def _batch(m: FinslerModel, x, y=None, check_domain=True):
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    if y is not None:
        y = np.asarray(y, dtype=float)
        single = single and y.ndim == 1
        shape = np.broadcast_shapes(x.shape, y.shape)
        x = np.broadcast_to(x, shape)
        y = np.broadcast_to(y, shape)
        y = np.array(y.reshape(-1, m.dim))
        if np.any(np.abs(y).max(axis=1) < MIN_DIRECTION):
            raise PointError("direction y is (numerically) zero")
    x = np.array(x.reshape(-1, m.dim))
    if x.shape[-1] != m.dim:
        raise PointError(f"expected {m.dim} coordinates")
    if check_domain and (np.any(x < m.lo) or np.any(x > m.hi)):
        raise PointError("point outside the chart domain")
    return x, y, single


def _out(a, single):
    a = np.asarray(a)
    return a[0] if single else a


# --- operations ------------------------------------------------------------


def eval_F(m: FinslerModel, x, y):
    """Finsler norm F(x, y)."""
    xb, yb, single = _batch(m, x, y)
    out = m.F(xb, yb)
    return float(out[0]) if single else out


def fundamental_tensor(m: FinslerModel, x, y):
    """g_ij = 1/2 d^2 F^2 / dy^i dy^j; raises ModelValidityError if not positive definite."""
    xb, yb, single = _batch(m, x, y)
    g = m.g(xb, yb)
    _assert_spd(g, xb, yb)
    return _out(g, single)


def inverse_fundamental(m: FinslerModel, x, y):
    xb, yb, single = _batch(m, x, y)
    _assert_spd(m.g(xb, yb), xb, yb)
    return _out(m.g_inv(xb, yb), single)


def angle_cos(m: FinslerModel, x, u, v):
    """Cosine of the angle of v with respect to u, measured with g(x, u).

    Not symmetric in (u, v) for non-Riemannian models.
    """
    xb, ub, single = _batch(m, x, u)
    _, vb, _ = _batch(m, x, v)
    g = m.g(xb, ub)
    uv = np.einsum("pij,pi,pj->p", g, ub, vb)
    uu = np.einsum("pij,pi,pj->p", g, ub, ub)
    vv = np.einsum("pij,pi,pj->p", g, vb, vb)
    c = uv / (np.sqrt(uu) * np.sqrt(vv))
    return float(c[0]) if single else c


def cartan_tensor(m: FinslerModel, x, y):
    xb, yb, single = _batch(m, x, y)
    return _out(_cartan(m, xb, yb), single)


def _cartan(m, x, y):
    dgy = 0.5 * m.dg_dy(x, y)
    # exact C is totally symmetric; average out the finite-difference asymmetry
    perms = list(itertools.permutations((1, 2, 3)))
    acc = np.zeros_like(dgy)
    for p in perms:
        acc = acc + np.transpose(dgy, (0,) + p)
    return acc / len(perms)


def formal_christoffel(m: FinslerModel, x, y):
    xb, yb, single = _batch(m, x, y)
    return _out(_christoffel(m, xb, yb), single)


def _christoffel(m, x, y, ginv=None):
    dg = m.dg_dx(x, y)  # dg[p, i, j, k] = d g_ij / d x^k
    # T_sjk = (d_k g_sj + d_j g_ks) - d_s g_jk, grouped so T is bitwise symmetric in j, k
    T = (dg + np.transpose(dg, (0, 2, 3, 1))) - np.transpose(dg, (0, 3, 1, 2))
    if ginv is None:
        ginv = m.g_inv(x, y)
    return 0.5 * np.einsum("pis,psjk->pijk", ginv, T)


def nonlinear_connection(m: FinslerModel, x, y):
    """N^i_j / F = gamma^i_jk l^k - A^i_jk gamma^k_rs l^r l^s with A = F C.

    The result is invariant under y -> lambda y.
    """
    xb, yb, single = _batch(m, x, y)
    return _out(_connection(m, xb, yb), single)


def _connection(m, x, y):
    F = m.F(x, y)
    ell = y / F[:, None]
    ginv = m.g_inv(x, y)
    gam = _christoffel(m, x, y, ginv)
    A = F[:, None, None, None] * _cartan(m, x, y)
    A_up = np.einsum("pis,psjk->pijk", ginv, A)
    spray = np.einsum("pkrs,pr,ps->pk", gam, ell, ell)
    return np.einsum("pijk,pk->pij", gam, ell) - np.einsum("pijk,pk->pij", A_up, spray)


def F_derivatives(m: FinslerModel, x, y):
    """(F, dF/dx, dF/dy) by exact forward-mode differentiation."""
    xb, yb, single = _batch(m, x, y)
    Fj = m.F_jet_xy(xb, yb)
    n = m.dim
    F, Fx, Fy = Fj.val, Fj.grad[:n].T, Fj.grad[n:].T
    if single:
        return float(F[0]), Fx[0], Fy[0]
    return F, Fx, Fy


def horizontal_derivative_F(m: FinslerModel, x, y):
    """dF/dx^i - N^j_i dF/dy^j, which vanishes identically."""
    xb, yb, single = _batch(m, x, y)
    Fj = m.F_jet_xy(xb, yb)
    n = m.dim
    F, Fx, Fy = Fj.val, Fj.grad[:n].T, Fj.grad[n:].T
    N = _connection(m, xb, yb)
    out = Fx - F[:, None] * np.einsum("pji,pj->pi", N, Fy)
    return _out(out, single)


def conformal_scale(m: FinslerModel, sigma) -> ConformalModel:
    """The model with F' = exp(sigma(x)) F."""
    return ConformalModel(m, sigma)


# --- validation ------------------------------------------------------------


def _assert_spd(g, x, y):
    try:
        np.linalg.cholesky(g)
    except np.linalg.LinAlgError:
        w = np.linalg.eigvalsh(g)
        bad = int(np.argmin(w.min(axis=1)))
        raise ModelValidityError(
            f"fundamental tensor not positive definite at x={x[bad].tolist()}, y={y[bad].tolist()}",
            sample={"x": x[bad].tolist(), "y": y[bad].tolist()},
        ) from None


@dataclass
class ValidationReport:
    valid: bool
    message: str
    samples: int
    min_eigenvalue: float = float("nan")
    max_b_norm: float | None = None
    offending: dict | None = None

    def raise_if_invalid(self):
        if not self.valid:
            raise ModelValidityError(self.message, self.offending)


def direction_fan(n: int, count: int = 8) -> np.ndarray:
    """Deterministic unit directions: a circle fan (n=2) or axis/diagonal set."""
    if n == 2:
        t = 2 * np.pi * np.arange(count) / count
        return np.stack([np.cos(t), np.sin(t)], axis=1)
    dirs = []
    for signs in itertools.product((-1.0, 0.0, 1.0), repeat=n):
        v = np.array(signs)
        if np.any(v):
            dirs.append(v / np.linalg.norm(v))
    return np.array(dirs)


def lattice(lo, hi, per_axis: int) -> np.ndarray:
    axes = [np.linspace(a, b, per_axis) for a, b in zip(lo, hi)]
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(lo))


def validate_model(m: FinslerModel, per_axis: int = 9, fan: int = 8) -> ValidationReport:
    """Check strong convexity on a deterministic lattice of (x, y) samples.

    x runs over a ``per_axis``-point grid of the domain (boundaries included)
    and y over :func:`direction_fan`.  The first violation found is reported.
    """
    xs = lattice(m.lo, m.hi, per_axis)
    ys = direction_fan(m.dim, fan)
    total = len(xs) * len(ys)
    # coefficient matrices first: a must be SPD, Randers b must be short
    inner = m
    while isinstance(inner, ConformalModel):
        inner = inner.base
    max_b = None
    try:
        if isinstance(inner, RiemannianModel):
            a = inner.a_matrix(xs)
            w = np.linalg.eigvalsh(a).min(axis=1)
            if np.any(w <= 0) or not np.all(np.isfinite(w)):
                bad = int(np.argmin(np.where(np.isfinite(w), w, -np.inf)))
                return ValidationReport(
                    False,
                    f"metric a not positive definite at x={xs[bad].tolist()} (min eigenvalue {w[bad]:.6g})",
                    total,
                    float(w[bad]),
                    offending={"x": xs[bad].tolist()},
                )
        if isinstance(inner, RandersModel):
            bn = inner.b_norm(xs)
            max_b = float(bn.max())
            if max_b > 1.0 - RANDERS_MARGIN:
                bad = int(np.argmax(bn))
                return ValidationReport(
                    False,
                    f"Randers one-form too long: ||b||_a = {bn[bad]:.6g} >= 1 at x={xs[bad].tolist()}",
                    total,
                    max_b_norm=max_b,
                    offending={"x": xs[bad].tolist(), "b_norm": float(bn[bad])},
                )
        X = np.repeat(xs, len(ys), axis=0)
        Y = np.tile(ys, (len(xs), 1))
        g = m.g(X, Y)
        w = np.linalg.eigvalsh(g).min(axis=1)
    except (J.DomainError, np.linalg.LinAlgError, FloatingPointError) as exc:
        return ValidationReport(False, f"coefficient evaluation failed: {exc}", total)
    if not np.all(np.isfinite(w)) or np.any(w <= 0):
        bad = int(np.argmin(np.where(np.isfinite(w), w, -np.inf)))
        return ValidationReport(
            False,
            f"fundamental tensor not positive definite at x={X[bad].tolist()}, y={Y[bad].tolist()}",
            total,
            float(w[bad]),
            max_b,
            {"x": X[bad].tolist(), "y": Y[bad].tolist()},
        )
    return ValidationReport(True, "ok", total, float(w.min()), max_b)
