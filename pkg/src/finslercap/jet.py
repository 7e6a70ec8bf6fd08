"""Second-order forward-mode jets (truncated multivariate Taylor expansions).

A :class:`Jet` carries a value, a gradient and a Hessian with respect to ``k``
seeded variables.  All three are numpy arrays with the batch axis last, so a
single jet evaluates a whole batch of points at once::

    val  : (P,)
    grad : (k, P)
    hess : (k, k, P)

Arithmetic between jets, numpy arrays and Python scalars follows the usual
chain rules; everything up to second order is exact.
"""

from __future__ import annotations

import numpy as np


class DomainError(ArithmeticError):
    """Raised when an elementary function is evaluated outside its domain."""


class Jet:
    __slots__ = ("val", "grad", "hess")
    __array_priority__ = 1000  # make ndarray <op> Jet defer to Jet

    def __init__(self, val, grad, hess):
        self.val = val
        self.grad = grad
        self.hess = hess

    @classmethod
    def variables(cls, values, batch_shape=None):
        """Seed one jet per entry of ``values`` (each a scalar or a (P,) array)."""
        values = [np.asarray(v, dtype=float) for v in values]
        if batch_shape is None:
            batch_shape = np.broadcast_shapes(*(v.shape for v in values))
        k = len(values)
        out = []
        for i, v in enumerate(values):
            val = np.broadcast_to(v, batch_shape).astype(float)
            grad = np.zeros((k,) + tuple(batch_shape))
            grad[i] = 1.0
            hess = np.zeros((k, k) + tuple(batch_shape))
            out.append(cls(val, grad, hess))
        return out

    @property
    def nvars(self) -> int:
        return self.grad.shape[0]

    # chain rule for a scalar function f with f(a), f'(a), f''(a) given
    def _apply(self, f0, f1, f2) -> "Jet":
        g = self.grad
        hess = f1 * self.hess + f2 * (g[:, None] * g[None, :])
        return Jet(f0, f1 * g, hess)

    def __neg__(self):
        return Jet(-self.val, -self.grad, -self.hess)

    def __pos__(self):
        return self

    def __add__(self, other):
        if isinstance(other, Jet):
            return Jet(self.val + other.val, self.grad + other.grad, self.hess + other.hess)
        return Jet(self.val + other, self.grad, self.hess)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Jet):
            return Jet(self.val - other.val, self.grad - other.grad, self.hess - other.hess)
        return Jet(self.val - other, self.grad, self.hess)

    def __rsub__(self, other):
        return Jet(other - self.val, -self.grad, -self.hess)

    def __mul__(self, other):
        if isinstance(other, Jet):
            a, b = self, other
            ga, gb = a.grad, b.grad
            cross = ga[:, None] * gb[None, :]
            hess = a.val * b.hess + b.val * a.hess + cross + np.swapaxes(cross, 0, 1)
            return Jet(a.val * b.val, a.val * gb + b.val * ga, hess)
        return Jet(self.val * other, self.grad * other, self.hess * other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * reciprocal(other)
        other = np.asarray(other, dtype=float)
        if np.any(other == 0):
            raise DomainError("division by zero")
        return self * (1.0 / other)

    def __rtruediv__(self, other):
        return other * reciprocal(self)

    def __pow__(self, c):
        return power(self, c)

    def __repr__(self):
        return f"Jet(nvars={self.nvars}, val={self.val!r})"


def value(a):
    return a.val if isinstance(a, Jet) else a


def reciprocal(a):
    v = value(a)
    if np.any(np.asarray(v) == 0):
        raise DomainError("division by zero")
    if not isinstance(a, Jet):
        return 1.0 / v
    r = 1.0 / v
    return a._apply(r, -r * r, 2.0 * r * r * r)


def divide(a, b):
    if isinstance(a, Jet) or isinstance(b, Jet):
        return a * reciprocal(b)
    b = np.asarray(b, dtype=float)
    if np.any(b == 0):
        raise DomainError("division by zero")
    return a / b


def int_power(a, k: int):
    v = value(a)
    if k < 0 and np.any(np.asarray(v) == 0):
        raise DomainError("division by zero")
    if not isinstance(a, Jet):
        return np.power(np.asarray(v, dtype=float), k) if k >= 0 else 1.0 / np.power(np.asarray(v, dtype=float), -k)
    if k == 0:
        return Jet(np.ones_like(v), np.zeros_like(a.grad), np.zeros_like(a.hess))
    if k == 1:
        return a
    if k == 2:
        return a * a
    f0 = v**k if k > 0 else 1.0 / v ** (-k)
    f1 = k * _ipow(v, k - 1)
    f2 = k * (k - 1) * _ipow(v, k - 2)
    return a._apply(f0, f1, f2)


def _ipow(v, k):
    return v**k if k >= 0 else 1.0 / v ** (-k)


def power(a, c):
    """``a ** c`` for a constant exponent ``c``.

    Integer exponents work for any base; other exponents require a > 0.
    """
    c = float(c)
    if c.is_integer():
        return int_power(a, int(c))
    v = value(a)
    if np.any(np.asarray(v) <= 0):
        raise DomainError("non-integer power of a non-positive base")
    if not isinstance(a, Jet):
        return np.power(v, c)
    return a._apply(v**c, c * v ** (c - 1), c * (c - 1) * v ** (c - 2))


def sin(a):
    v = value(a)
    s = np.sin(v)
    if not isinstance(a, Jet):
        return s
    return a._apply(s, np.cos(v), -s)


def cos(a):
    v = value(a)
    c = np.cos(v)
    if not isinstance(a, Jet):
        return c
    return a._apply(c, -np.sin(v), -c)


def exp(a):
    e = np.exp(value(a))
    if not isinstance(a, Jet):
        return e
    return a._apply(e, e, e)


def log(a):
    v = value(a)
    if np.any(np.asarray(v) <= 0):
        raise DomainError("log of a non-positive argument")
    if not isinstance(a, Jet):
        return np.log(v)
    r = 1.0 / v
    return a._apply(np.log(v), r, -r * r)


def sqrt(a):
    v = value(a)
    if isinstance(a, Jet):
        if np.any(np.asarray(v) <= 0):
            raise DomainError("sqrt of a non-positive argument")
        s = np.sqrt(v)
        return a._apply(s, 0.5 / s, -0.25 / (s * v))
    if np.any(np.asarray(v) < 0):
        raise DomainError("sqrt of a negative argument")
    return np.sqrt(v)


def tanh(a):
    v = value(a)
    t = np.tanh(v)
    if not isinstance(a, Jet):
        return t
    d = 1.0 - t * t
    return a._apply(t, d, -2.0 * t * d)
