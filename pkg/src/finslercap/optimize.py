"""Projected gradient descent on a box with Armijo backtracking.

Trial steps use the Barzilai-Borwein (spectral) step length; every accepted
step satisfies the Armijo condition, so the objective history is monotone.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np


@dataclass
class PGResult:
    x: np.ndarray
    fun: float
    iterations: int
    converged: bool
    residual: float
    message: str
    history: list = field(default_factory=list)


def projected_residual(x, g, lower, upper) -> float:
    """Sup-norm of P(x - g) - x, zero exactly at box-constrained stationary points."""
    return float(np.max(np.abs(np.clip(x - g, lower, upper) - x), initial=0.0))


def projected_gradient(
    fun: Callable[[np.ndarray], float],
    grad: Callable[[np.ndarray], np.ndarray],
    x0: np.ndarray,
    lower: float = 0.0,
    upper: float = 1.0,
    max_iter: int = 20000,
    tol: float = 1e-8,
    armijo: float = 1e-4,
    step_bounds: tuple[float, float] = (1e-12, 1e12),
    window: int = 10,
    callback=None,
) -> PGResult:
    """Minimize ``fun`` over the box ``lower <= x <= upper``.

    Stops when the relative decrease of the objective over the last
    ``window`` accepted steps falls below ``tol``, when the projected step
    vanishes, or after ``max_iter`` iterations (``converged=False``).  A
    window is used because spectral steps alternate between short and long
    moves; a single short step says little about convergence.
    """
    x = np.clip(np.asarray(x0, dtype=float), lower, upper)
    f = float(fun(x))
    g = grad(x)
    history = [f]
    r0 = projected_residual(x, g, lower, upper)
    alpha = 1.0 / r0 if r0 > 0 else 1.0
    alpha = min(max(alpha, step_bounds[0]), step_bounds[1])
    message = "maximum number of iterations reached"
    converged = False
    it = 0
    while it < max_iter:
        d = np.clip(x - alpha * g, lower, upper) - x
        gd = float(np.dot(g, d))
        if not np.any(d) or gd >= 0.0:
            converged, message = True, "projected step vanished"
            break
        t = 1.0
        while True:
            xn = x + t * d
            fn = float(fun(xn))
            if fn <= f + armijo * t * gd:
                break
            t *= 0.5
            if t < 1e-30:
                break
        if not fn <= f:
            converged, message = True, "line search failed to decrease the objective"
            break
        it += 1
        gn = grad(xn)
        s = xn - x
        yv = gn - g
        sy = float(np.dot(s, yv))
        alpha = float(np.dot(s, s)) / sy if sy > 0 else step_bounds[1]
        alpha = min(max(alpha, step_bounds[0]), step_bounds[1])
        x, f, g = xn, fn, gn
        history.append(f)
        if callback is not None:
            callback(it, x, f)
        ref = history[max(0, len(history) - 1 - window)]
        if len(history) > window and (ref - f) / max(abs(f), np.finfo(float).tiny) < tol:
            converged, message = True, "relative decrease below tolerance"
            break
    return PGResult(x, f, it, converged, projected_residual(x, g, lower, upper), message, history)
