"""Discrete capacity energy of condensers and its minimization.

An admissible function u is sampled on the nodes of a uniform grid over an
axis-aligned box.  Each grid cell contributes one sample of the integrand at
its center::

    I(u) = sum_cells vol(cell) sum_k w_k D(x_c, phi_k) (g^ij(x_c, y_k) du_i du_j)^(n/2)

where (phi_k, w_k, D) is the fiber quadrature of the sphere bundle.  The
gradient du of the multilinear interpolant is averaged over the 2^n Gauss
points of the cell (``stencil="gauss"``, default) or taken at the center only
(``stencil="center"``, the average of the one-sided differences).  The fiber data
only depends on the model and the cell centers, so it is computed once and
cached; the energy is then a convex function of the node values.
"""

from __future__ import annotations

import enum
import itertools
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .expr import ScalarField
from .finsler import FinslerModel, ModelValidityError, conformal_scale, validate_model
from .optimize import projected_gradient, projected_residual
from .sphere_bundle import _density, fiber_rule, sphere_point

log = logging.getLogger(__name__)

#: cells per work unit; fixed so reductions do not depend on the worker count
CHUNK = 4096


class GridError(ValueError):
    """The condenser cannot be represented on the requested grid."""


class NodeKind(enum.IntEnum):
    FREE = 0
    FIXED_ONE = 1
    FIXED_ZERO = 2


# --- shapes ----------------------------------------------------------------


@dataclass(frozen=True)
class Ball:
    center: tuple
    radius: float

    def distance(self, pts):
        c = np.asarray(self.center, dtype=float)
        return np.maximum(np.linalg.norm(pts - c, axis=-1) - self.radius, 0.0)

    def depth(self, pts):
        """Distance to the boundary for points inside, 0 outside."""
        c = np.asarray(self.center, dtype=float)
        return np.maximum(self.radius - np.linalg.norm(pts - c, axis=-1), 0.0)

    def contains(self, pts, tol=1e-12):
        c = np.asarray(self.center, dtype=float)
        return np.linalg.norm(pts - c, axis=-1) <= self.radius + tol

    def bounds(self):
        c = np.asarray(self.center, dtype=float)
        return c - self.radius, c + self.radius

    def extreme_points(self):
        c = np.asarray(self.center, dtype=float)
        n = len(c)
        return np.concatenate([c + self.radius * np.eye(n), c - self.radius * np.eye(n)])


@dataclass(frozen=True)
class Box:
    lo: tuple
    hi: tuple

    def __post_init__(self):
        if np.any(np.asarray(self.hi, float) <= np.asarray(self.lo, float)):
            raise ValueError("box must have hi > lo on every axis")

    def distance(self, pts):
        lo, hi = np.asarray(self.lo, float), np.asarray(self.hi, float)
        d = np.maximum(np.maximum(lo - pts, pts - hi), 0.0)
        return np.linalg.norm(d, axis=-1)

    def depth(self, pts):
        lo, hi = np.asarray(self.lo, float), np.asarray(self.hi, float)
        return np.maximum(np.minimum(pts - lo, hi - pts).min(axis=-1), 0.0)

    def contains(self, pts, tol=1e-12):
        lo, hi = np.asarray(self.lo, float), np.asarray(self.hi, float)
        return np.all((pts >= lo - tol) & (pts <= hi + tol), axis=-1)

    def bounds(self):
        return np.asarray(self.lo, float), np.asarray(self.hi, float)

    def extreme_points(self):
        lo, hi = self.bounds()
        return np.array([np.where(c, hi, lo) for c in itertools.product((0, 1), repeat=len(lo))])


@dataclass(frozen=True)
class Capsule:
    """Segment [a, b] thickened by ``radius``; endpoints are stored in sorted order."""

    a: tuple
    b: tuple
    radius: float

    def __post_init__(self):
        a, b = tuple(map(float, self.a)), tuple(map(float, self.b))
        if b < a:
            a, b = b, a
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    def _segment_distance(self, pts):
        a, b = np.asarray(self.a), np.asarray(self.b)
        ab = b - a
        L2 = float(ab @ ab)
        t = np.clip((pts - a) @ ab / L2, 0.0, 1.0) if L2 > 0 else np.zeros(pts.shape[:-1])
        return np.linalg.norm(pts - (a + t[..., None] * ab), axis=-1)

    def distance(self, pts):
        return np.maximum(self._segment_distance(pts) - self.radius, 0.0)

    def depth(self, pts):
        return np.maximum(self.radius - self._segment_distance(pts), 0.0)

    def contains(self, pts, tol=1e-12):
        return self._segment_distance(pts) <= self.radius + tol

    def bounds(self):
        a, b = np.asarray(self.a), np.asarray(self.b)
        return np.minimum(a, b) - self.radius, np.maximum(a, b) + self.radius

    def extreme_points(self):
        return np.concatenate([Ball(self.a, self.radius).extreme_points(), Ball(self.b, self.radius).extreme_points()])


Shape = Ball | Box | Capsule


@dataclass(frozen=True)
class CondenserSpec:
    """Compact set ``inner`` inside the truncation region.

    The region is the box ``outer`` intersected with ``support`` when given;
    admissible functions vanish on and outside its boundary.
    """

    inner: Shape
    outer: Box
    support: Shape | None = None

    def check(self, m: FinslerModel | None = None):
        lo, hi = self.outer.bounds()
        ilo, ihi = self.inner.bounds()
        if np.any(ilo <= lo) or np.any(ihi >= hi):
            raise GridError("condenser set is not strictly inside the outer box")
        if self.support is not None and np.any(self.support.depth(self.inner.extreme_points()) <= 0):
            raise GridError("condenser set is not strictly inside the support region")
        if m is not None:
            if len(lo) != m.dim:
                raise GridError(f"condenser lives in dimension {len(lo)}, model in {m.dim}")
            if np.any(lo < m.lo) or np.any(hi > m.hi):
                raise GridError("outer box is not contained in the model's chart domain")

    def zero_depth(self, pts):
        d = self.outer.depth(pts)
        if self.support is not None:
            d = np.minimum(d, self.support.depth(pts))
        return d


# --- grid functions --------------------------------------------------------


@dataclass
class GridFunction:
    lo: np.ndarray
    hi: np.ndarray
    values: np.ndarray  # node values, shape = resolution per axis
    mask: np.ndarray  # NodeKind codes, same shape

    @property
    def shape(self):
        return self.values.shape

    @property
    def dim(self):
        return self.values.ndim

    @property
    def spacing(self):
        return (self.hi - self.lo) / (np.array(self.shape) - 1)

    def axes(self):
        return [np.linspace(a, b, k) for a, b, k in zip(self.lo, self.hi, self.shape)]

    def nodes(self):
        return np.stack(np.meshgrid(*self.axes(), indexing="ij"), axis=-1)

    @property
    def free(self):
        return self.mask == NodeKind.FREE

    def with_values(self, values):
        return replace(self, values=np.asarray(values, dtype=float).reshape(self.shape))

    def check(self):
        v, k = self.values, self.mask
        if np.any(v[k == NodeKind.FIXED_ONE] != 1.0) or np.any(v[k == NodeKind.FIXED_ZERO] != 0.0):
            raise ValueError("fixed node values violated")
        if np.any(v < 0.0) or np.any(v > 1.0):
            raise ValueError("node values outside [0, 1]")


def _resolution(res, n):
    res = (int(res),) * n if np.ndim(res) == 0 else tuple(int(r) for r in res)
    if len(res) != n or min(res) < 8:
        raise GridError("resolution must be at least 8 nodes per axis")
    return res


def make_grid(m: FinslerModel | None, spec: CondenserSpec, resolution, init: str = "ramp") -> GridFunction:
    """Node masks and an initial admissible function for ``spec``.

    ``init="ramp"`` interpolates linearly in the distance field between the
    condenser and the zero region; ``init="half"`` sets every free node to 0.5.
    """
    spec.check(m)
    lo, hi = (np.asarray(b, dtype=float) for b in spec.outer.bounds())
    res = _resolution(resolution, len(lo))
    grid = GridFunction(lo, hi, np.zeros(res), np.zeros(res, dtype=np.int8))
    pts = grid.nodes()
    depth = spec.zero_depth(pts)
    boundary = np.zeros(res, dtype=bool)
    for ax in range(len(res)):
        idx = [slice(None)] * len(res)
        idx[ax] = 0
        boundary[tuple(idx)] = True
        idx[ax] = -1
        boundary[tuple(idx)] = True
    zero = boundary | (depth <= 1e-12)
    one = spec.inner.contains(pts)
    if not one.any():
        raise GridError("no interior node: the condenser set contains no grid node at this resolution")
    if np.any(one & zero):
        raise GridError("condenser set touches the zero region")
    mask = np.full(res, NodeKind.FREE, dtype=np.int8)
    mask[zero] = NodeKind.FIXED_ZERO
    mask[one] = NodeKind.FIXED_ONE
    if not np.any(mask == NodeKind.FREE):
        raise GridError("no free node at this resolution")
    if init == "ramp":
        d_in = spec.inner.distance(pts)
        u = np.clip(depth / np.maximum(depth + d_in, 1e-300), 0.0, 1.0)
    elif init == "half":
        u = np.full(res, 0.5)
    else:
        raise ValueError(f"unknown initialization {init!r}")
    u[mask == NodeKind.FIXED_ZERO] = 0.0
    u[mask == NodeKind.FIXED_ONE] = 1.0
    return GridFunction(lo, hi, u, mask)


# --- discrete energy -------------------------------------------------------


def _corner_offsets(n):
    return np.array(list(itertools.product((0, 1), repeat=n)))


def cell_stencils(n: int, h, kind: str = "gauss"):
    """Gradient stencils of the multilinear interpolant inside one cell.

    Returns ``(pairs, weights, wq)``.  ``pairs[ax]`` lists corner index pairs
    ``(lo, hi)`` differing along axis ``ax``; ``weights[ax][q, j]`` is the
    coefficient of ``u[hi_j] - u[lo_j]`` in du/dx^ax at sample point q; ``wq``
    are the sample weights (sum 1).  ``"center"`` samples the cell center only
    (the average of the one-sided differences); ``"gauss"`` uses the 2^n-point
    tensor Gauss rule.
    """
    h = np.asarray(h, dtype=float)
    offs = [tuple(o) for o in _corner_offsets(n)]
    if kind == "center":
        pts = [np.full(n, 0.5)]
    elif kind == "gauss":
        a = 0.5 / math.sqrt(3.0)
        pts = [np.array(p) for p in itertools.product((0.5 - a, 0.5 + a), repeat=n)]
    else:
        raise ValueError(f"unknown stencil {kind!r}")
    pairs, weights = [], []
    for ax in range(n):
        lo_c = [o for o in offs if o[ax] == 0]
        pairs.append(np.array([(offs.index(o), offs.index(o[:ax] + (1,) + o[ax + 1 :])) for o in lo_c]))
        w = np.ones((len(pts), len(lo_c))) / h[ax]
        for q, p in enumerate(pts):
            for j, o in enumerate(lo_c):
                for b in range(n):
                    if b != ax:
                        w[q, j] *= p[b] if o[b] else 1.0 - p[b]
        weights.append(w)
    return pairs, weights, np.full(len(pts), 1.0 / len(pts))


class DiscreteEnergy:
    """Cached discretization of I(u, M) on a fixed grid.

    The model enters only through per-cell fiber data sampled at the cell
    center x_c: ``A[c, k] = g^ij(x_c, y_k)`` and
    ``W[c, k] = vol * w_k * D(x_c, phi_k)``.  The gradient of the multilinear
    interpolant of u is sampled at the stencil points of each cell.  Cells
    whose corners are all fixed to the same value never contribute and are
    dropped.
    """

    def __init__(self, m: FinslerModel, grid: GridFunction, quad_order: int = 16, threads: int = 1, stencil: str = "gauss"):
        n = grid.dim
        if n not in (2, 3):
            raise ValueError("capacity computations support n = 2 and n = 3 only")
        if m.dim != n:
            raise ValueError("grid and model dimensions differ")
        self.model = m
        self.n = n
        self.shape = grid.shape
        self.mask = grid.mask.copy()
        self.free = (grid.mask == NodeKind.FREE).ravel()
        self.quad_order = quad_order
        self.threads = max(1, int(threads))
        self.stencil_kind = stencil
        h = grid.spacing
        self.cell_volume = float(np.prod(h))

        offs = _corner_offsets(n)
        cell_shape = tuple(s - 1 for s in grid.shape)
        base = np.stack(np.meshgrid(*[np.arange(s) for s in cell_shape], indexing="ij"), axis=-1).reshape(-1, n)
        corners = np.stack([np.ravel_multi_index(tuple((base + o).T), grid.shape) for o in offs], axis=1)
        kinds = grid.mask.ravel()[corners]
        dead = np.all(kinds == NodeKind.FIXED_ONE, axis=1) | np.all(kinds == NodeKind.FIXED_ZERO, axis=1)
        self.corners = corners[~dead]
        self.centers = grid.lo + (base[~dead] + 0.5) * h
        self.pairs, self.diff_weights, self.stencil_weights = cell_stencils(n, h, stencil)

        phi, w = fiber_rule(n, quad_order)
        self.fiber_weights = w
        self.A, self.W = self._fiber_cache(phi, w)
        # n = 2: the integrand is linear in q, so the fiber sum contracts exactly
        self.M = np.einsum("ck,ckij->cij", self.W, self.A) if n == 2 else None

    @property
    def ncells(self):
        return len(self.corners)

    def _chunks(self):
        return [slice(i, min(i + CHUNK, self.ncells)) for i in range(0, self.ncells, CHUNK)]

    def _map(self, fn):
        chunks = self._chunks()
        if self.threads == 1 or len(chunks) <= 1:
            return [fn(c) for c in chunks]
        with ThreadPoolExecutor(self.threads) as pool:
            return list(pool.map(fn, chunks))

    def _fiber_cache(self, phi, w):
        m, n, K = self.model, self.n, len(w)
        yhat, _ = sphere_point(phi, n)

        def work(sl):
            xc = self.centers[sl]
            X = np.repeat(xc, K, axis=0)
            Y = np.tile(yhat, (len(xc), 1))
            g = m.g(X, Y)
            try:
                np.linalg.cholesky(g)
            except np.linalg.LinAlgError:
                raise ModelValidityError("fundamental tensor not positive definite inside the condenser box") from None
            A = np.linalg.inv(g).reshape(len(xc), K, n, n)
            D = _density(m, X, np.tile(phi, (len(xc), 1))).reshape(len(xc), K)
            return A, self.cell_volume * w[None, :] * D

        parts = self._map(work)
        if not parts:
            return np.zeros((0, K, n, n)), np.zeros((0, K))
        return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])

    def cell_gradients(self, u):
        """Gradients at the stencil points, shape (points per cell, cells, n)."""
        U = np.asarray(u, dtype=float).ravel()[self.corners]
        cols = []
        for pr, w in zip(self.pairs, self.diff_weights):
            dU = U[:, pr[:, 1]] - U[:, pr[:, 0]]  # exact zero for constant u
            cols.append(np.einsum("cj,qj->qc", dU, w))
        return np.stack(cols, axis=-1)

    def _q(self, du, sl):
        """Fiber quadratic forms g^ij du_i du_j per stencil point, cell and fiber node."""
        Adu = np.einsum("ckij,qcj->qcki", self.A[sl], du[:, sl])
        return np.maximum(np.einsum("qcki,qci->qck", Adu, du[:, sl]), 0.0), Adu

    def integrand(self, u):
        """Per (cell, fiber node) contributions, shape (cells, K)."""
        du = self.cell_gradients(u)
        p = 0.5 * self.n
        out = []
        for sl in self._chunks():
            q, _ = self._q(du, sl)
            out.append(np.einsum("q,qck->ck", self.stencil_weights, self.W[sl] * q**p))
        return np.concatenate(out) if out else np.zeros((0, len(self.fiber_weights)))

    def value(self, u) -> float:
        du = self.cell_gradients(u)
        wq = self.stencil_weights

        def work(sl):
            if self.n == 2:
                Mdu = np.einsum("cij,qcj->qci", self.M[sl], du[:, sl])
                return float(np.einsum("q,qci,qci->", wq, Mdu, du[:, sl]))
            q, _ = self._q(du, sl)
            return float(np.einsum("q,qck->", wq, self.W[sl] * q * np.sqrt(q)))

        return float(sum(self._map(work)))

    def gradient(self, u):
        """d I / d u at every node; zero at fixed nodes."""
        du = self.cell_gradients(u)
        n, wq = self.n, self.stencil_weights

        def work(sl):
            if n == 2:
                G = 2.0 * np.einsum("cij,qcj->qci", self.M[sl], du[:, sl])
            else:
                q, Adu = self._q(du, sl)
                G = np.einsum("qck,qcki->qci", n * self.W[sl] * np.sqrt(q), Adu)
            # chain rule through the difference stencils
            dU = np.zeros((G.shape[1], 2**n))
            for ax, (pr, w) in enumerate(zip(self.pairs, self.diff_weights)):
                t = np.einsum("q,qc,qj->cj", wq, G[:, :, ax], w)
                dU[:, pr[:, 1]] += t
                dU[:, pr[:, 0]] -= t
            return dU

        parts = self._map(work)
        dU = np.concatenate(parts) if parts else np.zeros((0, 2**n))
        node = np.bincount(self.corners.ravel(), weights=dU.ravel(), minlength=int(np.prod(self.shape)))
        node[~self.free] = 0.0
        return node.reshape(self.shape)


def energy(m: FinslerModel, u: GridFunction, quad_order: int = 16, threads: int = 1, stencil: str = "gauss") -> float:
    """I(u, M) of a grid function."""
    return DiscreteEnergy(m, u, quad_order, threads, stencil).value(u.values)


def energy_gradient(m: FinslerModel, u: GridFunction, quad_order: int = 16, threads: int = 1, stencil: str = "gauss"):
    """Exact gradient of the discrete energy with respect to the node values."""
    return DiscreteEnergy(m, u, quad_order, threads, stencil).gradient(u.values)


# --- minimization ----------------------------------------------------------


@dataclass(frozen=True)
class CapacityOptions:
    resolution: int | tuple = 64
    quad_order: int = 16
    max_iter: int = 20000
    tol: float = 1e-8
    init: str = "ramp"
    threads: int = 1
    stencil: str = "gauss"


@dataclass
class CapacityResult:
    value: float
    iterations: int
    residual: float
    converged: bool
    message: str
    history: list
    grid: GridFunction
    metadata: dict = field(default_factory=dict)


def minimize_capacity(m: FinslerModel, spec: CondenserSpec, opts: CapacityOptions | None = None, **overrides) -> CapacityResult:
    """Estimate Cap_M(C) by minimizing the discrete energy over admissible u.

    The energy is convex in the node values, so projected gradient descent
    onto ``0 <= u <= 1`` (fixed nodes held) reaches the discrete minimum.
    """
    opts = replace(opts or CapacityOptions(), **overrides)
    validate_model(m).raise_if_invalid()
    grid = make_grid(m, spec, opts.resolution, opts.init)
    t0 = time.perf_counter()
    E = DiscreteEnergy(m, grid, opts.quad_order, opts.threads, opts.stencil)
    t_cache = time.perf_counter() - t0
    return _minimize(E, grid, opts, t_cache)


def _minimize(E: DiscreteEnergy, grid: GridFunction, opts: CapacityOptions, t_cache: float = 0.0) -> CapacityResult:
    free = E.free
    full = grid.values.ravel().copy()

    def expand(z):
        v = full.copy()
        v[free] = z
        return v

    t0 = time.perf_counter()
    res = projected_gradient(
        lambda z: E.value(expand(z)),
        lambda z: E.gradient(expand(z)).ravel()[free],
        full[free],
        0.0,
        1.0,
        max_iter=opts.max_iter,
        tol=opts.tol,
    )
    t_opt = time.perf_counter() - t0
    if not res.converged:
        log.warning("capacity minimization did not converge after %d iterations", res.iterations)
    final = grid.with_values(expand(res.x))
    meta = {
        "dimension": E.n,
        "resolution": list(grid.shape),
        "quad_order": E.quad_order,
        "fiber_nodes": len(E.fiber_weights),
        "active_cells": E.ncells,
        "free_nodes": int(free.sum()),
        "box_lo": grid.lo.tolist(),
        "box_hi": grid.hi.tolist(),
        "spacing": grid.spacing.tolist(),
        "init": opts.init,
        "stencil": E.stencil_kind,
        "tol": opts.tol,
        "max_iter": opts.max_iter,
        "stop_reason": res.message,
        "seconds_cache": t_cache,
        "seconds_optimize": t_opt,
    }
    return CapacityResult(res.fun, res.iterations, res.residual, res.converged, res.message, res.history, final, meta)


@dataclass
class ConformalReport:
    base_value: float
    scaled_value: float
    rel_diff: float
    integrand_max_rel_err: float
    energy_rel_diff_same_u: float
    passed: bool
    base: CapacityResult
    scaled: CapacityResult
    capacity_tol: float = 1e-8
    integrand_tol: float = 1e-12


def _max_rel(a, b):
    a, b = np.asarray(a), np.asarray(b)
    scale = np.maximum(np.abs(b), np.finfo(float).tiny)
    keep = np.abs(b) > 0
    if not keep.any():
        return float(np.max(np.abs(a - b), initial=0.0))
    return float(np.max(np.abs(a - b)[keep] / scale[keep]))


def conformal_invariance_check(
    m: FinslerModel,
    sigma: ScalarField | str,
    spec: CondenserSpec,
    opts: CapacityOptions | None = None,
    capacity_tol: float = 1e-8,
    integrand_tol: float = 1e-12,
    **overrides,
) -> ConformalReport:
    """Compare capacities of ``m`` and ``exp(sigma) m`` on one discretization."""
    opts = replace(opts or CapacityOptions(), **overrides)
    m2 = conformal_scale(m, sigma)
    validate_model(m).raise_if_invalid()
    validate_model(m2).raise_if_invalid()
    grid = make_grid(m, spec, opts.resolution, opts.init)
    E1 = DiscreteEnergy(m, grid, opts.quad_order, opts.threads, opts.stencil)
    E2 = DiscreteEnergy(m2, grid, opts.quad_order, opts.threads, opts.stencil)
    r1 = _minimize(E1, grid, opts)
    r2 = _minimize(E2, grid, opts)
    u = r1.grid.values
    pointwise = _max_rel(E2.integrand(u), E1.integrand(u))
    same_u = abs(E2.value(u) - E1.value(u)) / max(abs(E1.value(u)), np.finfo(float).tiny)
    rel = abs(r2.value - r1.value) / max(abs(r1.value), np.finfo(float).tiny)
    passed = rel <= capacity_tol and pointwise <= integrand_tol
    return ConformalReport(r1.value, r2.value, rel, pointwise, same_u, passed, r1, r2, capacity_tol, integrand_tol)


@dataclass
class MuResult:
    value: float
    radius: float
    table: list  # dicts with radius, value, converged, iterations
    upper_bound: bool = True


def mu_upper_bound(
    m: FinslerModel,
    x1: Sequence[float],
    x2: Sequence[float],
    radii: Sequence[float],
    outer: Box,
    support: Shape | None = None,
    opts: CapacityOptions | None = None,
    **overrides,
) -> MuResult:
    """Upper bound on mu_M(x1, x2): least capacity over capsules joining x1 and x2.

    Only the one-parameter family of capsules (segment [x1, x2] thickened by
    each radius) is searched, so the value bounds the infimum over all
    continua from above.  Ties within 1e-12 resolve to the smaller radius.
    """
    opts = replace(opts or CapacityOptions(), **overrides)
    x1, x2 = np.asarray(x1, float), np.asarray(x2, float)
    if np.array_equal(x1, x2):
        raise ValueError("x1 and x2 must differ")
    if not radii:
        raise ValueError("radii list is empty")
    for p in (x1, x2):
        if np.any(p <= m.lo) or np.any(p >= m.hi):
            raise ValueError("endpoints must be interior to the chart domain")
    validate_model(m).raise_if_invalid()
    table = []
    for r in sorted(float(r) for r in radii):
        spec = CondenserSpec(Capsule(tuple(x1), tuple(x2), r), outer, support)
        try:
            spec.check(m)
        except GridError as exc:
            raise GridError(f"capsule of radius {r} escapes the outer region: {exc}") from None
        res = minimize_capacity(m, spec, opts)
        table.append({"radius": r, "value": res.value, "converged": res.converged, "iterations": res.iterations})
    best = table[0]
    for row in table[1:]:
        if row["value"] < best["value"] - 1e-12 * max(1.0, abs(best["value"])):
            best = row
    return MuResult(best["value"], best["radius"], table)


def support_sensitivity(m: FinslerModel, spec: CondenserSpec, scales: Sequence[float], opts: CapacityOptions | None = None):
    """Capacity as the truncation region is scaled about the condenser's center."""
    lo, hi = spec.inner.bounds()
    c = 0.5 * (lo + hi)
    rows = []
    for s in scales:
        olo, ohi = spec.outer.bounds()
        outer = Box(tuple(c + s * (olo - c)), tuple(c + s * (ohi - c)))
        support = spec.support
        if isinstance(support, Ball):
            support = Ball(tuple(c + s * (np.asarray(support.center) - c)), s * support.radius)
        res = minimize_capacity(m, CondenserSpec(spec.inner, outer, support), opts)
        rows.append({"scale": float(s), "value": res.value, "converged": res.converged})
    return rows
