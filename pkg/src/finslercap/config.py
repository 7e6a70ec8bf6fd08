"""JSON run configurations: parsing, validation and object construction.

Every validation failure raises :class:`ConfigError` carrying the dotted path
of the offending field (``model.a[0][1]``, ``condenser.inner.radius``, ...).
"""

from __future__ import annotations

import json
import math
import sys
from dataclasses import dataclass, replace
from typing import Any

from .capacity import Ball, Box, CapacityOptions, Capsule, CondenserSpec
from .expr import ExprSyntaxError, ScalarField, parse
from .finsler import ConformalModel, FinslerModel, RandersModel, RiemannianModel

MAX_RESOLUTION = 1024
MAX_QUAD_ORDER = 256
FAMILIES = ("riemannian", "randers", "conformal")


class ConfigError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


def load(source) -> dict:
    """Read a config from a path, ``"-"`` (standard input) or an open file."""
    try:
        if hasattr(source, "read"):
            text = source.read()
        elif str(source) == "-":
            text = sys.stdin.read()
        else:
            with open(source, encoding="utf-8") as fh:
                text = fh.read()
    except OSError as exc:
        raise ConfigError("", f"cannot read config: {exc}") from None
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("", f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    if not isinstance(cfg, dict):
        raise ConfigError("", "top level must be a JSON object")
    return cfg


# --- typed accessors -------------------------------------------------------


def _child(path, key):
    return f"{path}.{key}" if path else str(key)


def _req(block: dict, key: str, path: str):
    if not isinstance(block, dict):
        raise ConfigError(path, "expected an object")
    if key not in block:
        raise ConfigError(_child(path, key), "missing required field")
    return block[key]


def _block(cfg: dict, key: str, path: str = "", required=True):
    if key not in cfg:
        if required:
            raise ConfigError(_child(path, key), "missing required block")
        return None
    v = cfg[key]
    if not isinstance(v, dict):
        raise ConfigError(_child(path, key), "expected an object")
    return v


def _number(v, path, positive=False) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ConfigError(path, f"expected a finite number, got {v!r}")
    if positive and v <= 0:
        raise ConfigError(path, "must be positive")
    return float(v)


def _int(v, path, lo=None, hi=None) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(path, f"expected an integer, got {v!r}")
    if (lo is not None and v < lo) or (hi is not None and v > hi):
        raise ConfigError(path, f"must lie in [{lo}, {hi}]")
    return v


def _vector(v, path, n) -> tuple:
    if not isinstance(v, list) or len(v) != n:
        raise ConfigError(path, f"expected a list of {n} numbers")
    return tuple(_number(c, f"{path}[{i}]") for i, c in enumerate(v))


def _expr(v, path, n) -> ScalarField:
    if isinstance(v, bool) or not isinstance(v, (str, int, float)):
        raise ConfigError(path, "expected an expression string or number")
    try:
        return parse(repr(float(v)) if not isinstance(v, str) else v, n)
    except ExprSyntaxError as exc:
        raise ConfigError(path, str(exc)) from None


# --- model -----------------------------------------------------------------


def build_model(block: dict, path: str = "model") -> FinslerModel:
    family = _req(block, "family", path)
    if family not in FAMILIES:
        raise ConfigError(_child(path, "family"), f"unknown family {family!r} (expected one of {', '.join(FAMILIES)})")
    if family == "conformal":
        base = _block(block, "base", path)
        inner = build_model(base, _child(path, "base"))
        sigma = _expr(_req(block, "sigma", path), _child(path, "sigma"), inner.dim)
        return ConformalModel(inner, sigma)
    n = _int(_req(block, "dimension", path), _child(path, "dimension"))
    if n not in (2, 3):
        raise ConfigError(_child(path, "dimension"), "dimension must be 2 or 3")
    dom = _block(block, "domain", path)
    lo = _vector(_req(dom, "lo", _child(path, "domain")), _child(path, "domain.lo"), n)
    hi = _vector(_req(dom, "hi", _child(path, "domain")), _child(path, "domain.hi"), n)
    if any(b <= a for a, b in zip(lo, hi)):
        raise ConfigError(_child(path, "domain"), "hi must exceed lo on every axis")
    a_raw = block.get("a")
    if a_raw is None:
        a_raw = [["1" if i == j else "0" for j in range(n)] for i in range(n)]
    if not isinstance(a_raw, list) or len(a_raw) != n or any(not isinstance(r, list) or len(r) != n for r in a_raw):
        raise ConfigError(_child(path, "a"), f"expected a {n}x{n} matrix of expressions")
    a = [[_expr(a_raw[i][j], f"{path}.a[{i}][{j}]", n) for j in range(n)] for i in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            if a[i][j].ast != a[j][i].ast:
                raise ConfigError(f"{path}.a[{j}][{i}]", "matrix a must be symmetric (entries differ as expressions)")
    if family == "riemannian":
        return RiemannianModel(a, lo, hi)
    b_raw = _req(block, "b", path)
    if not isinstance(b_raw, list) or len(b_raw) != n:
        raise ConfigError(_child(path, "b"), f"expected a list of {n} expressions")
    b = [_expr(c, f"{path}.b[{i}]", n) for i, c in enumerate(b_raw)]
    return RandersModel(a, b, lo, hi)


# --- condenser -------------------------------------------------------------


def build_shape(block, path: str, n: int):
    if not isinstance(block, dict):
        raise ConfigError(path, "expected an object")
    kind = _req(block, "shape", path)
    if kind in ("disk", "ball"):
        r = _number(_req(block, "radius", path), _child(path, "radius"), positive=True)
        return Ball(_vector(_req(block, "center", path), _child(path, "center"), n), r)
    if kind == "box":
        lo = _vector(_req(block, "lo", path), _child(path, "lo"), n)
        hi = _vector(_req(block, "hi", path), _child(path, "hi"), n)
        if any(b <= a for a, b in zip(lo, hi)):
            raise ConfigError(path, "hi must exceed lo on every axis")
        return Box(lo, hi)
    if kind == "capsule":
        r = _number(_req(block, "radius", path), _child(path, "radius"), positive=True)
        return Capsule(_vector(_req(block, "a", path), _child(path, "a"), n), _vector(_req(block, "b", path), _child(path, "b"), n), r)
    raise ConfigError(_child(path, "shape"), f"unknown shape {kind!r} (expected disk, ball, box or capsule)")


def build_outer(block, path, n) -> Box:
    if not isinstance(block, dict):
        raise ConfigError(path, "expected an object")
    lo = _vector(_req(block, "lo", path), _child(path, "lo"), n)
    hi = _vector(_req(block, "hi", path), _child(path, "hi"), n)
    if any(b <= a for a, b in zip(lo, hi)):
        raise ConfigError(path, "hi must exceed lo on every axis")
    return Box(lo, hi)


def build_condenser(block: dict, n: int, path: str = "condenser") -> CondenserSpec:
    inner = build_shape(_req(block, "inner", path), _child(path, "inner"), n)
    outer = build_outer(_req(block, "outer", path), _child(path, "outer"), n)
    support = None
    if block.get("support") is not None:
        support = build_shape(block["support"], _child(path, "support"), n)
    return CondenserSpec(inner, outer, support)


# --- numerics --------------------------------------------------------------


def build_options(block: dict | None, threads: int = 1, path: str = "numerics") -> CapacityOptions:
    block = block or {}
    d = CapacityOptions()
    kw: dict[str, Any] = {"threads": threads}
    if "resolution" in block:
        kw["resolution"] = _int(block["resolution"], _child(path, "resolution"), 8, MAX_RESOLUTION)
    if "quad_order" in block:
        kw["quad_order"] = _int(block["quad_order"], _child(path, "quad_order"), 4, MAX_QUAD_ORDER)
    if "max_iter" in block:
        kw["max_iter"] = _int(block["max_iter"], _child(path, "max_iter"), 1)
    if "tol" in block:
        kw["tol"] = _number(block["tol"], _child(path, "tol"), positive=True)
    for key, allowed in (("init", ("ramp", "half")), ("stencil", ("gauss", "center"))):
        if key in block:
            if block[key] not in allowed:
                raise ConfigError(_child(path, key), f"expected one of {', '.join(allowed)}")
            kw[key] = block[key]
    unknown = set(block) - {"resolution", "quad_order", "max_iter", "tol", "init", "stencil"}
    if unknown:
        raise ConfigError(_child(path, sorted(unknown)[0]), "unknown field")
    return replace(d, **kw)


@dataclass
class MuConfig:
    x1: tuple
    x2: tuple
    radii: list
    outer: Box
    support: object = None


def build_mu(cfg: dict, n: int) -> MuConfig:
    block = _block(cfg, "mu")
    x1 = _vector(_req(block, "x1", "mu"), "mu.x1", n)
    x2 = _vector(_req(block, "x2", "mu"), "mu.x2", n)
    if x1 == x2:
        raise ConfigError("mu.x2", "x1 and x2 must differ")
    radii_raw = _req(block, "radii", "mu")
    if not isinstance(radii_raw, list) or not radii_raw:
        raise ConfigError("mu.radii", "expected a non-empty list of radii")
    radii = [_number(r, f"mu.radii[{i}]", positive=True) for i, r in enumerate(radii_raw)]
    if "outer" in block:
        outer = build_outer(block["outer"], "mu.outer", n)
        support = build_shape(block["support"], "mu.support", n) if block.get("support") is not None else None
    else:
        cond = _block(cfg, "condenser", required=False)
        if cond is None or "outer" not in cond:
            raise ConfigError("mu.outer", "missing required field (or condenser.outer)")
        outer = build_outer(cond["outer"], "condenser.outer", n)
        support = build_shape(cond["support"], "condenser.support", n) if cond.get("support") is not None else None
    return MuConfig(x1, x2, radii, outer, support)


def conformal_sigma(cfg: dict, n: int) -> ScalarField:
    block = _block(cfg, "conformal")
    return _expr(_req(block, "sigma", "conformal"), "conformal.sigma", n)
