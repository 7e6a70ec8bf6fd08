"""Command line interface: ``finslercap {tensors,capacity,conformal-check,mu}``.

Exit codes: 0 success (also for non-converged runs, which carry a warning),
2 configuration or model-validation errors, 3 numerical failures.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys

import numpy as np

from . import config as cfgmod
from .capacity import (
    CapacityResult,
    GridError,
    conformal_invariance_check,
    minimize_capacity,
    mu_upper_bound,
)
from .config import ConfigError
from .finsler import (
    ModelValidityError,
    PointError,
    _batch,
    _cartan,
    _christoffel,
    _connection,
    validate_model,
)
from .jet import DomainError
from .sphere_bundle import OrientationError, direction_to_phi, volume_density

SCHEMA_VERSION = 1
EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

log = logging.getLogger("finslercap")


# --- serialization ---------------------------------------------------------


def _fmt_float(v: float) -> str:
    if not math.isfinite(v):
        return "null"
    return format(v, ".17g")


def dumps(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON with every float written to 17 significant digits."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, np.generic):
        obj = obj.item()
    if obj is None or isinstance(obj, (bool, str)):
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return _fmt_float(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        # short numeric rows stay on one line
        if all(isinstance(v, (int, float, np.generic)) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(dumps(v, indent, _level + 1) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + dumps(v, indent, _level + 1) for v in obj) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _emit(record: dict, out: str | None):
    text = dumps({"schema_version": SCHEMA_VERSION, **record}) + "\n"
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)


def write_grid_csv(path: str, result: CapacityResult):
    grid = result.grid
    n = grid.dim
    pts = grid.nodes().reshape(-1, n)
    vals = grid.values.ravel()
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow([f"x{i + 1}" for i in range(n)] + ["u"])
        for p, v in zip(pts, vals):
            w.writerow([_fmt_float(float(c)) for c in p] + [_fmt_float(float(v))])


def write_history_csv(path: str, history):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["iteration", "energy"])
        for i, e in enumerate(history):
            w.writerow([i, _fmt_float(float(e))])


def _result_record(res: CapacityResult, timing: bool) -> dict:
    meta = {k: v for k, v in res.metadata.items() if timing or not k.startswith("seconds_")}
    rec = {
        "value": res.value,
        "iterations": res.iterations,
        "residual": res.residual,
        "converged": res.converged,
        "message": res.message,
        "metadata": meta,
        "history": list(res.history),
    }
    if not res.converged:
        rec["warning"] = f"not converged: {res.message}"
    return rec


# --- commands --------------------------------------------------------------


def _model(cfg):
    m = cfgmod.build_model(cfgmod._block(cfg, "model"))
    validate_model(m).raise_if_invalid()
    return m


def cmd_tensors(cfg: dict, x, y) -> dict:
    m = _model(cfg)
    n = m.dim
    if len(x) != n or len(y) != n:
        raise ConfigError("--x" if len(x) != n else "--y", f"expected {n} coordinates")
    xb, yb, _ = _batch(m, x, y)
    F = float(m.F(xb, yb)[0])
    g = m.g(xb, yb)
    np.linalg.cholesky(g)
    ginv = m.g_inv(xb, yb)
    l = m.hilbert(xb, yb)
    h = g - l[:, :, None] * l[:, None, :]
    N_over_F = _connection(m, xb, yb)
    D = volume_density(m, xb[0], direction_to_phi(yb[0]))
    return {
        "command": "tensors",
        "family": m.family,
        "dimension": n,
        "x": xb[0],
        "y": yb[0],
        "F": F,
        "g": g[0],
        "g_inv": ginv[0],
        "cartan": _cartan(m, xb, yb)[0],
        "christoffel": _christoffel(m, xb, yb, ginv)[0],
        "N_over_F": N_over_F[0],
        "N": F * N_over_F[0],
        "hilbert_form": l[0],
        "angular_metric": h[0],
        "volume_density": D,
    }


def cmd_capacity(cfg: dict, threads: int = 1, timing: bool = False) -> tuple[dict, CapacityResult]:
    m = _model(cfg)
    spec = cfgmod.build_condenser(cfgmod._block(cfg, "condenser"), m.dim)
    opts = cfgmod.build_options(cfgmod._block(cfg, "numerics", required=False), threads)
    res = minimize_capacity(m, spec, opts)
    return {"command": "capacity", "family": m.family, **_result_record(res, timing)}, res


def cmd_conformal_check(cfg: dict, threads: int = 1, timing: bool = False) -> dict:
    m = _model(cfg)
    sigma = cfgmod.conformal_sigma(cfg, m.dim)
    spec = cfgmod.build_condenser(cfgmod._block(cfg, "condenser"), m.dim)
    opts = cfgmod.build_options(cfgmod._block(cfg, "numerics", required=False), threads)
    rep = conformal_invariance_check(m, sigma, spec, opts)
    rec = {
        "command": "conformal-check",
        "family": m.family,
        "sigma": str(sigma),
        "base_value": rep.base_value,
        "scaled_value": rep.scaled_value,
        "rel_diff": rep.rel_diff,
        "integrand_max_rel_err": rep.integrand_max_rel_err,
        "energy_rel_diff_same_u": rep.energy_rel_diff_same_u,
        "capacity_tol": rep.capacity_tol,
        "integrand_tol": rep.integrand_tol,
        "passed": rep.passed,
        "status": "PASS" if rep.passed else "FAIL",
        "base": _result_record(rep.base, timing),
        "scaled": _result_record(rep.scaled, timing),
    }
    if not (rep.base.converged and rep.scaled.converged):
        rec["warning"] = "not converged"
    return rec


def cmd_mu(cfg: dict, threads: int = 1) -> dict:
    m = _model(cfg)
    mc = cfgmod.build_mu(cfg, m.dim)
    opts = cfgmod.build_options(cfgmod._block(cfg, "numerics", required=False), threads)
    res = mu_upper_bound(m, mc.x1, mc.x2, mc.radii, mc.outer, mc.support, opts)
    rec = {
        "command": "mu",
        "family": m.family,
        "upper_bound": True,
        "x1": list(mc.x1),
        "x2": list(mc.x2),
        "value": res.value,
        "radius": res.radius,
        "table": res.table,
    }
    if not all(row["converged"] for row in res.table):
        rec["warning"] = "not converged for some radii"
    return rec


# --- entry point -----------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="finslercap", description="Finsler tensors and conformal capacities of condensers.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="JSON config path, or - for standard input")
    common.add_argument("--out", default=None, help="output JSON path (default: output.path or stdout)")
    common.add_argument("--threads", type=int, default=1, help="worker threads for energy assembly")
    common.add_argument("--timing", action="store_true", help="include wall-clock timings (output no longer byte-stable)")
    common.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    t = sub.add_parser("tensors", parents=[common], help="pointwise tensors at (x, y)")
    t.add_argument("--x", type=float, nargs="+", required=True)
    t.add_argument("--y", type=float, nargs="+", required=True)
    sub.add_parser("capacity", parents=[common], help="minimize the capacity energy")
    sub.add_parser("conformal-check", parents=[common], help="compare capacities of m and exp(sigma) m")
    sub.add_parser("mu", parents=[common], help="capsule-family upper bound on mu(x1, x2)")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    if args.threads < 1:
        print("error: --threads: must be at least 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = cfgmod.load(args.config)
        output = cfg.get("output") or {}
        if not isinstance(output, dict):
            raise ConfigError("output", "expected an object")
        out = args.out if args.out is not None else output.get("path")
        if args.command == "tensors":
            rec = cmd_tensors(cfg, args.x, args.y)
        elif args.command == "capacity":
            rec, res = cmd_capacity(cfg, args.threads, args.timing)
            if output.get("grid_csv"):
                write_grid_csv(output["grid_csv"], res)
            if output.get("history_csv"):
                write_history_csv(output["history_csv"], res.history)
        elif args.command == "conformal-check":
            rec = cmd_conformal_check(cfg, args.threads, args.timing)
        else:
            rec = cmd_mu(cfg, args.threads)
    except (ConfigError, ModelValidityError, GridError, PointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DomainError, OrientationError, np.linalg.LinAlgError, FloatingPointError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if "warning" in rec:
        log.warning(rec["warning"])
    _emit(rec, out)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
