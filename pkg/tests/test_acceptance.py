"""Acceptance suite: one PASS/FAIL line per criterion, at the stated tolerances.

Run alone with ``pytest tests/test_acceptance.py -v`` (lines appear in the
terminal summary) or as a script, ``python3 tests/test_acceptance.py``.
"""

import math
import sys
import time
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent))

import helpers as H  # noqa: E402
from acceptance_report import record  # noqa: E402

from finslercap import (  # noqa: E402
    Ball,
    Box,
    CondenserSpec,
    angle_cos,
    cartan_tensor,
    conformal_invariance_check,
    conformal_scale,
    eval_F,
    fundamental_tensor,
    horizontal_derivative_F,
    make_grid,
    minimize_capacity,
    nonlinear_connection,
)
from finslercap.capacity import DiscreteEnergy, NodeKind  # noqa: E402
from finslercap.finsler import F_derivatives  # noqa: E402
from finslercap.sphere_bundle import (  # noqa: E402
    angular_metric,
    d_omega_frame,
    d_omega_natural,
    fiber_quadrature,
    hilbert_form,
    natural_to_adapted,
    volume_density,
)

E = math.e
CAP = 4 * math.pi**2
FAMILIES = ["euclid", "riemann_var", "randers_const", "randers_var", "randers_var3", "conformal_randers"]


def annulus(r=1.0, R=E):
    return CondenserSpec(Ball((0.0, 0.0), r), Box((-R, -R), (R, R)), Ball((0.0, 0.0), R))


def test_criterion_1_annulus_capacity():
    m = H.euclid()
    t0 = time.perf_counter()
    r128 = minimize_capacity(m, annulus(), resolution=128, quad_order=16, threads=1)
    secs = time.perf_counter() - t0
    r256 = minimize_capacity(m, annulus(), resolution=256, quad_order=16)
    e128, e256 = r128.value / CAP - 1, r256.value / CAP - 1
    ok = r128.converged and r256.converged and abs(e128) <= 0.03 and abs(e256) <= 0.015 and secs <= 120
    assert record(
        1,
        "annulus capacity vs 4 pi^2",
        ok,
        f"res128 {r128.value:.6f} ({e128:+.3%}, {secs:.1f} s), res256 {r256.value:.6f} ({e256:+.3%}); limits 3% / 1.5% / 120 s",
    )


def test_criterion_2_conformal_invariance():
    details, ok = [], True
    for name, m in (("euclid", H.euclid()), ("randers b=(0.3,0)", H.randers_const((0.3, 0.0)))):
        rep = conformal_invariance_check(m, H.SIGMA, annulus(), resolution=64, quad_order=16)
        ok &= rep.rel_diff <= 1e-8 and rep.integrand_max_rel_err <= 1e-12
        details.append(f"{name}: cap rel diff {rep.rel_diff:.2e}, integrand {rep.integrand_max_rel_err:.2e}")
    assert record(2, "conformal invariance of capacity", ok, "; ".join(details) + "; limits 1e-8 / 1e-12")


def test_criterion_3_d_omega_identity():
    worst = 0.0
    for name, count in (("riemann_var", 50), ("randers_var", 50)):
        m = H.FAMILIES[name]()
        x, y = H.samples(m, count, seed=300 + count + len(name))
        A = natural_to_adapted(m, x, y, d_omega_natural(m, x, y))
        ref = d_omega_frame(m, x, y)
        for p in range(count):
            worst = max(worst, H.rel_err(A[p, :2, 2:], ref[p], floor=1e-300))
    assert record(3, "d omega = -h dx ^ delta y / F", worst <= 1e-6, f"max rel err {worst:.2e} over 100 samples; limit 1e-6")


def test_criterion_4_volume_convention():
    m = H.euclid()
    rng = np.random.default_rng(400)
    x = rng.uniform(-3.9, 3.9, (500, 2))
    phi = rng.uniform(0, 2 * np.pi, (500, 1))
    d_err = float(np.max(np.abs(volume_density(m, x, phi) - 1)))
    w_err = abs(fiber_quadrature(m, [0.3, -0.2], 16).measure - 2 * np.pi)
    s_err = 0.0
    for name in ("randers_var", "riemann_var"):
        base = H.FAMILIES[name]()
        cm = conformal_scale(base, H.SIGMA)
        xs, _ = H.samples(base, 200, seed=401)
        ph = rng.uniform(0, 2 * np.pi, (200, 1))
        ratio = volume_density(cm, xs, ph) / volume_density(base, xs, ph)
        s_err = max(s_err, float(np.max(np.abs(ratio / np.exp(2 * cm.sigma(xs)) - 1))))
    ok = d_err <= 1e-9 and w_err <= 1e-8 and s_err <= 1e-12
    assert record(4, "volume density conventions", ok, f"|D-1| {d_err:.2e}, |sum wD - 2pi| {w_err:.2e}, D'/(e^(n sigma) D)-1 {s_err:.2e}; limits 1e-9 / 1e-8 / 1e-12")


def test_criterion_5_tensor_identities():
    worst = {k: 0.0 for k in ("gyy", "ll", "Cy", "Csym", "hl", "Nscale", "dF")}
    for name in FAMILIES:
        m = H.FAMILIES[name]()
        x, y = H.samples(m, 1000, seed=500 + FAMILIES.index(name))
        F = eval_F(m, x, y)
        g = fundamental_tensor(m, x, y)
        ell = hilbert_form(m, x, y)
        l_up = y / F[:, None]
        C = cartan_tensor(m, x, y)
        h = angular_metric(m, x, y)
        N = nonlinear_connection(m, x, y)
        worst["gyy"] = max(worst["gyy"], float(np.max(np.abs(np.einsum("pij,pi,pj->p", g, y, y) / F**2 - 1))))
        worst["ll"] = max(worst["ll"], float(np.max(np.abs(np.einsum("pi,pi->p", ell, l_up) - 1))))
        worst["Cy"] = max(worst["Cy"], float(np.max(np.abs(np.einsum("pijk,pk->pij", C, y)))))
        for perm in ((0, 2, 1, 3), (0, 1, 3, 2), (0, 3, 2, 1)):
            worst["Csym"] = max(worst["Csym"], float(np.max(np.abs(C - np.transpose(C, perm)))))
        worst["hl"] = max(worst["hl"], float(np.max(np.abs(np.einsum("pij,pj->pi", h, l_up)))))
        worst["Nscale"] = max(worst["Nscale"], float(np.max(np.abs(nonlinear_connection(m, x, 7 * y) - N))))
        _, Fx, _ = F_derivatives(m, x, y)
        dF = horizontal_derivative_F(m, x, y)
        worst["dF"] = max(worst["dF"], float(np.max(np.abs(dF) / np.maximum(np.abs(Fx), F[:, None]))))
    ok = all(v <= 1e-10 for k, v in worst.items() if k != "dF") and worst["dF"] <= 1e-8
    detail = ", ".join(f"{k} {v:.1e}" for k, v in worst.items())
    assert record(5, "tensor identity suite (1000 samples x 6 families)", ok, detail + "; limits 1e-10 (dF 1e-8)")


def test_criterion_6_derivative_oracles():
    g_err = dg_err = 0.0
    # fundamental tensor vs value-only finite-difference Hessian of F^2/2
    for name in ("riemann_var", "randers_var", "conformal_randers", "randers_var3"):
        m = H.FAMILIES[name]()
        x, y = H.samples(m, 25, seed=600)
        g = fundamental_tensor(m, x, y)
        for p in range(len(x)):
            oracle = H.fd_hessian_half_F2(lambda v: eval_F(m, x[p], v), y[p], h=1e-3 * np.linalg.norm(y[p]))
            g_err = max(g_err, H.rel_err(g[p], oracle))
    # dg/dx: closed-form Randers g differenced in x; AD g differenced for the others
    m = H.randers_var()
    x, y = H.samples(m, 25, seed=601)
    dg = m.dg_dx(x, y)
    for p in range(len(x)):
        for k in range(2):
            ek = np.eye(2)[k]

            def g_closed(t):
                a, b = H.randers_coeffs(m, x[p] + t * ek)
                return H.randers_g_closed(a, b, y[p])

            dg_err = max(dg_err, H.rel_err(dg[p, :, :, k], H.richardson(g_closed, 0.0, 1e-4)))
    for name in ("riemann_var", "conformal_randers", "randers_var3"):
        m = H.FAMILIES[name]()
        x, y = H.samples(m, 25, seed=602)
        dg = m.dg_dx(x, y)
        for p in range(len(x)):
            for k in range(m.dim):
                ek = np.eye(m.dim)[k]
                oracle = H.richardson(lambda t: fundamental_tensor(m, x[p] + t * ek, y[p]), 0.0, 1e-4)
                dg_err = max(dg_err, H.rel_err(dg[p, :, :, k], oracle))
    ok = g_err <= 1e-6 and dg_err <= 1e-6
    assert record(6, "derivative oracles for g and dg/dx", ok, f"g rel err {g_err:.2e}, dg/dx rel err {dg_err:.2e}; limit 1e-6")


def test_criterion_7_convexity_robustness():
    m = H.conformal_randers()
    spec = CondenserSpec(Ball((0.0, 0.0), 0.5), Box((-1.8, -1.8), (1.8, 1.8)))
    a = minimize_capacity(m, spec, resolution=64, quad_order=16, init="ramp")
    b = minimize_capacity(m, spec, resolution=64, quad_order=16, init="half")
    agree = abs(a.value - b.value) / a.value
    mono = all(all(q <= p for p, q in zip(r.history, r.history[1:])) for r in (a, b))
    e = H.euclid()
    outer = Box((-E, -E), (E, E))
    s1 = CondenserSpec(Ball((0.0, 0.0), 0.8), outer, Ball((0.0, 0.0), E))
    s2 = CondenserSpec(Box((-0.9, -0.9), (0.9, 0.9)), outer, Ball((0.0, 0.0), E))
    c1 = minimize_capacity(e, s1, resolution=64)
    c2 = minimize_capacity(e, s2, resolution=64)
    shared = c1.grid.shape == c2.grid.shape and np.array_equal(c1.grid.lo, c2.grid.lo)
    ok = agree <= 1e-6 and mono and shared and c1.value <= c2.value + 1e-12 and a.converged and b.converged
    assert record(
        7,
        "convexity, monotone history, set monotonicity",
        ok,
        f"init agreement {agree:.2e} (limit 1e-6), histories monotone {mono}, Cap(disk 0.8) {c1.value:.4f} <= Cap(square 0.9) {c2.value:.4f}",
    )


def test_criterion_8_dilation():
    m = H.euclid(box=6.0)
    a = minimize_capacity(m, annulus(1.0, E), resolution=128).value
    b = minimize_capacity(m, annulus(2.0, 2 * E), resolution=128).value
    rel = abs(a / b - 1)
    assert record(8, "dilation (1, e) vs (2, 2e)", rel <= 0.03, f"{a:.6f} vs {b:.6f}, rel diff {rel:.2e}; limit 3%")


def test_criterion_9_angle_invariance():
    worst = 0.0
    for name in ("randers_var", "riemann_var", "randers_var3"):
        base = H.FAMILIES[name]()
        sigma = H.SIGMA if base.dim == 2 else "0.3*sin(x1)*cos(x2) + 0.2*x3"
        m = conformal_scale(base, sigma)
        x, u = H.samples(base, 1000, seed=900)
        _, v = H.samples(base, 1000, seed=901)
        worst = max(worst, float(np.max(np.abs(angle_cos(m, x, u, v) - angle_cos(base, x, u, v)))))
    assert record(9, "angle invariance under conformal scaling", worst <= 1e-12, f"max |diff| {worst:.2e} over 3000 triples; limit 1e-12")


if __name__ == "__main__":
    failures = 0
    for name, fn in sorted((k, v) for k, v in globals().items() if k.startswith("test_criterion_")):
        try:
            fn()
        except AssertionError:
            failures += 1
    sys.exit(1 if failures else 0)
