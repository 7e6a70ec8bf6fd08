"""Differential forms with array-valued coefficients.

A k-form on an m-dimensional coordinate patch is stored as a dict mapping a
strictly increasing index tuple ``(i1, ..., ik)`` to the coefficient of
``dz^i1 ^ ... ^ dz^ik``.  Coefficients may be scalars or numpy arrays (one
entry per sample point); missing keys are zero.
"""

from __future__ import annotations

import math
from collections import defaultdict

import numpy as np


def perm_sign(seq) -> int:
    """Sign of the permutation sorting ``seq`` (0 if it has repeats)."""
    seq = list(seq)
    if len(set(seq)) != len(seq):
        return 0
    sign = 1
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            if seq[i] > seq[j]:
                sign = -sign
    return sign


def from_terms(terms) -> dict:
    """Build a form from ``(index_sequence, coefficient)`` pairs in any index order."""
    out = defaultdict(float)
    for idx, coef in terms:
        s = perm_sign(idx)
        if s:
            out[tuple(sorted(idx))] = out[tuple(sorted(idx))] + s * coef
    return dict(out)


def wedge(a: dict, b: dict) -> dict:
    out = defaultdict(float)
    for ia, ca in a.items():
        for ib, cb in b.items():
            idx = ia + ib
            s = perm_sign(idx)
            if s:
                key = tuple(sorted(idx))
                out[key] = out[key] + s * (ca * cb)
    return dict(out)


def wedge_power(a: dict, k: int) -> dict:
    out = {(): 1.0}
    for _ in range(k):
        out = wedge(out, a)
    return out


def degree(form: dict) -> int:
    degs = {len(k) for k in form}
    if len(degs) > 1:
        raise ValueError("inhomogeneous form")
    return degs.pop() if degs else 0


def top_coefficient(form: dict, dim: int):
    """Coefficient of dz^0 ^ ... ^ dz^(dim-1)."""
    return form.get(tuple(range(dim)), 0.0)


def two_form_matrix(form: dict, dim: int, batch=()) -> np.ndarray:
    """Antisymmetric matrix W with form = 1/2 W_ab dz^a ^ dz^b."""
    W = np.zeros(tuple(batch) + (dim, dim))
    for (i, j), c in form.items():
        W[..., i, j] += c
        W[..., j, i] -= c
    return W


def volume_factor(n: int) -> float:
    """(-1)^N / (n-1)! with N = n(n-1)/2."""
    N = n * (n - 1) // 2
    return (-1.0) ** N / math.factorial(n - 1)
