"""Preconditioned conjugate gradients on pairs of grid arrays.

Both Newton solvers reduce their inner linear systems to a symmetric
positive definite operator acting on a two-component field; CG with a
spectral (inverse-Helmholtz) preconditioner is the matching iterative
solver. Everything here works on raw arrays for speed.
"""

import numpy as np


def _dot(a1, a2, b1, b2):
    return float(np.dot(a1.ravel(), b1.ravel()) + np.dot(a2.ravel(), b2.ravel()))


def pcg_pair(apply_op, apply_prec, b1, b2, rtol, max_iter=500):
    """Solve op(x) = b for a two-component field with preconditioned CG.

    `apply_op` and `apply_prec` map array pairs to array pairs; `apply_op`
    must be symmetric positive definite and `apply_prec` an SPD
    approximation of its inverse. Returns (x1, x2, iterations).
    """
    x1 = np.zeros_like(b1)
    x2 = np.zeros_like(b2)
    r1 = b1.copy()
    r2 = b2.copy()
    norm0 = np.sqrt(_dot(r1, r2, r1, r2))
    if norm0 == 0.0:
        return x1, x2, 0
    z1, z2 = apply_prec(r1, r2)
    p1 = z1.copy()
    p2 = z2.copy()
    rz = _dot(r1, r2, z1, z2)
    for it in range(1, max_iter + 1):
        q1, q2 = apply_op(p1, p2)
        pq = _dot(p1, p2, q1, q2)
        if pq <= 0.0:
            # loss of positive definiteness to rounding; return best iterate
            return x1, x2, it
        alpha = rz / pq
        x1 += alpha * p1
        x2 += alpha * p2
        r1 -= alpha * q1
        r2 -= alpha * q2
        if np.sqrt(_dot(r1, r2, r1, r2)) <= rtol * norm0:
            return x1, x2, it
        z1, z2 = apply_prec(r1, r2)
        rz_new = _dot(r1, r2, z1, z2)
        p1 = z1 + (rz_new / rz) * p1
        p2 = z2 + (rz_new / rz) * p2
        rz = rz_new
    return x1, x2, max_iter
