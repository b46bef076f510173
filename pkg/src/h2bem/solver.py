"""Conjugate gradients with optional Jacobi preconditioning, plus the
Dirichlet-to-Neumann and Neumann-to-Dirichlet drivers (the latter with
rank-one stabilization of the constants nullspace)."""

from dataclasses import dataclass

import numpy as np


class SolverBreakdown(Exception):
    """CG met a non-positive curvature direction (operator not SPD)."""


@dataclass
class CGResult:
    x: np.ndarray
    iterations: int
    converged: bool
    residual: float


def cg(apply_a, b, eps, max_it, precond_diag=None):
    """Conjugate gradients for SPD operators.

    Stops at relative residual ||b - A x|| / ||b|| <= eps or after max_it
    iterations (flagged via converged=False).  precond_diag, when given, is
    the diagonal of A for Jacobi preconditioning.
    """
    b = np.asarray(b, dtype=float)
    norm_b = float(np.linalg.norm(b))
    if norm_b == 0.0:
        return CGResult(np.zeros_like(b), 0, True, 0.0)
    inv_d = None
    if precond_diag is not None:
        precond_diag = np.asarray(precond_diag, dtype=float)
        if (precond_diag <= 0.0).any():
            raise SolverBreakdown("Jacobi preconditioner requires a positive diagonal")
        inv_d = 1.0 / precond_diag
    x = np.zeros_like(b)
    r = b.copy()
    z = r * inv_d if inv_d is not None else r
    p = z.copy()
    rz = float(r @ z)
    for it in range(1, max_it + 1):
        Ap = apply_a(p)
        pAp = float(p @ Ap)
        if pAp <= 0.0:
            raise SolverBreakdown(f"non-positive curvature p^T A p = {pAp:.3e} at iteration {it}")
        alpha = rz / pAp
        x += alpha * p
        r -= alpha * Ap
        res = float(np.linalg.norm(r)) / norm_b
        if res <= eps:
            return CGResult(x, it, True, res)
        z = r * inv_d if inv_d is not None else r
        rz_new = float(r @ z)
        p = z + (rz_new / rz) * p
        rz = rz_new
    return CGResult(x, max_it, False, float(np.linalg.norm(b - apply_a(x))) / norm_b)


def solve_dtn(G, K, M, b, eps_slv, max_it=1000):
    """Neumann coefficients x from G x = (M/2 + K) b, Jacobi-preconditioned CG.

    G, K expose matvec/diagonal; M is the sparse mixed mass matrix; b holds
    P1 Dirichlet coefficients.
    """
    b = np.asarray(b, dtype=float)
    rhs = 0.5 * (M @ b) + K.matvec(b)
    return cg(G.matvec, rhs, eps_slv, max_it, precond_diag=G.diagonal())


def ntd_stabilization(W, M):
    """Rank-one shift making the hypersingular system definite.

    a = M^T 1 collects the integrals of the P1 hats; alpha balances the shift
    against the scale of W's diagonal.
    """
    a = np.asarray(M.T @ np.ones(M.shape[0])).ravel()
    diag = W.diagonal()
    alpha = float(diag.sum()) / float(a @ a)
    return a, alpha


def solve_ntd(W, K, M, b, eps_slv, max_it=1000, target_mean=0.0, total_area=None):
    """Dirichlet coefficients x from W x = (M/2 - K)^T b.

    Solves the stabilized SPD system (W + alpha a a^T) x = rhs and shifts the
    result so its mass-weighted mean equals target_mean (0 by default, i.e.
    the zero-mean representative of the constants equivalence class).
    """
    b = np.asarray(b, dtype=float)
    rhs = 0.5 * (M.T @ b) - K.rmatvec(b)
    a, alpha = ntd_stabilization(W, M)
    if total_area is None:
        total_area = float(a.sum())  # sum_j int phi_j = |surface|

    def apply_w(x):
        return W.matvec(x) + alpha * a * float(a @ x)

    result = cg(apply_w, rhs, eps_slv, max_it, precond_diag=W.diagonal() + alpha * a * a)
    mean = float(a @ result.x) / total_area
    result.x = result.x + (target_mean - mean)
    return result
