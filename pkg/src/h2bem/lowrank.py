"""Adaptive cross approximation on implicit and explicit matrices, low-rank
factor container and SVD recompression."""

from dataclasses import dataclass
from typing import Optional

import numpy as np


@dataclass
class LowRankFactor:
    """Factorized block A C B^T (A: rows x k, B: cols x k, C: k x k or None)."""

    A: np.ndarray
    B: np.ndarray
    C: Optional[np.ndarray] = None
    pivot_rows: Optional[np.ndarray] = None
    pivot_cols: Optional[np.ndarray] = None

    @property
    def rank(self):
        return self.A.shape[1]

    @property
    def shape(self):
        return (self.A.shape[0], self.B.shape[0])

    def matvec(self, x):
        y = self.B.T @ x
        if self.C is not None:
            y = self.C @ y
        return self.A @ y

    def rmatvec(self, x):
        y = self.A.T @ x
        if self.C is not None:
            y = self.C.T @ y
        return self.B @ y

    def to_dense(self):
        mid = self.B.T if self.C is None else self.C @ self.B.T
        return self.A @ mid

    def storage_floats(self):
        n = self.A.size + self.B.size
        if self.C is not None:
            n += self.C.size
        return n


@dataclass
class ACAResult:
    factor: LowRankFactor
    converged: bool
    reason: str  # "tol", "k_max" or "rank_deficient"

    @property
    def pivot_rows(self):
        return self.factor.pivot_rows

    @property
    def pivot_cols(self):
        return self.factor.pivot_cols


def aca(entry, n_rows, n_cols, eps, k_max):
    """Partially pivoted adaptive cross approximation of an implicit matrix.

    entry(rows, cols) must return the dense submatrix for index arrays.  The
    next pivot row is the largest-modulus entry of the last computed column
    (the first row comes from column 0); iteration stops when the new cross's
    Frobenius contribution drops below eps times the estimated Frobenius norm
    of the accumulated approximation, or at k_max.
    """
    if eps <= 0.0:
        raise ValueError("eps must be positive")
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    all_rows = np.arange(n_rows)
    all_cols = np.arange(n_cols)
    us, vs = [], []
    used_rows, used_cols = [], []
    est_norm2 = 0.0
    converged, reason = False, "k_max"

    col0 = entry(all_rows, np.array([0]))[:, 0]
    i_star = int(np.argmax(np.abs(col0)))
    k_cap = min(k_max, n_rows, n_cols)
    while len(us) < k_cap:
        row = entry(np.array([i_star]), all_cols)[0, :].astype(float).copy()
        for u, v in zip(us, vs):
            row -= u[i_star] * v
        if used_cols:
            row[np.array(used_cols)] = 0.0
        j_star = int(np.argmax(np.abs(row)))
        delta = row[j_star]
        if delta == 0.0:
            # residual row is exactly zero; scan remaining rows for a nonzero one
            remaining = [i for i in range(n_rows) if i not in used_rows and i != i_star]
            found = False
            for cand in remaining:
                row = entry(np.array([cand]), all_cols)[0, :].astype(float).copy()
                for u, v in zip(us, vs):
                    row -= u[cand] * v
                if used_cols:
                    row[np.array(used_cols)] = 0.0
                if np.abs(row).max() > 0.0:
                    i_star = cand
                    j_star = int(np.argmax(np.abs(row)))
                    delta = row[j_star]
                    found = True
                    break
            if not found:
                converged, reason = True, "rank_deficient" if not us else "tol"
                break
        v = row / delta
        col = entry(all_rows, np.array([j_star]))[:, 0].astype(float).copy()
        for u, vv in zip(us, vs):
            col -= vv[j_star] * u
        u = col
        cross2 = float(u @ u) * float(v @ v)
        est_candidate = est_norm2 + cross2
        for uk, vk in zip(us, vs):
            est_candidate += 2.0 * float(uk @ u) * float(vk @ v)
        if us and cross2 <= eps**2 * est_candidate:
            # the new cross is negligible: stop without keeping it, so exact
            # rank-r matrices terminate at rank r
            converged, reason = True, "tol"
            break
        est_norm2 = est_candidate
        used_rows.append(i_star)
        used_cols.append(j_star)
        us.append(u)
        vs.append(v)
        if cross2 <= eps**2 * est_norm2:
            converged, reason = True, "tol"
            break
        unused = np.abs(u).copy()
        unused[np.array(used_rows)] = 0.0
        i_star = int(np.argmax(unused))

    if not us:
        A = np.zeros((n_rows, 0))
        B = np.zeros((n_cols, 0))
    else:
        A = np.column_stack(us)
        B = np.column_stack(vs)
    factor = LowRankFactor(
        A, B, None, np.array(used_rows, dtype=np.int64), np.array(used_cols, dtype=np.int64)
    )
    return ACAResult(factor, converged, reason)


def aca_inverse_core(S, eps):
    """Fully pivoted cross approximation of an explicit matrix.

    Returns (tau, sigma, C, ok) with C = inv(S[tau, sigma]) such that
    S ~ S[:, sigma] C S[tau, :] with relative Frobenius residual <= eps;
    ok is False when the pivot ran out before reaching the tolerance.
    """
    S = np.asarray(S, dtype=float)
    if not np.isfinite(S).all():
        raise ValueError("matrix contains non-finite entries")
    R = S.copy()
    norm_s = np.linalg.norm(R)
    tau, sigma = [], []
    ok = True
    if norm_s == 0.0:
        return np.array([], dtype=np.int64), np.array([], dtype=np.int64), np.zeros((0, 0)), True
    k_cap = min(S.shape)
    while np.linalg.norm(R) > eps * norm_s:
        nu, mu = np.unravel_index(int(np.argmax(np.abs(R))), R.shape)
        piv = R[nu, mu]
        if piv == 0.0 or len(tau) == k_cap:
            ok = False
            break
        tau.append(int(nu))
        sigma.append(int(mu))
        R = R - np.outer(R[:, mu], R[nu, :]) / piv
    tau = np.array(tau, dtype=np.int64)
    sigma = np.array(sigma, dtype=np.int64)
    core = S[np.ix_(tau, sigma)]
    C = np.linalg.inv(core) if len(tau) else np.zeros((0, 0))
    return tau, sigma, C, ok


def truncate(factor, eps):
    """SVD recompression of a low-rank factor at relative Frobenius threshold eps."""
    if factor.rank == 0:
        return factor
    A = factor.A if factor.C is None else factor.A @ factor.C
    qa, ra = np.linalg.qr(A)
    qb, rb = np.linalg.qr(factor.B)
    u, s, vt = np.linalg.svd(ra @ rb.T)
    if s[0] == 0.0:
        keep = 0
    else:
        tail = np.sqrt(np.cumsum(s[::-1] ** 2))[::-1]  # tail[i] = ||s[i:]||
        total = tail[0]
        keep = int(np.searchsorted(-tail, -eps * total))
        if eps == 0.0:
            keep = int(np.sum(s > 0.0))
        keep = max(min(keep, len(s)), 0)
    return LowRankFactor(
        qa @ (u[:, :keep] * s[:keep]),
        qb @ vt[:keep].T,
        None,
        factor.pivot_rows,
        factor.pivot_cols,
    )
