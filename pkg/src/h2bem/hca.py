"""Hybrid cross approximation: tensor Chebyshev interpolation of the kernel on
admissible bounding-box pairs, pivoted cross approximation of the coefficient
matrix, and discretization through single integrals.  Produces a blockwise
low-rank hierarchical matrix."""

from dataclasses import dataclass

import numpy as np

from . import kernels
from ._util import pmap
from .containers import HMatrix, assemble_nearfield
from .lowrank import LowRankFactor, aca_inverse_core, truncate

DEGENERATE_WIDTH = 1e-12


@dataclass(frozen=True)
class InterpGrid:
    """Tensor Chebyshev grid of order m on a box: k = m^3 points."""

    order: int
    box: np.ndarray
    nodes1d: np.ndarray  # (3, m) per-axis nodes
    points: np.ndarray   # (m^3, 3), x-major lexicographic


def _widen_degenerate(box):
    box = np.asarray(box, dtype=float).copy()
    ext = box[1] - box[0]
    pad = DEGENERATE_WIDTH * max(ext.max(), 1.0)
    for d in range(3):
        if ext[d] < pad:
            c = 0.5 * (box[0, d] + box[1, d])
            box[0, d] = c - 0.5 * pad
            box[1, d] = c + 0.5 * pad
    return box


def chebyshev_points(box, m):
    """Chebyshev root nodes of order m mapped affinely to each box edge."""
    if m < 1:
        raise ValueError("interpolation order must be >= 1")
    box = _widen_degenerate(box)
    i = np.arange(m)
    ref = np.cos((2 * i + 1) * np.pi / (2 * m))  # roots of T_m on [-1, 1]
    nodes = 0.5 * (box[0][:, None] + box[1][:, None]) + 0.5 * (box[1] - box[0])[:, None] * ref[None, :]
    pts = np.stack(np.meshgrid(nodes[0], nodes[1], nodes[2], indexing="ij"), axis=-1).reshape(-1, 3)
    return InterpGrid(m, box, nodes, pts)


def _lagrange_1d(nodes, x):
    """Cardinal polynomial values: (len(x), m) with column i = L_i(x)."""
    x = np.asarray(x, dtype=float)
    m = len(nodes)
    diff_nodes = nodes[:, None] - nodes[None, :]
    np.fill_diagonal(diff_nodes, 1.0)
    denom = diff_nodes.prod(axis=1)
    out = np.empty((x.size, m))
    for i in range(m):
        others = np.delete(nodes, i)
        out[:, i] = np.prod(x.reshape(-1, 1) - others[None, :], axis=1) / denom[i]
    return out.reshape(x.shape + (m,))


def lagrange_matrix(grid, X):
    """All tensor Lagrange polynomials at points X: shape (len(X), m^3)."""
    X = np.atleast_2d(X)
    lx = _lagrange_1d(grid.nodes1d[0], X[:, 0])
    ly = _lagrange_1d(grid.nodes1d[1], X[:, 1])
    lz = _lagrange_1d(grid.nodes1d[2], X[:, 2])
    return np.einsum("na,nb,nc->nabc", lx, ly, lz).reshape(len(X), -1)


def lagrange_eval(grid, nu, x):
    """Value of the nu-th tensor Lagrange polynomial at point(s) x."""
    x = np.atleast_2d(x)
    vals = lagrange_matrix(grid, x)[:, nu]
    return float(vals[0]) if vals.size == 1 else vals


def interp_kernel_approx(grid_t, grid_s, X, Y):
    """Tensor-interpolated kernel g_int(x, y) at sample points (testing aid)."""
    S = kernels.laplace_kernel(grid_t.points[:, None, :], grid_s.points[None, :, :])
    Lt = lagrange_matrix(grid_t, X)
    Ls = lagrange_matrix(grid_s, Y)
    return np.einsum("xn,nm,ym->xy", Lt, S, Ls, optimize=True)


def hca_kernel_approx(grid_t, grid_s, X, Y, eps):
    """Cross-improved kernel approximation g_hca(x, y) at sample points."""
    S = kernels.laplace_kernel(grid_t.points[:, None, :], grid_s.points[None, :, :])
    tau, sigma, C, _ = aca_inverse_core(S, eps)
    gx = kernels.laplace_kernel(X[:, None, :], grid_s.points[None, sigma, :])
    gy = kernels.laplace_kernel(grid_t.points[None, tau, :], Y[:, None, :])
    return np.einsum("xk,kl,yl->xy", gx, C, gy, optimize=True)


def _row_factor(ctx, kind, row_dofs, Z, q):
    """Integrals of the row basis against g(., z): (|t|, len(Z)) or x3 for hyp."""
    pq = ctx.panel_quad(q)
    if kind in (kernels.SLP, kernels.DLP):
        return kernels.panel_potentials(ctx.mesh, row_dofs, Z, kernels.K_VALUE, q, pq=pq)
    return kernels.curl_potentials(
        ctx.mesh, row_dofs, Z, kernels.K_VALUE, q,
        vertex_tris=ctx.vertex_tris, curls=ctx.curls, pq=pq,
    )


def _col_factor(ctx, kind, col_dofs, Z, q):
    """Integrals of the column basis against the (derived) kernel at points Z."""
    pq = ctx.panel_quad(q)
    if kind == kernels.SLP:
        return kernels.panel_potentials(ctx.mesh, col_dofs, Z, kernels.K_VALUE, q, pq=pq)
    if kind == kernels.DLP:
        return kernels.p1_potentials(
            ctx.mesh, col_dofs, Z, kernels.K_DN_X, q, vertex_tris=ctx.vertex_tris, pq=pq
        )
    return kernels.curl_potentials(
        ctx.mesh, col_dofs, Z, kernels.K_VALUE, q,
        vertex_tris=ctx.vertex_tris, curls=ctx.curls, pq=pq,
    )


def _flatten_components(F3):
    """(n, k, 3) component stack -> (n, 3k) column blocks [F_x F_y F_z]."""
    return np.concatenate([F3[:, :, d] for d in range(3)], axis=1)


def hca_block(ctx, kind, row_dofs, col_dofs, box_t, box_s, m, eps_aca, q_single):
    """Low-rank factor of an admissible block.

    Samples the kernel on the tensor Chebyshev grids, shrinks the coefficient
    matrix by fully pivoted cross approximation, and discretizes the resulting
    degenerate kernel through single integrals.  For the double-layer and
    hypersingular operators the appropriate derivatives/curl weights enter the
    single integrals; the pivots always come from the plain kernel samples.
    """
    grid_t = chebyshev_points(box_t, m)
    grid_s = chebyshev_points(box_s, m)
    S = kernels.laplace_kernel(grid_t.points[:, None, :], grid_s.points[None, :, :])
    tau, sigma, C, _ = aca_inverse_core(S, eps_aca)
    if len(tau) == 0:
        nr = len(row_dofs)
        nc = len(col_dofs)
        return LowRankFactor(np.zeros((nr, 0)), np.zeros((nc, 0)), None, tau, sigma)
    A = _row_factor(ctx, kind, row_dofs, grid_s.points[sigma], q_single)
    B = _col_factor(ctx, kind, col_dofs, grid_t.points[tau], q_single)
    if kind == kernels.HYP:
        A = _flatten_components(A)
        B = _flatten_components(B)
        C = np.kron(np.eye(3), C)
    return LowRankFactor(A, B, C, tau, sigma)


def assemble_hmatrix(
    ctx, kind, block_tree, m, eps_aca, q_near, eps_comp=None, nearfield_cache=None, threads=1
):
    """Hierarchical matrix: HCA on farfield leaves, regularized quadrature on
    nearfield leaves; optional blockwise SVD re-truncation at eps_comp."""
    q_single = max(2, m)
    rt, ct = block_tree.row_tree, block_tree.col_tree

    def build(b):
        f = hca_block(
            ctx, kind, rt.dofs(b.row), ct.dofs(b.col), b.row.box, b.col.box, m, eps_aca, q_single
        )
        return truncate(f, eps_comp) if eps_comp is not None else f

    far = pmap(build, block_tree.far, threads)
    near = assemble_nearfield(ctx, kind, block_tree, q_near, cache=nearfield_cache, threads=threads)
    return HMatrix(block_tree, far, near)
