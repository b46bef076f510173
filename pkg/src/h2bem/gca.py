"""Green cross approximation: quadrature of Green's representation formula on
an auxiliary box per cluster, row-pivoted cross approximation yielding pivot
dofs and an algebraically interpolating cluster basis, nested transfer
matrices, and direct H^2-matrix assembly."""

from dataclasses import dataclass

import numpy as np

from . import kernels
from ._util import pmap
from .containers import ClusterBasis, H2Matrix, assemble_nearfield, dense_block
from .hca import _widen_degenerate
from .lowrank import aca_inverse_core
from .quadrature import gauss_legendre

#: basis flavors, selecting the Green-quadrature column kernels
P0_SLP = "p0_slp"      # rows of G and K: {g, dg/dn_z} against P0 panels
P1_DLP = "p1_dlp"      # columns of K: {dg/dn_y, d^2 g/dn_y dn_z} against P1 hats
P1_CURL = "p1_curl"    # rows/columns of W: componentwise curl weights


@dataclass(frozen=True)
class GreenBox:
    """Composite Gauss rule on the boundary of an auxiliary box."""

    box: np.ndarray
    points: np.ndarray    # (k, 3) on the 6 faces
    weights: np.ndarray   # (k,) positive, include face Jacobians
    normals: np.ndarray   # (k, 3) outward


def green_box(box_t):
    """Inflate the cluster box by its longest edge on every face."""
    box_t = _widen_degenerate(box_t)
    delta = float((box_t[1] - box_t[0]).max())
    return np.stack([box_t[0] - delta, box_t[1] + delta])


def green_quadrature(box, m):
    """Tensor m x m Gauss rule on each of the 6 faces; k = 6 m^2 points."""
    if m < 1:
        raise ValueError("quadrature order must be >= 1")
    box = np.asarray(box, dtype=float)
    g = gauss_legendre(m)
    pts, wts, nrms = [], [], []
    for axis in range(3):
        u, v = (axis + 1) % 3, (axis + 2) % 3
        pu = box[0, u] + (box[1, u] - box[0, u]) * g.points
        pv = box[0, v] + (box[1, v] - box[0, v]) * g.points
        wu = (box[1, u] - box[0, u]) * g.weights
        wv = (box[1, v] - box[0, v]) * g.weights
        U, V = np.meshgrid(pu, pv, indexing="ij")
        W = np.outer(wu, wv)
        for side, coord in ((0, box[0, axis]), (1, box[1, axis])):
            P = np.empty((m * m, 3))
            P[:, axis] = coord
            P[:, u] = U.ravel()
            P[:, v] = V.ravel()
            n = np.zeros(3)
            n[axis] = 1.0 if side else -1.0
            pts.append(P)
            wts.append(W.ravel())
            nrms.append(np.tile(n, (m * m, 1)))
    return GreenBox(box, np.vstack(pts), np.concatenate(wts), np.vstack(nrms))


def green_kernel_approx(gq, X, Y):
    """Green-quadrature kernel reconstruction g_grn(x, y) for y outside the box."""
    gx = kernels.laplace_kernel(X[:, None, :], gq.points[None, :, :])
    dgy = kernels._pair_kernel(
        gq.points[None, :, :], Y[:, None, :], kernels.K_DN_X, na=gq.normals[None, :, :]
    )  # d g(z, y) / dn_z, derivative in the first argument
    dgx = kernels._pair_kernel(
        X[:, None, :], gq.points[None, :, :], kernels.K_DN_Z, nb=gq.normals[None, :, :]
    )  # d g(x, z) / dn_z
    gy = kernels.laplace_kernel(gq.points[:, None, :], Y[None, :, :])
    return np.einsum("xk,k,yk->xy", gx, gq.weights, dgy) - np.einsum(
        "xk,k,ky->xy", dgx, gq.weights, gy
    )


def _green_columns(ctx, flavor, dofs, gq, q_single):
    """The matrix L whose rows span the cluster's farfield interaction space.

    Columns are sqrt(w_nu)-scaled potential integrals against the Green
    quadrature kernels; 2k columns for the scalar flavors, 6k for the curl one.
    """
    mesh = ctx.mesh
    Z, nrm = gq.points, gq.normals
    sw = np.sqrt(gq.weights)
    pq = ctx.panel_quad(q_single)
    if flavor == P0_SLP:
        a = kernels.panel_potentials(mesh, dofs, Z, kernels.K_VALUE, q_single, pq=pq)
        c = kernels.panel_potentials(mesh, dofs, Z, kernels.K_DN_Z, q_single, z_normals=nrm, pq=pq)
        return np.hstack([a * sw, c * sw])
    if flavor == P1_DLP:
        a = kernels.p1_potentials(
            mesh, dofs, Z, kernels.K_DN_X, q_single, vertex_tris=ctx.vertex_tris, pq=pq
        )
        c = kernels.p1_potentials(
            mesh, dofs, Z, kernels.K_DN_X_DN_Z, q_single,
            z_normals=nrm, vertex_tris=ctx.vertex_tris, pq=pq,
        )
        return np.hstack([a * sw, c * sw])
    if flavor == P1_CURL:
        a = kernels.curl_potentials(
            mesh, dofs, Z, kernels.K_VALUE, q_single,
            vertex_tris=ctx.vertex_tris, curls=ctx.curls, pq=pq,
        )
        c = kernels.curl_potentials(
            mesh, dofs, Z, kernels.K_DN_Z, q_single,
            z_normals=nrm, vertex_tris=ctx.vertex_tris, curls=ctx.curls, pq=pq,
        )
        cols = [a[:, :, d] * sw for d in range(3)] + [c[:, :, d] * sw for d in range(3)]
        return np.hstack(cols)
    raise ValueError(f"unknown basis flavor {flavor!r}")


def _cross_interpolate(L, eps):
    """Row pivots tau, column pivots and V = L[:, sigma] inv(L[tau, sigma])."""
    tau, sigma, C, _ = aca_inverse_core(L, eps)
    if len(tau) == 0:
        return np.empty(0, dtype=np.int64), np.zeros((L.shape[0], 0))
    return tau, L[:, sigma] @ C


def gca_leaf(ctx, flavor, dofs, box, m, eps_aca, q_single):
    """Leaf construction: pivot dofs t_hat and interpolating matrix V_t."""
    gq = green_quadrature(green_box(box), m)
    L = _green_columns(ctx, flavor, dofs, gq, q_single)
    tau, V = _cross_interpolate(L, eps_aca)
    return np.asarray(dofs)[tau], V


def gca_nested(ctx, flavor, child_pivots, box, m, eps_aca, q_single):
    """Parent construction on the children's pivot rows only.

    Returns (t_hat, V_hat) with V_hat of shape (sum of child ranks, new rank);
    splitting V_hat row-wise per child yields the transfer matrices.
    """
    rows = np.concatenate(child_pivots)
    gq = green_quadrature(green_box(box), m)
    L = _green_columns(ctx, flavor, rows, gq, q_single)
    tau, Vhat = _cross_interpolate(L, eps_aca)
    return rows[tau], Vhat


def build_basis(ctx, tree, flavor, m, eps_aca, q_single=None, threads=1):
    """Nested cluster basis, built level-synchronously from the leaves up: all
    clusters of one depth are independent once their children are done."""
    if q_single is None:
        q_single = max(2, m)
    basis = ClusterBasis(tree)
    by_depth = {}
    for c in tree.nodes:
        by_depth.setdefault(c.depth, []).append(c)

    def build_one(c):
        if c.is_leaf:
            pivots, V = gca_leaf(ctx, flavor, tree.dofs(c), c.box, m, eps_aca, q_single)
            return c, pivots, V
        child_pivots = [basis.pivots[ch.uid] for ch in c.children]
        pivots, Vhat = gca_nested(ctx, flavor, child_pivots, c.box, m, eps_aca, q_single)
        return c, pivots, Vhat

    for depth in sorted(by_depth, reverse=True):
        for c, pivots, V in pmap(build_one, by_depth[depth], threads):
            if c.is_leaf:
                basis.V[c.uid] = V
            else:
                offset = 0
                for ch in c.children:
                    k_ch = basis.rank[ch.uid]
                    basis.E[ch.uid] = V[offset : offset + k_ch, :]
                    offset += k_ch
            basis.pivots[c.uid] = pivots
            basis.rank[c.uid] = len(pivots)
    return basis


_FLAVORS = {
    kernels.SLP: (P0_SLP, P0_SLP),
    kernels.DLP: (P0_SLP, P1_DLP),
    kernels.HYP: (P1_CURL, P1_CURL),
}


def basis_flavors(kind):
    """(row flavor, column flavor) for an operator kind."""
    return _FLAVORS[kind]


def assemble_h2(ctx, kind, block_tree, row_basis, col_basis, q_near, nearfield_cache=None, threads=1):
    """H^2-matrix: coupling matrices are the operator entries at the pivot dofs
    (well separated by admissibility, asserted), nearfield leaves dense."""

    def couple(b):
        rp = row_basis.pivots[b.row.uid]
        cp = col_basis.pivots[b.col.uid]
        return dense_block(ctx, kind, rp, cp, q_near, require_disjoint=True)

    couplings = pmap(couple, block_tree.far, threads)
    near = assemble_nearfield(ctx, kind, block_tree, q_near, cache=nearfield_cache, threads=threads)
    return H2Matrix(block_tree, row_basis, col_basis, couplings, near)
