"""Matrix containers: dense oracle, blockwise low-rank hierarchical matrix and
nested-basis H^2-matrix, all exposing matvec in natural dof ordering plus exact
storage accounting."""

import numpy as np

from . import kernels
from ._util import pmap
from .lowrank import LowRankFactor

ORACLE_CAP = 4096


class AssemblyContext:
    """Per-mesh caches shared by every operator assembly: vertex incidences,
    curl coefficients, panel quadrature points per order and the regularized
    integrals of all touching panel pairs per (kind, order)."""

    def __init__(self, mesh):
        self.mesh = mesh
        self.vertex_tris = mesh.vertex_triangles()
        self.curls = kernels.triangle_curls(mesh)
        self._panel_quad = {}
        self._singular = {}

    def panel_quad(self, q):
        if q not in self._panel_quad:
            from . import quadrature as quad

            self._panel_quad[q] = quad.triangle_points(
                self.mesh, np.arange(self.mesh.n_triangles), q
            )
        return self._panel_quad[q]

    def singular_table(self, kind, q):
        kind = kernels.SLP if kind == kernels.HYP else kind
        key = (kind, q)
        if key not in self._singular:
            self._singular[key] = kernels.SingularTable(self.mesh, kind, q, self.vertex_tris)
        return self._singular[key]

    def incident_panels(self, verts):
        if len(verts) == 0:
            return np.empty(0, dtype=np.int64)
        return np.unique(np.concatenate([self.vertex_tris[int(v)] for v in verts]).astype(np.int64))


def dense_block(ctx, kind, row_dofs, col_dofs, q, require_disjoint=False):
    """Dense Galerkin block for operator `kind` over original dof index lists."""
    pq = ctx.panel_quad(q)
    singular = None if require_disjoint else ctx.singular_table(kind, q)
    if kind == kernels.SLP:
        return kernels.slp_block(
            ctx.mesh, row_dofs, col_dofs, q, require_disjoint, pq=pq, singular=singular
        )
    if kind == kernels.DLP:
        return kernels.dlp_block(
            ctx.mesh, row_dofs, col_dofs, q, ctx.vertex_tris, require_disjoint,
            pq=pq, singular=singular,
        )
    if kind == kernels.HYP:
        return kernels.hyp_block(
            ctx.mesh, row_dofs, col_dofs, q, ctx.vertex_tris, ctx.curls, require_disjoint,
            pq=pq, singular=singular,
        )
    raise ValueError(f"unknown operator kind {kind!r}")


def assemble_dense(ctx, kind, q, cap=ORACLE_CAP):
    """Entrywise dense operator; refuses to exceed the oracle cap."""
    mesh = ctx.mesh
    nr = mesh.n_triangles if kind in (kernels.SLP, kernels.DLP) else mesh.n_vertices
    nc = mesh.n_triangles if kind == kernels.SLP else mesh.n_vertices
    if max(nr, nc) > cap:
        raise ValueError(f"dense oracle dimension {max(nr, nc)} exceeds cap {cap}")
    return dense_block(ctx, kind, np.arange(nr), np.arange(nc), q)


def assemble_nearfield(ctx, kind, block_tree, q, cache=None, threads=1):
    """Dense payloads for the nearfield leaves, in block order.

    `cache` maps (row_start, row_end, col_start, col_end) -> ndarray and lets
    different compression methods share the identical nearfield work.
    """
    rt, ct = block_tree.row_tree, block_tree.col_tree

    def build(b):
        key = (b.row.start, b.row.end, b.col.start, b.col.end)
        if cache is not None and key in cache:
            return cache[key]
        block = dense_block(ctx, kind, rt.dofs(b.row), ct.dofs(b.col), q)
        if not np.isfinite(block).all():
            raise FloatingPointError(f"non-finite nearfield entries in {b!r}")
        if cache is not None:
            cache[key] = block
        return block

    return pmap(build, block_tree.near, threads)


class DenseOperator:
    """Thin wrapper giving the dense oracle the container interface."""

    def __init__(self, matrix):
        self.matrix = matrix
        self.shape = matrix.shape

    def matvec(self, x):
        return self.matrix @ x

    def rmatvec(self, x):
        return self.matrix.T @ x

    def diagonal(self):
        return np.diag(self.matrix).copy()

    def to_dense(self):
        return self.matrix

    def storage_report(self):
        return {"basis": 0, "coupling": 0, "lowrank": 0, "nearfield": 8 * self.matrix.size}


class HMatrix:
    """Farfield leaves as low-rank factors, nearfield leaves dense."""

    def __init__(self, block_tree, far_payloads, near_payloads):
        self.block_tree = block_tree
        self.row_tree = block_tree.row_tree
        self.col_tree = block_tree.col_tree
        self.far = list(zip(block_tree.far, far_payloads))
        self.near = list(zip(block_tree.near, near_payloads))
        self.shape = (self.row_tree.n_dofs, self.col_tree.n_dofs)

    def matvec(self, x):
        xp = np.asarray(x, dtype=float)[self.col_tree.perm]
        yp = np.zeros(self.shape[0])
        for b, f in self.far:
            yp[b.row.start : b.row.end] += f.matvec(xp[b.col.start : b.col.end])
        for b, d in self.near:
            yp[b.row.start : b.row.end] += d @ xp[b.col.start : b.col.end]
        y = np.empty_like(yp)
        y[self.row_tree.perm] = yp
        return y

    def rmatvec(self, x):
        xp = np.asarray(x, dtype=float)[self.row_tree.perm]
        yp = np.zeros(self.shape[1])
        for b, f in self.far:
            yp[b.col.start : b.col.end] += f.rmatvec(xp[b.row.start : b.row.end])
        for b, d in self.near:
            yp[b.col.start : b.col.end] += d.T @ xp[b.row.start : b.row.end]
        y = np.empty_like(yp)
        y[self.col_tree.perm] = yp
        return y

    def diagonal(self):
        assert self.shape[0] == self.shape[1], "diagonal extraction requires a square operator"
        dp = np.zeros(self.shape[0])
        for b, d in self.near:
            lo = max(b.row.start, b.col.start)
            hi = min(b.row.end, b.col.end)
            if hi > lo:
                idx = np.arange(lo, hi)
                dp[idx] += d[idx - b.row.start, idx - b.col.start]
        out = np.empty_like(dp)
        out[self.row_tree.perm] = dp
        return out

    def to_dense(self):
        out = np.zeros(self.shape)
        for b, f in self.far:
            out[b.row.start : b.row.end, b.col.start : b.col.end] = f.to_dense()
        for b, d in self.near:
            out[b.row.start : b.row.end, b.col.start : b.col.end] = d
        inv_r = self.row_tree.iperm
        inv_c = self.col_tree.iperm
        return out[np.ix_(inv_r, inv_c)]

    def max_rank(self):
        return max((f.rank for _, f in self.far), default=0)

    def storage_report(self):
        lowrank = sum(f.storage_floats() for _, f in self.far)
        nearfield = sum(d.size for _, d in self.near)
        return {"basis": 0, "coupling": 0, "lowrank": 8 * lowrank, "nearfield": 8 * nearfield}


class ClusterBasis:
    """Nested cluster basis: leaf matrices V_t plus per-child transfer matrices."""

    def __init__(self, tree):
        self.tree = tree
        self.V = {}       # leaf uid -> (|t|, k_t)
        self.E = {}       # child uid -> (k_child, k_parent)
        self.rank = {}    # uid -> k_t
        self.pivots = {}  # uid -> original dof ids (algebraic interpolation rows)
        self._bottom_up = tree.bottom_up()
        self._top_down = self._bottom_up[::-1]

    def forward(self, xp):
        """x_hat_t = V_t^T x|_t for every cluster, via the transfer recursion."""
        xhat = {}
        for c in self._bottom_up:
            if c.is_leaf:
                xhat[c.uid] = self.V[c.uid].T @ xp[c.start : c.end]
            else:
                acc = np.zeros(self.rank[c.uid])
                for ch in c.children:
                    acc += self.E[ch.uid].T @ xhat[ch.uid]
                xhat[c.uid] = acc
        return xhat

    def backward(self, yhat, yp):
        """Accumulate sum_t V_t yhat_t into the permuted vector yp."""
        for c in self._top_down:
            v = yhat.get(c.uid)
            if v is None:
                continue
            if c.is_leaf:
                yp[c.start : c.end] += self.V[c.uid] @ v
            else:
                for ch in c.children:
                    contrib = self.E[ch.uid] @ v
                    if ch.uid in yhat:
                        yhat[ch.uid] += contrib
                    else:
                        yhat[ch.uid] = contrib

    def expand(self, cluster):
        """Dense V_t reconstructed through the transfer matrices (testing aid)."""
        if cluster.is_leaf:
            return self.V[cluster.uid]
        blocks = [self.expand(ch) @ self.E[ch.uid] for ch in cluster.children]
        return np.vstack(blocks)

    def storage_floats(self):
        return sum(v.size for v in self.V.values()) + sum(e.size for e in self.E.values())


class H2Matrix:
    """Shared nested bases, per-farfield-leaf coupling matrices, dense nearfield."""

    def __init__(self, block_tree, row_basis, col_basis, couplings, near_payloads):
        self.block_tree = block_tree
        self.row_tree = block_tree.row_tree
        self.col_tree = block_tree.col_tree
        self.row_basis = row_basis
        self.col_basis = col_basis
        self.far = list(zip(block_tree.far, couplings))
        self.near = list(zip(block_tree.near, near_payloads))
        self.shape = (self.row_tree.n_dofs, self.col_tree.n_dofs)

    def matvec(self, x):
        xp = np.asarray(x, dtype=float)[self.col_tree.perm]
        yp = np.zeros(self.shape[0])
        xhat = self.col_basis.forward(xp)
        yhat = {}
        for b, S in self.far:
            contrib = S @ xhat[b.col.uid]
            if b.row.uid in yhat:
                yhat[b.row.uid] += contrib
            else:
                yhat[b.row.uid] = contrib
        self.row_basis.backward(yhat, yp)
        for b, d in self.near:
            yp[b.row.start : b.row.end] += d @ xp[b.col.start : b.col.end]
        y = np.empty_like(yp)
        y[self.row_tree.perm] = yp
        return y

    def rmatvec(self, x):
        xp = np.asarray(x, dtype=float)[self.row_tree.perm]
        yp = np.zeros(self.shape[1])
        xhat = self.row_basis.forward(xp)
        yhat = {}
        for b, S in self.far:
            contrib = S.T @ xhat[b.row.uid]
            if b.col.uid in yhat:
                yhat[b.col.uid] += contrib
            else:
                yhat[b.col.uid] = contrib
        self.col_basis.backward(yhat, yp)
        for b, d in self.near:
            yp[b.col.start : b.col.end] += d.T @ xp[b.row.start : b.row.end]
        y = np.empty_like(yp)
        y[self.col_tree.perm] = yp
        return y

    def diagonal(self):
        assert self.shape[0] == self.shape[1], "diagonal extraction requires a square operator"
        dp = np.zeros(self.shape[0])
        for b, d in self.near:
            lo = max(b.row.start, b.col.start)
            hi = min(b.row.end, b.col.end)
            if hi > lo:
                idx = np.arange(lo, hi)
                dp[idx] += d[idx - b.row.start, idx - b.col.start]
        out = np.empty_like(dp)
        out[self.row_tree.perm] = dp
        return out

    def to_dense(self):
        n = self.shape[1]
        out = np.empty((self.shape[0], n))
        eye = np.eye(n)
        for j in range(n):
            out[:, j] = self.matvec(eye[:, j])
        return out

    def rank_stats(self):
        ranks = [S.shape for _, S in self.far]
        if not ranks:
            return {"max": 0, "mean": 0.0}
        flat = [r for pair in ranks for r in pair]
        return {"max": int(max(flat)), "mean": float(np.mean(flat))}

    def storage_report(self):
        basis = self.row_basis.storage_floats()
        if self.col_basis is not self.row_basis:
            basis += self.col_basis.storage_floats()
        coupling = sum(S.size for _, S in self.far)
        nearfield = sum(d.size for _, d in self.near)
        return {"basis": 8 * basis, "coupling": 8 * coupling, "lowrank": 0, "nearfield": 8 * nearfield}


def storage_total(report):
    return sum(report.values())
