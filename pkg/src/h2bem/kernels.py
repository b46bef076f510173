"""Laplace free-space kernel, its directional derivatives, single-panel
potential integrals and the Galerkin double integrals for the single-layer,
double-layer and hypersingular operators.

The bulk evaluation paths are written around Gram-matrix distance computation
(|x-z|^2 = |x|^2 + |z|^2 - 2 x.z) so the inner loops run inside BLAS; panel
pairs sharing a vertex, an edge or being identical are then patched with the
regularizing quadrature rules."""

import numpy as np

from . import quadrature as quad

FOUR_PI = 4.0 * np.pi

SLP = "slp"
DLP = "dlp"
HYP = "hyp"

#: single-integral kernel tags used by the compression schemes
K_VALUE = "value"            # g(x, z)
K_DN_Z = "dn_z"              # <grad_z g(x, z), n_z>
K_DN_X = "dn_x"              # <grad_x g(x, z), n_panel(x)>
K_DN_X_DN_Z = "dn_x_dn_z"    # n_panel(x)^T grad_x grad_z g(x, z) n_z

_TINY = 1e-100  # keeps r^3 representable; clamped entries are always overwritten


def laplace_kernel(x, y):
    """g(x, y) = 1/(4 pi |x-y|), and 0 on the diagonal x == y."""
    d = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
    r = np.linalg.norm(d, axis=-1)
    with np.errstate(divide="ignore"):
        g = 1.0 / (FOUR_PI * r)
    return np.where(r == 0.0, 0.0, g)


def kernel_dn(x, y, n, side):
    """Directional derivative of g in the unit direction n at argument `side`.

    side='y' gives <x-y, n> / (4 pi |x-y|^3); side='x' the negative.
    """
    d = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
    r2 = np.einsum("...i,...i->...", d, d)
    if np.any(r2 == 0.0):
        raise ValueError("kernel derivative undefined at x == y")
    val = np.einsum("...i,...i->...", d, np.asarray(n, dtype=float)) / (FOUR_PI * r2 * np.sqrt(r2))
    if side == "y":
        return val
    if side == "x":
        return -val
    raise ValueError(f"side must be 'x' or 'y', got {side!r}")


def _pair_kernel(X, Y, kind, na=None, nb=None):
    """Kernel values at broadcast point pairs (slow general form, used by the
    regularized rules where the point count is modest)."""
    d = X - Y
    r2 = np.einsum("...i,...i->...", d, d)
    r = np.sqrt(r2)
    if kind == K_VALUE:
        return 1.0 / (FOUR_PI * r)
    if kind == K_DN_Z:
        return np.einsum("...i,...i->...", d, nb) / (FOUR_PI * r2 * r)
    if kind == K_DN_X:
        return -np.einsum("...i,...i->...", d, na) / (FOUR_PI * r2 * r)
    if kind == K_DN_X_DN_Z:
        dna = np.einsum("...i,...i->...", d, na)
        dnb = np.einsum("...i,...i->...", d, nb)
        nanb = np.einsum("...i,...i->...", na, nb)
        return (nanb - 3.0 * dna * dnb / r2) / (FOUR_PI * r2 * r)
    raise ValueError(f"unknown kernel tag {kind!r}")


def _dist2(X, Z, xx=None, zz=None):
    """|x - z|^2 via the Gram identity, built in place; clamped away from zero."""
    r2 = X @ Z.T
    r2 *= -2.0
    if xx is None:
        xx = np.einsum("ij,ij->i", X, X)
    if zz is None:
        zz = np.einsum("ij,ij->i", Z, Z)
    r2 += xx[:, None]
    r2 += zz[None, :]
    return np.maximum(r2, _TINY, out=r2)


def _chunks(n, size):
    for lo in range(0, n, size):
        yield slice(lo, min(lo + size, n))


# ---------------------------------------------------------------------------
# single integrals (potential of one basis function at external points)
# ---------------------------------------------------------------------------

def panel_potentials(mesh, tris, Z, kind, q, z_normals=None, bary=False, chunk=4_000_000, pq=None):
    """Regular quadrature of basis x kernel over flat panels.

    tris: (P,) panel indices; Z: (N, 3) evaluation points outside the panels.
    Returns (P, N) panel integrals, or (P, N, 3) integrals weighted by the
    barycentric coordinate of each local vertex when bary=True.
    """
    tris = np.asarray(tris, dtype=np.int64)
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    if pq is None:
        X, W, lam = quad.triangle_points(mesh, tris, q)
    else:
        X_all, W_all, lam = pq
        X, W = X_all[tris], W_all[tris]
    P, Q = W.shape
    N = len(Z)
    need_nz = kind in (K_DN_Z, K_DN_X_DN_Z)
    if need_nz and z_normals is None:
        raise ValueError(f"kind {kind!r} requires z_normals")
    nz = None if z_normals is None else np.asarray(z_normals, dtype=float)
    zdotnz = np.einsum("nj,nj->n", Z, nz) if need_nz else None
    na = mesh.normals[tris] if kind in (K_DN_X, K_DN_X_DN_Z) else None
    out = np.empty((P, N, 3)) if bary else np.empty((P, N))
    rows = max(1, chunk // max(1, Q * N))
    for sl in _chunks(P, rows):
        Xf = X[sl].reshape(-1, 3)
        r2 = _dist2(Xf, Z)
        r = np.sqrt(r2)
        if kind == K_VALUE:
            k = 1.0 / (FOUR_PI * r)
        elif kind == K_DN_Z:
            num = (Xf @ nz.T) - zdotnz[None, :]  # <x - z, n_z>
            k = num / (FOUR_PI * r2 * r)
        elif kind == K_DN_X:
            p = sl.stop - sl.start
            xa = np.einsum("pqj,pj->pq", X[sl], na[sl]).reshape(-1)  # x . n_a
            za = na[sl] @ Z.T                                        # n_a . z  (p, N)
            num = xa[:, None] - np.repeat(za, Q, axis=0)
            k = -num / (FOUR_PI * r2 * r)
        elif kind == K_DN_X_DN_Z:
            xa = np.einsum("pqj,pj->pq", X[sl], na[sl]).reshape(-1)
            za = na[sl] @ Z.T
            dna = xa[:, None] - np.repeat(za, Q, axis=0)   # <x-z, n_a>
            dnz = (Xf @ nz.T) - zdotnz[None, :]            # <x-z, n_z>
            nanz = np.repeat(na[sl] @ nz.T, Q, axis=0)     # <n_a, n_z>
            k = (nanz - 3.0 * dna * dnz / r2) / (FOUR_PI * r2 * r)
        else:
            raise ValueError(f"unknown kernel tag {kind!r}")
        k = k.reshape(-1, Q, N)
        if bary:
            out[sl] = np.einsum("pqn,pq,ql->pnl", k, W[sl], lam, optimize=True)
        else:
            out[sl] = np.einsum("pqn,pq->pn", k, W[sl], optimize=True)
    return out


def p1_potentials(mesh, verts, Z, kind, q, z_normals=None, vertex_tris=None, pq=None):
    """Hat-function potentials: out[r, n] = int phi_{verts[r]}(x) kernel(x, Z[n]) dx."""
    verts = np.asarray(verts, dtype=np.int64)
    Z = np.atleast_2d(Z)
    if vertex_tris is None:
        vertex_tris = mesh.vertex_triangles()
    panels = np.unique(np.concatenate([vertex_tris[int(v)] for v in verts]).astype(np.int64))
    vals = panel_potentials(mesh, panels, Z, kind, q, z_normals=z_normals, bary=True, pq=pq)
    rowpos = -np.ones(mesh.n_vertices, dtype=np.int64)
    rowpos[verts] = np.arange(len(verts))
    out = np.zeros((len(verts), len(Z)))
    ri = rowpos[mesh.triangles[panels]]  # (P, 3)
    for l in range(3):
        keep = np.flatnonzero(ri[:, l] >= 0)
        if len(keep):
            np.add.at(out, ri[keep, l], vals[keep, :, l])
    return out


def curl_potentials(mesh, verts, Z, kind, q, z_normals=None, vertex_tris=None, curls=None, pq=None):
    """Surface-curl-weighted potentials, one component per spatial direction:

    out[r, n, d] = int (curl phi_{verts[r]})_d (x) kernel(x, Z[n]) dx.

    The curl is constant per panel, so this reduces to plain P0 panel
    potentials scattered with the curl coefficients.
    """
    verts = np.asarray(verts, dtype=np.int64)
    Z = np.atleast_2d(Z)
    if vertex_tris is None:
        vertex_tris = mesh.vertex_triangles()
    if curls is None:
        curls = triangle_curls(mesh)
    panels = np.unique(np.concatenate([vertex_tris[int(v)] for v in verts]).astype(np.int64))
    vals = panel_potentials(mesh, panels, Z, kind, q, z_normals=z_normals, pq=pq)
    rowpos = -np.ones(mesh.n_vertices, dtype=np.int64)
    rowpos[verts] = np.arange(len(verts))
    out = np.zeros((len(verts), len(Z), 3))
    ri = rowpos[mesh.triangles[panels]]
    for l in range(3):
        keep = np.flatnonzero(ri[:, l] >= 0)
        if len(keep):
            np.add.at(out, ri[keep, l], vals[keep, :, None] * curls[panels[keep], l, None, :])
    return out


def support_box(mesh, space_kind, dof):
    """Axis-parallel bounding box of a dof support: (2, 3) array [min; max]."""
    if space_kind == "P0_triangles":
        pts = mesh.vertices[mesh.triangles[dof]]
    elif space_kind == "P1_vertices":
        inc = [f for f in range(mesh.n_triangles) if dof in mesh.triangles[f]]
        pts = mesh.vertices[mesh.triangles[inc]].reshape(-1, 3)
    else:
        raise ValueError(f"unknown space kind {space_kind!r}")
    return np.stack([pts.min(axis=0), pts.max(axis=0)])


def potential_integral(mesh, space_kind, dof, xi, kind, q, xi_normal=None):
    """Single surface integral of (basis function x kernel) by regular quadrature.

    xi must lie outside the dof's support bounding box (the separation the
    admissibility and Green-box constructions guarantee); violating it raises.
    """
    xi = np.asarray(xi, dtype=float)
    box = support_box(mesh, space_kind, dof)
    if bool(np.all(xi >= box[0]) and np.all(xi <= box[1])):
        raise ValueError(
            f"evaluation point {xi} inside support box of dof {dof}: separation assumption violated"
        )
    zn = None if xi_normal is None else np.asarray(xi_normal, dtype=float)[None, :]
    if space_kind == "P0_triangles":
        return float(panel_potentials(mesh, [dof], xi[None, :], kind, q, z_normals=zn)[0, 0])
    return float(p1_potentials(mesh, [dof], xi[None, :], kind, q, z_normals=zn)[0, 0])


def triangle_curls(mesh):
    """Surface curl n x grad of each P1 hat function, constant per panel.

    Returns (F, 3, 3): curls[f, l] = (V_{l+1} - V_{l+2}) / (2 area_f) for the
    hat of local vertex l.  Rows sum to zero (partition of unity).
    """
    c = mesh.corners()
    out = np.empty_like(c)
    for l in range(3):
        out[:, l, :] = c[:, (l + 1) % 3, :] - c[:, (l + 2) % 3, :]
    return out / (2.0 * mesh.areas)[:, None, None]


# ---------------------------------------------------------------------------
# double integrals (Galerkin panel pairs)
# ---------------------------------------------------------------------------

def _classify_pairs(mesh, pa, pb):
    """Shared-vertex count per pair: 0 disjoint, 1 vertex, 2 edge, 3 identical."""
    ta = mesh.triangles[pa]
    tb = mesh.triangles[pb]
    shared = np.zeros(len(pa), dtype=np.int8)
    for i in range(3):
        for j in range(3):
            shared += ta[:, i] == tb[:, j]
    return np.where(pa == pb, 3, shared)


_CASE_OF_CODE = {0: quad.DISJOINT, 1: quad.SHARED_VERTEX, 2: quad.SHARED_EDGE, 3: quad.IDENTICAL}


def pair_integrals(mesh, pa, pb, kind, q, chunk=2_000_000):
    """Galerkin double integrals over panel pairs (pa[i], pb[i]) through the
    regularizing transforms (any adjacency case).

    kind=SLP: (B,) values of int int g.
    kind=DLP: (B, 3) values of int int dg/dn_y lambda_l, l the local vertex of
    the column panel in original order; identical coplanar pairs are zero.
    """
    pa = np.asarray(pa, dtype=np.int64)
    pb = np.asarray(pb, dtype=np.int64)
    B = len(pa)
    out = np.zeros((B, 3)) if kind == DLP else np.zeros(B)
    if B == 0:
        return out
    codes = _classify_pairs(mesh, pa, pb)
    for code in np.unique(codes):
        case = _CASE_OF_CODE[int(code)]
        idx = np.flatnonzero(codes == code)
        if kind == DLP and case == quad.IDENTICAL:
            continue  # flat panel: <x-y, n> = 0 identically
        rule = quad.sauter_schwab_rule(case, q)
        if case == quad.DISJOINT:
            perm_a = np.tile(np.arange(3), (len(idx), 1))
            perm_b = perm_a
        else:
            perm_a = np.empty((len(idx), 3), dtype=np.int64)
            perm_b = np.empty((len(idx), 3), dtype=np.int64)
            for r, p in enumerate(idx):
                _, qa, qb = quad.classify_panel_pair(mesh.triangles[pa[p]], mesh.triangles[pb[p]])
                perm_a[r] = qa
                perm_b[r] = qb
        N = len(rule.weights)
        bary = quad.chart_bary(rule.points[:, 2:]) if kind == DLP else None
        for sl in _chunks(len(idx), max(1, chunk // N)):
            sub = idx[sl]
            ca = mesh.vertices[np.take_along_axis(mesh.triangles[pa[sub]], perm_a[sl], axis=1)]
            cb = mesh.vertices[np.take_along_axis(mesh.triangles[pb[sub]], perm_b[sl], axis=1)]
            X = quad.chart_points(ca, rule.points[:, :2])
            Y = quad.chart_points(cb, rule.points[:, 2:])
            scale = 4.0 * mesh.areas[pa[sub]] * mesh.areas[pb[sub]]
            if kind == SLP:
                k = _pair_kernel(X, Y, K_VALUE)
                vals = np.einsum("bn,n->b", k, rule.weights)
                if case in (quad.SHARED_EDGE, quad.SHARED_VERTEX):
                    # average with the orientation-swapped rule (also valid for
                    # the same 4D integral) so entries are exactly symmetric
                    Xs = quad.chart_points(ca, rule.points[:, 2:])
                    Ys = quad.chart_points(cb, rule.points[:, :2])
                    ks = _pair_kernel(Xs, Ys, K_VALUE)
                    vals = 0.5 * (vals + np.einsum("bn,n->b", ks, rule.weights))
                out[sub] = vals * scale
            else:
                nb = mesh.normals[pb[sub]][:, None, :]
                k = _pair_kernel(X, Y, K_DN_Z, nb=nb)
                vals = np.einsum("bn,n,nl->bl", k, rule.weights, bary, optimize=True) * scale[:, None]
                # scatter from the permuted local frame back to original local vertices
                tmp = np.zeros_like(vals)
                np.put_along_axis(tmp, perm_b[sl], vals, axis=1)
                out[sub] = tmp
    return out


def _shared_pair_indices(mesh, panels_a, panels_b):
    """Index pairs (into panels_a x panels_b) that share at least one vertex."""
    ta = mesh.triangles[panels_a]
    tb = mesh.triangles[panels_b]
    hit = np.zeros((len(panels_a), len(panels_b)), dtype=bool)
    for i in range(3):
        for j in range(3):
            hit |= ta[:, i][:, None] == tb[:, j][None, :]
    return np.nonzero(hit)


def touching_pairs(mesh, vertex_tris=None):
    """All ordered panel pairs sharing at least one vertex (incl. identical)."""
    if vertex_tris is None:
        vertex_tris = mesh.vertex_triangles()
    pairs = set()
    for inc in vertex_tris:
        for f in inc:
            for g in inc:
                pairs.add(f * mesh.n_triangles + g)
    keys = np.array(sorted(pairs), dtype=np.int64)
    return keys


class SingularTable:
    """Precomputed regularized integrals for every touching panel pair."""

    def __init__(self, mesh, kind, q, vertex_tris=None):
        self.n = mesh.n_triangles
        self.keys = touching_pairs(mesh, vertex_tris)
        pa = self.keys // self.n
        pb = self.keys % self.n
        self.values = pair_integrals(mesh, pa, pb, kind, q)

    def lookup(self, pa, pb):
        key = pa * self.n + pb
        pos = np.searchsorted(self.keys, key)
        safe = np.minimum(pos, len(self.keys) - 1)
        if not np.array_equal(self.keys[safe], key):
            raise KeyError("panel pair missing from the singular table")
        return self.values[safe]


def panel_pair_matrix(mesh, panels_a, panels_b, kind, q, chunk=16_000_000, pq=None, singular=None):
    """All-pairs Galerkin integrals between two panel sets.

    Bulk pairs use the tensor rule in BLAS form; touching pairs are patched
    with the regularizing rules (or looked up in a precomputed table).
    kind=SLP returns (Pa, Pb); kind=DLP returns (Pa, Pb, 3) contributions per
    local vertex of the column panel.
    """
    panels_a = np.asarray(panels_a, dtype=np.int64)
    panels_b = np.asarray(panels_b, dtype=np.int64)
    na, nb = len(panels_a), len(panels_b)
    shape = (na, nb, 3) if kind == DLP else (na, nb)
    if na == 0 or nb == 0:
        return np.zeros(shape)
    if pq is None:
        Xa, Wa, _ = quad.triangle_points(mesh, panels_a, q)
        Xb, Wb, lam = quad.triangle_points(mesh, panels_b, q)
    else:
        X_all, W_all, lam = pq
        Xa, Wa = X_all[panels_a], W_all[panels_a]
        Xb, Wb = X_all[panels_b], W_all[panels_b]
    Q = Wa.shape[1]
    Xbf = Xb.reshape(-1, 3)
    sa, sb = _shared_pair_indices(mesh, panels_a, panels_b)
    shared_by_row = {}
    for i, j in zip(sa, sb):
        shared_by_row.setdefault(int(i), []).append(int(j))
    out = np.empty(shape)
    if kind == DLP:
        nb_n = mesh.normals[panels_b]
        ydotn = np.einsum("bqj,bj->bq", Xb, nb_n)  # (nb, Q)
    zz = np.einsum("ij,ij->i", Xbf, Xbf)
    wbf = Wb.reshape(-1)
    rows = max(1, chunk // max(1, Q * nb * Q))
    for sl in _chunks(na, rows):
        p = sl.stop - sl.start
        Xf = Xa[sl].reshape(-1, 3)
        r2 = _dist2(Xf, Xbf, zz=zz)  # (pQ, nbQ)
        if kind == SLP:
            k = np.sqrt(r2, out=r2)
            np.reciprocal(k, out=k)
            k *= 1.0 / FOUR_PI
            k *= wbf[None, :]
            k4 = k.reshape(p, Q, nb, Q)
            for i in range(sl.start, sl.stop):
                js = shared_by_row.get(i)
                if js:  # touching pairs get the regularized value below
                    k4[i - sl.start, :, js, :] = 0.0
            kw = k4.sum(axis=3)
            out[sl] = np.einsum("pib,pi->pb", kw, Wa[sl])
        else:
            r3 = r2 * np.sqrt(r2)
            r3 *= FOUR_PI
            xdotn = Xf @ nb_n.T  # (pQ, nb)
            k = xdotn[:, :, None] - ydotn[None, :, :]
            k /= r3.reshape(p * Q, nb, Q)
            k4 = k.reshape(p, Q, nb, Q)
            for i in range(sl.start, sl.stop):
                js = shared_by_row.get(i)
                if js:
                    k4[i - sl.start, :, js, :] = 0.0
            k4 *= Wb[None, None, :, :]
            v = k4.reshape(-1, Q) @ lam  # (p Q nb, 3)
            out[sl] = np.einsum("pibl,pi->pbl", v.reshape(p, Q, nb, 3), Wa[sl])
    if len(sa):
        if singular is not None:
            out[sa, sb] = singular.lookup(panels_a[sa], panels_b[sb])
        else:
            out[sa, sb] = pair_integrals(mesh, panels_a[sa], panels_b[sb], kind, q)
    return out


def slp_block(mesh, rows, cols, q, require_disjoint=False, pq=None, singular=None):
    """Dense single-layer block: rows x cols panel indices."""
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    if require_disjoint:
        sa, _ = _shared_pair_indices(mesh, rows, cols)
        if len(sa):
            raise ValueError("expected well-separated panels, found touching pair")
    return panel_pair_matrix(mesh, rows, cols, SLP, q, pq=pq, singular=singular)


def dlp_block(mesh, rows, cols, q, vertex_tris=None, require_disjoint=False, pq=None, singular=None):
    """Dense double-layer block: P0 rows (panels) x P1 cols (vertices)."""
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    if vertex_tris is None:
        vertex_tris = mesh.vertex_triangles()
    panels_b = np.unique(np.concatenate([vertex_tris[int(j)] for j in cols]).astype(np.int64))
    if require_disjoint:
        sa, _ = _shared_pair_indices(mesh, rows, panels_b)
        if len(sa):
            raise ValueError("expected well-separated panels, found touching pair")
    vals = panel_pair_matrix(mesh, rows, panels_b, DLP, q, pq=pq, singular=singular)
    colpos = -np.ones(mesh.n_vertices, dtype=np.int64)
    colpos[cols] = np.arange(len(cols))
    block = np.zeros((len(rows), len(cols)))
    cj = colpos[mesh.triangles[panels_b]]  # (Pb, 3)
    for l in range(3):
        keep = np.flatnonzero(cj[:, l] >= 0)
        if len(keep):
            np.add.at(block.T, cj[keep, l], vals[:, keep, l].T)
    return block


def hyp_block(
    mesh, rows, cols, q, vertex_tris=None, curls=None, require_disjoint=False, pq=None, singular=None
):
    """Dense hypersingular block via the surface-curl representation:

        w_ij = sum over incident panel pairs of <curl_i, curl_j> int int g.
    """
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    if vertex_tris is None:
        vertex_tris = mesh.vertex_triangles()
    if curls is None:
        curls = triangle_curls(mesh)
    panels_a = np.unique(np.concatenate([vertex_tris[int(i)] for i in rows]).astype(np.int64))
    panels_b = np.unique(np.concatenate([vertex_tris[int(j)] for j in cols]).astype(np.int64))
    if require_disjoint:
        sa, _ = _shared_pair_indices(mesh, panels_a, panels_b)
        if len(sa):
            raise ValueError("expected well-separated panels, found touching pair")
    vals = panel_pair_matrix(mesh, panels_a, panels_b, SLP, q, pq=pq, singular=singular)
    rowpos = -np.ones(mesh.n_vertices, dtype=np.int64)
    rowpos[rows] = np.arange(len(rows))
    colpos = -np.ones(mesh.n_vertices, dtype=np.int64)
    colpos[cols] = np.arange(len(cols))
    ri = rowpos[mesh.triangles[panels_a]]  # (Pa, 3)
    cj = colpos[mesh.triangles[panels_b]]  # (Pb, 3)
    ca = curls[panels_a]
    cb = curls[panels_b]
    block = np.zeros((len(rows), len(cols)))
    for la in range(3):
        keep_a = ri[:, la] >= 0
        if not keep_a.any():
            continue
        for lb in range(3):
            keep_b = cj[:, lb] >= 0
            if not keep_b.any():
                continue
            dots = ca[keep_a, la, :] @ cb[keep_b, lb, :].T
            contrib = vals[np.ix_(keep_a, keep_b)] * dots
            np.add.at(block, (ri[keep_a, la][:, None], cj[keep_b, lb][None, :]), contrib)
    return block


def galerkin_entry(mesh, i, j, kind, q):
    """Single Galerkin matrix entry for operator `kind` at nearfield order q."""
    if kind == SLP:
        val = slp_block(mesh, [i], [j], q)
    elif kind == DLP:
        val = dlp_block(mesh, [i], [j], q)
    elif kind == HYP:
        val = hyp_block(mesh, [i], [j], q)
    else:
        raise ValueError(f"unknown operator kind {kind!r}")
    val = float(val[0, 0])
    if not np.isfinite(val):
        raise FloatingPointError(f"non-finite {kind} entry for dof pair ({i}, {j})")
    return val
