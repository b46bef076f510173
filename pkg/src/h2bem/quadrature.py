"""Gauss rules on intervals and triangles, and the regularizing panel-pair rules
for singular Galerkin double integrals (identical / shared-edge / shared-vertex
panels), following the classical Sauter-Schwab relative-coordinate transforms."""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

IDENTICAL = "identical"
SHARED_EDGE = "shared_edge"
SHARED_VERTEX = "shared_vertex"
DISJOINT = "disjoint"

#: subdomain count of the regularizing transform per case
SUBDOMAINS = {IDENTICAL: 6, SHARED_EDGE: 5, SHARED_VERTEX: 2, DISJOINT: 1}


@dataclass(frozen=True)
class QuadRule1D:
    points: np.ndarray   # in (0, 1)
    weights: np.ndarray  # positive, sum to 1


@dataclass(frozen=True)
class PanelPairRule:
    """Rule for the 4-dimensional reference integral over a pair of panels.

    points has shape (N, 4): rows (u1, v1, u2, v2) with (u, v) in the chart
    simplex {0 <= v <= u <= 1} of the respective panel.  weights include the
    Jacobians of the regularizing transform but not the panel areas, so

        int_T1 int_T2 k dy dx  =  (2 A1)(2 A2) * sum_n w_n k(chi1(u1,v1), chi2(u2,v2))

    with the chart chi(u, v) = P1 + u (P2 - P1) + v (P3 - P2).
    """

    case: str
    points: np.ndarray
    weights: np.ndarray


def _frozen(a):
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@lru_cache(maxsize=None)
def gauss_legendre(q):
    """q-point Gauss-Legendre rule on [0,1], exact for degree <= 2q-1."""
    if q < 1:
        raise ValueError("quadrature order must be >= 1")
    x, w = np.polynomial.legendre.leggauss(q)
    return QuadRule1D(_frozen(0.5 * (x + 1.0)), _frozen(0.5 * w))


@lru_cache(maxsize=None)
def triangle_rule(q):
    """Tensor rule on the reference triangle {x,y >= 0, x+y <= 1} via the Duffy
    substitution (x, y) = (s(1-t), st); q*q points, weights sum to 1/2."""
    g = gauss_legendre(q)
    s, t = np.meshgrid(g.points, g.points, indexing="ij")
    ws, wt = np.meshgrid(g.weights, g.weights, indexing="ij")
    x = (s * (1.0 - t)).ravel()
    y = (s * t).ravel()
    w = (ws * wt * s).ravel()
    return _frozen(np.column_stack([x, y])), _frozen(w)


def triangle_points(mesh, tris, q):
    """Quadrature points, weights and barycentrics for panels `tris`.

    Returns (X, w, lam): X (len(tris), q*q, 3) physical points, w (len(tris), q*q)
    weights including the 2*area surface Jacobian, lam (q*q, 3) barycentrics.
    """
    pts, w = triangle_rule(q)
    c = mesh.vertices[mesh.triangles[tris]]
    x, y = pts[:, 0], pts[:, 1]
    X = (
        c[:, None, 0, :]
        + x[None, :, None] * (c[:, 1, :] - c[:, 0, :])[:, None, :]
        + y[None, :, None] * (c[:, 2, :] - c[:, 0, :])[:, None, :]
    )
    W = w[None, :] * (2.0 * mesh.areas[tris])[:, None]
    lam = np.column_stack([1.0 - x - y, x, y])
    return X, W, lam


def classify_panel_pair(tri_a, tri_b):
    """Case tag plus vertex permutations placing shared simplices first.

    tri_a, tri_b: length-3 sequences of global vertex indices.
    Returns (case, perm_a, perm_b); perm_x[i] is the position in tri_x of the
    i-th vertex of the permuted triangle.  For shared_edge the permuted
    triangles start with the two shared vertices in the same order; for
    shared_vertex with the shared vertex.
    """
    a = [int(v) for v in tri_a]
    b = [int(v) for v in tri_b]
    ident = (0, 1, 2)
    if a == b:
        return IDENTICAL, ident, ident
    shared = sorted(set(a) & set(b))
    if len(shared) == 2:
        p, q = shared
        pa = (a.index(p), a.index(q))
        perm_a = pa + tuple(i for i in range(3) if i not in pa)
        pb = (b.index(p), b.index(q))
        perm_b = pb + tuple(i for i in range(3) if i not in pb)
        return SHARED_EDGE, perm_a, perm_b
    if len(shared) == 1:
        p = shared[0]
        ia, ib = a.index(p), b.index(p)
        perm_a = (ia,) + tuple(i for i in range(3) if i != ia)
        perm_b = (ib,) + tuple(i for i in range(3) if i != ib)
        return SHARED_VERTEX, perm_a, perm_b
    return DISJOINT, ident, ident


def _tensor4(q):
    g = gauss_legendre(q)
    p = [g.points] * 4
    w = [g.weights] * 4
    P = np.stack(np.meshgrid(*p, indexing="ij"), axis=-1).reshape(-1, 4)
    W = np.stack(np.meshgrid(*w, indexing="ij"), axis=-1).reshape(-1, 4).prod(axis=1)
    return P, W


def _identical_maps(e1, e2, e3, xi):
    w6 = xi**3 * e1**2 * e2
    maps = [
        ((xi, xi * (1 - e1 + e1 * e2)), (xi * (1 - e1 * e2 * e3), xi * (1 - e1))),
        ((xi * (1 - e1 * e2 * e3), xi * (1 - e1)), (xi, xi * (1 - e1 + e1 * e2))),
        ((xi, xi * e1 * (1 - e2 + e2 * e3)), (xi * (1 - e1 * e2), xi * e1 * (1 - e2))),
        ((xi * (1 - e1 * e2), xi * e1 * (1 - e2)), (xi, xi * e1 * (1 - e2 + e2 * e3))),
        ((xi * (1 - e1 * e2 * e3), xi * e1 * (1 - e2 * e3)), (xi, xi * e1 * (1 - e2))),
        ((xi, xi * e1 * (1 - e2)), (xi * (1 - e1 * e2 * e3), xi * e1 * (1 - e2 * e3))),
    ]
    return [(x, y, w6) for x, y in maps]


def _edge_maps(e1, e2, e3, xi):
    wa = xi**3 * e1**2
    wb = xi**3 * e1**2 * e2
    return [
        ((xi, xi * e1 * e3), (xi * (1 - e1 * e2), xi * e1 * (1 - e2)), wa),
        ((xi, xi * e1), (xi * (1 - e1 * e2 * e3), xi * e1 * e2 * (1 - e3)), wb),
        ((xi * (1 - e1 * e2), xi * e1 * (1 - e2)), (xi, xi * e1 * e2 * e3), wb),
        ((xi * (1 - e1 * e2 * e3), xi * e1 * e2 * (1 - e3)), (xi, xi * e1), wb),
        ((xi * (1 - e1 * e2 * e3), xi * e1 * (1 - e2 * e3)), (xi, xi * e1 * e2), wb),
    ]


def _vertex_maps(e1, e2, e3, xi):
    w2 = xi**3 * e2
    return [
        ((xi, xi * e1), (xi * e2, xi * e2 * e3), w2),
        ((xi * e2, xi * e2 * e3), (xi, xi * e1), w2),
    ]


@lru_cache(maxsize=None)
def sauter_schwab_rule(case, q):
    """Panel-pair rule for the given adjacency case at tensor order q.

    Point count is SUBDOMAINS[case] * q**4; for the disjoint case the rule is
    the plain tensor product of two Duffy triangle rules.
    """
    if q < 1:
        raise ValueError("quadrature order must be >= 1")
    if case == DISJOINT:
        g = gauss_legendre(q)
        s1, t1, s2, t2 = np.meshgrid(g.points, g.points, g.points, g.points, indexing="ij")
        w = np.meshgrid(g.weights, g.weights, g.weights, g.weights, indexing="ij")
        pts = np.column_stack(
            [s1.ravel(), (s1 * t1).ravel(), s2.ravel(), (s2 * t2).ravel()]
        )
        wts = (w[0] * w[1] * w[2] * w[3] * s1 * s2).ravel()
        return PanelPairRule(case, _frozen(pts), _frozen(wts))
    maps = {IDENTICAL: _identical_maps, SHARED_EDGE: _edge_maps, SHARED_VERTEX: _vertex_maps}
    if case not in maps:
        raise ValueError(f"unknown panel-pair case {case!r}")
    P, W = _tensor4(q)
    e1, e2, e3, xi = P[:, 0], P[:, 1], P[:, 2], P[:, 3]
    pts, wts = [], []
    for xhat, yhat, jac in maps[case](e1, e2, e3, xi):
        pts.append(np.column_stack([xhat[0], xhat[1], yhat[0], yhat[1]]))
        wts.append(W * jac)
    return PanelPairRule(case, _frozen(np.vstack(pts)), _frozen(np.concatenate(wts)))


def chart_points(corners, uv):
    """Map chart coordinates to physical points.

    corners: (..., 3, 3) permuted triangle corners (P1, P2, P3);
    uv: (N, 2) points of the simplex {0 <= v <= u <= 1}.
    Returns (..., N, 3) points P1 + u (P2-P1) + v (P3-P2).
    """
    u = uv[:, 0][:, None]
    v = uv[:, 1][:, None]
    p1 = corners[..., 0, :][..., None, :]
    p2 = corners[..., 1, :][..., None, :]
    p3 = corners[..., 2, :][..., None, :]
    return p1 + u * (p2 - p1) + v * (p3 - p2)


def chart_bary(uv):
    """Barycentric coordinates (w.r.t. the permuted corners) of chart points."""
    u, v = uv[:, 0], uv[:, 1]
    return np.column_stack([1.0 - u, u - v, v])
