"""P0/P1 boundary element spaces: mass matrix, L2 projection, error norms and
the harmonic test solutions used in the convergence studies."""

from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import quadrature as quad
from .kernels import FOUR_PI

P0 = "P0_triangles"
P1 = "P1_vertices"

ERROR_QUAD_ORDER = 4  # fixed; doubling it changes reported errors by < 1%


@dataclass
class DofSpace:
    kind: str
    mesh: object

    @property
    def n_dofs(self):
        return self.mesh.n_triangles if self.kind == P0 else self.mesh.n_vertices

    def support_boxes(self):
        """(n_dofs, 2, 3) min/max corners of each dof's support."""
        mesh = self.mesh
        corners = mesh.corners()
        if self.kind == P0:
            return np.stack([corners.min(axis=1), corners.max(axis=1)], axis=1)
        lo = np.full((mesh.n_vertices, 3), np.inf)
        hi = np.full((mesh.n_vertices, 3), -np.inf)
        for l in range(3):
            idx = mesh.triangles[:, l]
            np.minimum.at(lo, idx, corners.min(axis=1))
            np.maximum.at(hi, idx, corners.max(axis=1))
        return np.stack([lo, hi], axis=1)


def assemble_mass(mesh):
    """Mixed mass matrix (P0 rows x P1 columns): m_ij = area_i / 3 for each
    vertex j of triangle i."""
    F = mesh.n_triangles
    rows = np.repeat(np.arange(F), 3)
    cols = mesh.triangles.ravel()
    vals = np.repeat(mesh.areas / 3.0, 3)
    return sp.csr_matrix((vals, (rows, cols)), shape=(F, mesh.n_vertices))


def _evaluate(fn, X, tris):
    """Evaluate a surface function given points (P, Q, 3) on panels `tris`."""
    return fn(X, tris)


def l2_project(space, fn):
    """Coefficients of the L2 projection of fn onto the space.

    fn(X, tris) -> values at points X (P, Q, 3) lying on panels tris (P,).
    """
    mesh = space.mesh
    tris = np.arange(mesh.n_triangles)
    X, W, lam = quad.triangle_points(mesh, tris, ERROR_QUAD_ORDER)
    f = _evaluate(fn, X, tris)
    if space.kind == P0:
        return np.einsum("pq,pq->p", W, f) / mesh.areas
    load = np.zeros(mesh.n_vertices)
    for l in range(3):
        np.add.at(load, mesh.triangles[:, l], np.einsum("pq,pq,q->p", W, f, lam[:, l]))
    ptl = np.einsum("pq,qa,qb->pab", W, lam, lam)
    rows = np.repeat(mesh.triangles, 3, axis=1).ravel()
    cols = np.tile(mesh.triangles, (1, 3)).ravel()
    gram = sp.csr_matrix((ptl.ravel(), (rows, cols)), shape=(mesh.n_vertices,) * 2)
    return spla.spsolve(gram.tocsc(), load)


def evaluate_space(space, coeffs, X, tris, lam):
    """Pointwise values of a coefficient vector at panel quadrature points."""
    if space.kind == P0:
        return np.broadcast_to(coeffs[tris][:, None], (len(tris), lam.shape[0])).copy()
    nodal = coeffs[space.mesh.triangles[tris]]  # (P, 3)
    return nodal @ lam.T


def l2_error(space, coeffs, exact_fn):
    """|| u_h - exact ||_{L2} over the discrete surface, quadrature order 4."""
    mesh = space.mesh
    tris = np.arange(mesh.n_triangles)
    X, W, lam = quad.triangle_points(mesh, tris, ERROR_QUAD_ORDER)
    diff = evaluate_space(space, coeffs, X, tris, lam) - _evaluate(exact_fn, X, tris)
    return float(np.sqrt(np.einsum("pq,pq->", W, diff**2)))


def l2_norm(mesh, fn):
    tris = np.arange(mesh.n_triangles)
    X, W, _ = quad.triangle_points(mesh, tris, ERROR_QUAD_ORDER)
    f = _evaluate(fn, X, tris)
    return float(np.sqrt(np.einsum("pq,pq->", W, f**2)))


def surface_mean(mesh, fn):
    """Surface integral of fn divided by total area."""
    tris = np.arange(mesh.n_triangles)
    X, W, _ = quad.triangle_points(mesh, tris, ERROR_QUAD_ORDER)
    return float(np.einsum("pq,pq->", W, _evaluate(fn, X, tris)) / mesh.areas.sum())


def energy_error(apply_g, d):
    """sqrt(d^T G d) through the (possibly compressed) single-layer action."""
    d = np.asarray(d, dtype=float)
    if not d.any():
        return 0.0
    val = float(d @ apply_g(d))
    if val < -1e-12 * float(d @ d):
        raise ArithmeticError(f"energy product is negative ({val:.3e}): operator lost definiteness")
    return float(np.sqrt(max(val, 0.0)))


@dataclass
class TestSolution:
    """Harmonic function in the unit ball with its boundary traces.

    `dirichlet` and `grad` accept points of any shape (..., 3); `neumann`
    is the sphere-convention trace grad u . x/|x|.
    """

    id: str
    dirichlet: Callable
    grad: Callable

    def neumann(self, X):
        X = np.asarray(X, dtype=float)
        n = X / np.linalg.norm(X, axis=-1, keepdims=True)
        return np.einsum("...i,...i->...", self.grad(X), n)


_POINT_SOURCES = {"point1": np.array([1.2, 1.2, 1.2]), "point2": np.array([1.0, 0.25, 1.0])}


def test_traces(case_id):
    """Test solutions: 'poly' is x1^2 - x3^2; 'point1'/'point2' are fundamental
    solutions with sources outside the unit ball."""
    if case_id == "poly":
        return TestSolution(
            "poly",
            dirichlet=lambda X: np.asarray(X)[..., 0] ** 2 - np.asarray(X)[..., 2] ** 2,
            grad=lambda X: np.stack(
                [2.0 * np.asarray(X)[..., 0], np.zeros(np.asarray(X).shape[:-1]), -2.0 * np.asarray(X)[..., 2]],
                axis=-1,
            ),
        )
    if case_id in _POINT_SOURCES:
        y = _POINT_SOURCES[case_id]

        def u(X):
            r = np.linalg.norm(np.asarray(X, dtype=float) - y, axis=-1)
            return 1.0 / (FOUR_PI * r)

        def du(X):
            d = np.asarray(X, dtype=float) - y
            r = np.linalg.norm(d, axis=-1, keepdims=True)
            return -d / (FOUR_PI * r**3)

        return TestSolution(case_id, dirichlet=u, grad=du)
    raise ValueError(f"unknown test case {case_id!r}; expected poly, point1 or point2")


def dirichlet_fn(sol):
    """Panel-evaluable Dirichlet trace."""
    return lambda X, tris: sol.dirichlet(X)


def conormal_fn(sol, mesh):
    """Panel-evaluable Neumann trace with the flat-panel conormal grad u . n_panel.

    On the discrete surface this is the exact Neumann datum of the harmonic
    test solution, which keeps the convergence rates clean.
    """

    def fn(X, tris):
        return np.einsum("pqi,pi->pq", sol.grad(X), mesh.normals[tris])

    return fn
