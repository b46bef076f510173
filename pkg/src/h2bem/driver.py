"""Problem setup and experiment drivers: operator assembly by method, the
Dirichlet-to-Neumann and Neumann-to-Dirichlet runs, and record dicts for the
CSV outputs."""

import time
from dataclasses import dataclass, field

import numpy as np

from . import gca, hca, kernels, solver, spaces
from .clustering import BlockTree, build_cluster_tree
from .containers import AssemblyContext, DenseOperator, assemble_dense, storage_total
from .mesh import mesh_width, sphere_mesh
from .params import DENSE, GCA, HCA


@dataclass
class ProblemSetup:
    """Mesh with spaces, cluster trees and lazily built operators.

    Caches make repeated assemblies (multiple problems, shared nearfield
    between compression methods) cheap; keyed by exact parameters so results
    stay deterministic.
    """

    mesh: object
    params: object
    ctx: AssemblyContext = None
    tree_p0: object = None
    tree_p1: object = None
    _block_trees: dict = field(default_factory=dict)
    _operators: dict = field(default_factory=dict)
    _bases: dict = field(default_factory=dict)
    _nearfield: dict = field(default_factory=dict)
    _mass: object = None

    def __post_init__(self):
        p = self.params
        self.ctx = AssemblyContext(self.mesh)
        self.space_p0 = spaces.DofSpace(spaces.P0, self.mesh)
        self.space_p1 = spaces.DofSpace(spaces.P1, self.mesh)
        self.tree_p0 = build_cluster_tree(self.space_p0.support_boxes(), p.r_leaf)
        self.tree_p1 = build_cluster_tree(self.space_p1.support_boxes(), p.r_leaf)

    def block_tree(self, kind):
        if kind not in self._block_trees:
            row = self.tree_p1 if kind == kernels.HYP else self.tree_p0
            col = self.tree_p0 if kind == kernels.SLP else self.tree_p1
            self._block_trees[kind] = BlockTree(row, col, self.params.eta)
        return self._block_trees[kind]

    def mass(self):
        if self._mass is None:
            self._mass = spaces.assemble_mass(self.mesh)
        return self._mass

    def basis(self, tree_name, flavor):
        key = (tree_name, flavor)
        if key not in self._bases:
            tree = self.tree_p0 if tree_name == "p0" else self.tree_p1
            p = self.params
            self._bases[key] = gca.build_basis(
                self.ctx, tree, flavor, p.order, p.eps_aca, threads=p.threads
            )
        return self._bases[key]

    def operator(self, kind, method=None):
        p = self.params
        method = method or p.method
        key = (kind, method)
        if key in self._operators:
            return self._operators[key]
        nf_cache = self._nearfield.setdefault((kind, p.q_near), {})
        if method == DENSE:
            op = DenseOperator(assemble_dense(self.ctx, kind, p.q_near, cap=p.oracle_cap))
        elif method == HCA:
            op = hca.assemble_hmatrix(
                self.ctx,
                kind,
                self.block_tree(kind),
                p.order,
                p.eps_aca,
                p.q_near,
                eps_comp=p.eps_comp,
                nearfield_cache=nf_cache,
                threads=p.threads,
            )
        elif method == GCA:
            rf, cf = gca.basis_flavors(kind)
            row_tree = "p1" if kind == kernels.HYP else "p0"
            col_tree = "p0" if kind == kernels.SLP else "p1"
            rb = self.basis(row_tree, rf)
            cb = rb if (rf == cf and row_tree == col_tree) else self.basis(col_tree, cf)
            op = gca.assemble_h2(
                self.ctx,
                kind,
                self.block_tree(kind),
                rb,
                cb,
                p.q_near,
                nearfield_cache=nf_cache,
                threads=p.threads,
            )
        else:
            raise ValueError(f"unknown method {method!r}")
        self._operators[key] = op
        return op


def setup_sphere(level, params):
    return ProblemSetup(sphere_mesh(level), params.resolved())


def run_dtn(setup, case_id):
    """Dirichlet-to-Neumann experiment: returns the record dict."""
    p = setup.params
    mesh = setup.mesh
    sol = spaces.test_traces(case_id)
    t0 = time.perf_counter()
    G = setup.operator(kernels.SLP)
    K = setup.operator(kernels.DLP)
    M = setup.mass()
    b = sol.dirichlet(mesh.vertices)
    result = solver.solve_dtn(G, K, M, b, p.eps_solver, p.max_it)
    seconds = time.perf_counter() - t0
    exact = spaces.conormal_fn(sol, mesh)
    l2 = spaces.l2_error(setup.space_p0, result.x, exact)
    proj = spaces.l2_project(setup.space_p0, exact)
    energy = spaces.energy_error(G.matvec, result.x - proj)
    bytes_total = storage_total(G.storage_report()) + storage_total(K.storage_report())
    return {
        "n": mesh.n_triangles,
        "h": mesh_width(mesh),
        "method": p.method,
        "problem": "dtn",
        "case": case_id,
        "l2_error": l2,
        "energy_error": energy,
        "iters": result.iterations,
        "seconds": seconds,
        "bytes": bytes_total,
        "converged": result.converged,
    }


def run_ntd(setup, case_id):
    """Neumann-to-Dirichlet experiment: returns the record dict."""
    p = setup.params
    mesh = setup.mesh
    sol = spaces.test_traces(case_id)
    t0 = time.perf_counter()
    W = setup.operator(kernels.HYP)
    K = setup.operator(kernels.DLP)
    M = setup.mass()
    neumann = spaces.conormal_fn(sol, mesh)
    b = spaces.l2_project(setup.space_p0, neumann)
    target_mean = spaces.surface_mean(mesh, spaces.dirichlet_fn(sol))
    result = solver.solve_ntd(
        W, K, M, b, p.eps_solver, p.max_it,
        target_mean=target_mean, total_area=float(mesh.areas.sum()),
    )
    seconds = time.perf_counter() - t0
    l2 = spaces.l2_error(setup.space_p1, result.x, spaces.dirichlet_fn(sol))
    bytes_total = storage_total(W.storage_report()) + storage_total(K.storage_report())
    return {
        "n": mesh.n_triangles,
        "h": mesh_width(mesh),
        "method": p.method,
        "problem": "ntd",
        "case": case_id,
        "l2_error": l2,
        "energy_error": float("nan"),
        "iters": result.iterations,
        "seconds": seconds,
        "bytes": bytes_total,
        "converged": result.converged,
    }


def run_problem(setup, problem, case_id):
    if problem == "dtn":
        return run_dtn(setup, case_id)
    if problem == "ntd":
        return run_ntd(setup, case_id)
    raise ValueError(f"unknown problem {problem!r}")


def fit_rate(hs, errors):
    """Least-squares slope of log(error) against log(h)."""
    hs = np.asarray(hs, dtype=float)
    errors = np.asarray(errors, dtype=float)
    return float(np.polyfit(np.log(hs), np.log(errors), 1)[0])
