import numpy as np
import pytest

from h2bem import kernels as K
from h2bem.mesh import SurfaceMesh, build_octahedron
from h2bem.solver import cg
from h2bem.spaces import assemble_mass

TET = SurfaceMesh(
    np.array([[0.0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]]),
    np.array([[0, 1, 2], [0, 3, 1], [1, 3, 2], [0, 2, 3]]),
)


def test_kernel_unit_distance():
    assert K.laplace_kernel([0, 0, 0], [1, 0, 0]) == pytest.approx(1.0 / (4 * np.pi))


def test_kernel_diagonal_zero():
    assert K.laplace_kernel([1.0, 2.0, 3.0], [1.0, 2.0, 3.0]) == 0.0


def test_kernel_symmetric(rng):
    x = rng.standard_normal((50, 3))
    y = rng.standard_normal((50, 3))
    assert np.allclose(K.laplace_kernel(x, y), K.laplace_kernel(y, x))


def test_kernel_dn_closed_form():
    v = K.kernel_dn([0.0, 0, 0], [1.0, 0, 0], [1.0, 0, 0], side="y")
    assert v == pytest.approx(-1.0 / (4 * np.pi))


def test_kernel_dn_orthogonal():
    v = K.kernel_dn([0.0, 0, 0], [1.0, 0, 0], [0.0, 1, 0], side="y")
    assert v == pytest.approx(0.0, abs=1e-15)


def test_kernel_dn_finite_differences(rng):
    # central differences of g, step 1e-6, tolerance 1e-8, 100 admissible pairs
    h = 1e-6
    for _ in range(100):
        x = rng.standard_normal(3)
        y = x + rng.standard_normal(3) * 2.0 + np.array([3.0, 0, 0])
        n = rng.standard_normal(3)
        n /= np.linalg.norm(n)
        fd_y = (K.laplace_kernel(x, y + h * n) - K.laplace_kernel(x, y - h * n)) / (2 * h)
        fd_x = (K.laplace_kernel(x + h * n, y) - K.laplace_kernel(x - h * n, y)) / (2 * h)
        assert K.kernel_dn(x, y, n, "y") == pytest.approx(fd_y, abs=1e-8)
        assert K.kernel_dn(x, y, n, "x") == pytest.approx(fd_x, abs=1e-8)


def test_kernel_dn_side_antisymmetry(rng):
    for _ in range(20):
        x = rng.standard_normal(3)
        y = x + np.array([2.0, 0.5, 0.1])
        n = rng.standard_normal(3)
        n /= np.linalg.norm(n)
        assert K.kernel_dn(x, y, n, "x") == pytest.approx(-K.kernel_dn(x, y, n, "y"))


def test_mixed_second_derivative_finite_differences(rng):
    h = 1e-5
    for _ in range(20):
        x = rng.standard_normal(3)
        z = x + rng.standard_normal(3) + np.array([4.0, 0, 0])
        na = rng.standard_normal(3)
        na /= np.linalg.norm(na)
        nz = rng.standard_normal(3)
        nz /= np.linalg.norm(nz)
        val = K._pair_kernel(x, z, K.K_DN_X_DN_Z, na=na, nb=nz)
        fd = (
            K.laplace_kernel(x + h * na, z + h * nz)
            - K.laplace_kernel(x + h * na, z - h * nz)
            - K.laplace_kernel(x - h * na, z + h * nz)
            + K.laplace_kernel(x - h * na, z - h * nz)
        ) / (4 * h * h)
        assert val == pytest.approx(fd, rel=1e-4, abs=1e-9)


def test_potential_farfield_degeneracy():
    # at large distance the panel potential collapses to area * g(centroid, xi);
    # the quadratic Taylor remainder scales like area diam^2 / (4 pi d^3)
    xi = np.array([600.0, 600.0, 600.0])
    val = K.potential_integral(TET, "P0_triangles", 0, xi, K.K_VALUE, 10)
    centroid = TET.vertices[TET.triangles[0]].mean(axis=0)
    approx = TET.areas[0] * K.laplace_kernel(centroid, xi)
    assert val == pytest.approx(approx, abs=1e-10)


def test_potential_reflection_symmetry():
    # panel 0 lies in the z=0 plane: mirror points give equal values
    a = K.potential_integral(TET, "P0_triangles", 0, [0.2, 0.3, 2.0], K.K_VALUE, 8)
    b = K.potential_integral(TET, "P0_triangles", 0, [0.2, 0.3, -2.0], K.K_VALUE, 8)
    assert a == pytest.approx(b, abs=1e-13)


def test_potential_self_convergence():
    xi = np.array([1.5, 1.5, 1.5])  # dist/diam >= 2 from panel 0
    v4 = K.potential_integral(TET, "P0_triangles", 0, xi, K.K_VALUE, 4)
    v10 = K.potential_integral(TET, "P0_triangles", 0, xi, K.K_VALUE, 10)
    assert abs(v4 - v10) < 1e-9


def test_potential_inside_support_rejected():
    with pytest.raises(ValueError, match="separation"):
        K.potential_integral(TET, "P0_triangles", 0, [0.2, 0.2, 0.0], K.K_VALUE, 4)


def test_p1_potential_equals_bary_sum():
    xi = np.array([[2.0, 2.0, 2.0]])
    val = K.p1_potentials(TET, [0], xi, K.K_VALUE, 6)[0, 0]
    acc = 0.0
    for f in range(TET.n_triangles):
        if 0 in TET.triangles[f]:
            loc = int(np.flatnonzero(TET.triangles[f] == 0)[0])
            acc += K.panel_potentials(TET, [f], xi, K.K_VALUE, 6, bary=True)[0, 0, loc]
    assert val == pytest.approx(acc, rel=1e-14)


def test_curls_sum_to_zero():
    curls = K.triangle_curls(build_octahedron())
    assert np.abs(curls.sum(axis=1)).max() < 1e-14


def test_curl_value_unit_triangle():
    curls = K.triangle_curls(TET)
    # panel 0 = (0,0,0),(1,0,0),(0,1,0), area 1/2: curl of hat at local 0 is (V2-V3)/(2A)
    assert np.allclose(curls[0, 0], np.array([1.0, -1.0, 0.0]))


def test_slp_entry_symmetric(sphere1, rng):
    n = sphere1.n_triangles
    for _ in range(10):
        i, j = rng.integers(0, n, 2)
        gij = K.galerkin_entry(sphere1, int(i), int(j), K.SLP, 4)
        gji = K.galerkin_entry(sphere1, int(j), int(i), K.SLP, 4)
        assert gij == pytest.approx(gji, rel=1e-13)


def test_hyp_nullspace_and_symmetry(dense_w2):
    W = dense_w2
    scale = np.linalg.norm(W)
    assert np.abs(W.sum(axis=1)).max() <= 1e-8 * scale
    assert np.abs(W - W.T).max() <= 1e-6 * np.abs(W).max()


def test_mass_plus_dlp_row_identity(sphere2, ctx2):
    # Green's identity for u = 1: (M/2 + K) 1 = 0 up to quadrature error
    from h2bem.containers import assemble_dense

    M = assemble_mass(sphere2)
    Kd = assemble_dense(ctx2, K.DLP, 6)
    res = 0.5 * np.asarray(M.sum(axis=1)).ravel() + Kd.sum(axis=1)
    assert np.abs(res).max() < 1e-6


def test_hyp_matches_direct_double_quadrature_far(sphere2):
    # the integration-by-parts identity holds on closed surfaces: for two
    # vertices with well-separated supports the curl representation must match
    # the direct second-normal-derivative double integral (regular case)
    from h2bem.quadrature import triangle_points

    m = sphere2
    vtris = m.vertex_triangles()
    i = 0
    pos_i = m.vertices[i]
    j = int(np.argmin(m.vertices @ pos_i))  # most antipodal vertex
    val = float(K.hyp_block(m, [i], [j], 10, vertex_tris=vtris)[0, 0])
    direct = 0.0
    for fa in vtris[i]:
        for fb in vtris[j]:
            la = int(np.flatnonzero(m.triangles[fa] == i)[0])
            lb = int(np.flatnonzero(m.triangles[fb] == j)[0])
            Xa, Wa, lam = triangle_points(m, [fa], 10)
            Xb, Wb, _ = triangle_points(m, [fb], 10)
            na = np.broadcast_to(m.normals[fa], Xa[0].shape)
            nb = np.broadcast_to(m.normals[fb], Xb[0].shape)
            kk = K._pair_kernel(
                Xa[0][:, None, :], Xb[0][None, :, :], K.K_DN_X_DN_Z,
                na=na[:, None, :], nb=nb[None, :, :],
            )
            direct -= float(
                np.einsum("i,j,ij,i,j->", Wa[0], Wb[0], kk, lam[:, la], lam[:, lb])
            )
    assert val == pytest.approx(direct, rel=1e-8)


def test_dense_g_spd(dense_g2, rng):
    b = rng.standard_normal(dense_g2.shape[0])
    res = cg(lambda x: dense_g2 @ x, b, 1e-10, 2000)
    assert res.converged
    assert np.linalg.eigvalsh(dense_g2).min() > 0.0


def test_nearfield_entries_finite(dense_g1, dense_k2, dense_w2):
    for mat in (dense_g1, dense_k2, dense_w2):
        assert np.isfinite(mat).all()


def test_galerkin_entry_matches_dense(sphere1, dense_g1):
    assert K.galerkin_entry(sphere1, 3, 17, K.SLP, 4) == pytest.approx(dense_g1[3, 17])
