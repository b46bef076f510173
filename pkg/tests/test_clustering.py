import numpy as np
import pytest

from h2bem import clustering as C
from h2bem import spaces as S
from h2bem.kernels import support_box
from h2bem.mesh import build_octahedron, sphere_mesh


def _point_boxes(pts):
    pts = np.asarray(pts, dtype=float)
    return np.stack([pts, pts], axis=1)


def test_support_box_p0():
    m = build_octahedron()
    box = support_box(m, "P0_triangles", 0)
    assert np.allclose(box[0], [0, 0, 0])
    assert np.allclose(box[1], [1, 1, 1])


def test_support_box_p1_pole():
    m = build_octahedron()
    box = support_box(m, "P1_vertices", 4)  # north pole touches 4 upper panels
    assert np.allclose(box[0], [-1, -1, 0])
    assert np.allclose(box[1], [1, 1, 1])


def test_support_box_degenerate_point():
    boxes = _point_boxes([[1.0, 2.0, 3.0]])
    assert np.allclose(boxes[0, 0], boxes[0, 1])


def test_collinear_points_balanced_tree():
    pts = [[float(i), 0.0, 0.0] for i in range(8)]
    tree = C.build_cluster_tree(_point_boxes(pts), 2)
    leaves = tree.leaves()
    assert len(leaves) == 4
    assert all(leaf.size == 2 for leaf in leaves)
    assert tree.depth() == 2


def test_small_set_single_leaf():
    tree = C.build_cluster_tree(_point_boxes([[0, 0, 0], [1, 0, 0]]), 4)
    assert tree.root.is_leaf
    assert tree.root.size == 2


def test_cluster_box_contains_dof_boxes(sphere2):
    boxes = S.DofSpace(S.P0, sphere2).support_boxes()
    tree = C.build_cluster_tree(boxes, 8)
    for c in tree.nodes:
        for d in tree.dofs(c):
            assert (boxes[d, 0] >= c.box[0] - 1e-14).all()
            assert (boxes[d, 1] <= c.box[1] + 1e-14).all()


def test_children_partition_parent(sphere2):
    boxes = S.DofSpace(S.P0, sphere2).support_boxes()
    tree = C.build_cluster_tree(boxes, 8)
    for c in tree.nodes:
        if not c.is_leaf:
            spans = sorted((ch.start, ch.end) for ch in c.children)
            assert spans[0][0] == c.start and spans[-1][1] == c.end
            for (a, b), (c2, _) in zip(spans, spans[1:]):
                assert b == c2


def test_admissible_example():
    bt = np.array([[0.0, 0, 0], [1, 1, 1]])
    bs = np.array([[3.0, 3, 3], [4, 4, 4]])
    assert C.admissible(bt, bs, 1.0)
    assert C.box_distance(bt, bs) == pytest.approx(2 * np.sqrt(3))


def test_identical_boxes_inadmissible():
    b = np.array([[0.0, 0, 0], [1, 1, 1]])
    assert not C.admissible(b, b, 1.0)


def test_touching_boxes_inadmissible():
    b1 = np.array([[0.0, 0, 0], [1, 1, 1]])
    b2 = np.array([[1.0, 1, 1], [2, 2, 2]])
    assert not C.admissible(b1, b2, 1.0)


def test_single_leaf_block_tree():
    tree = C.build_cluster_tree(_point_boxes([[0, 0, 0], [1, 0, 0]]), 4)
    bt = C.BlockTree(tree, tree, 1.0)
    assert len(bt.far) == 0
    assert len(bt.near) == 1


def test_block_partition(sphere1):
    boxes = S.DofSpace(S.P0, sphere1).support_boxes()
    tree = C.build_cluster_tree(boxes, 4)
    bt = C.BlockTree(tree, tree, 1.0)
    assert bt.check_partition()
    total = sum(b.row.size * b.col.size for b in bt.leaves())
    assert total == sphere1.n_triangles ** 2


def test_tiny_eta_all_nearfield(sphere1):
    boxes = S.DofSpace(S.P0, sphere1).support_boxes()
    tree = C.build_cluster_tree(boxes, 4)
    bt = C.BlockTree(tree, tree, 1e-9)
    assert len(bt.far) == 0
    assert bt.check_partition()


def test_mixed_depth_trees_partition(sphere1):
    # row and column trees of different depths exercise the one-sided
    # child rule of the block tree
    boxes0 = S.DofSpace(S.P0, sphere1).support_boxes()
    boxes1 = S.DofSpace(S.P1, sphere1).support_boxes()
    t0 = C.build_cluster_tree(boxes0, 4)
    t1 = C.build_cluster_tree(boxes1, 9)
    bt = C.BlockTree(t0, t1, 1.0)
    assert bt.check_partition()


def test_nearfield_grows_linearly():
    # nearfield leaf count grows O(n), about x4 per sphere level, once past the
    # all-nearfield regime (level 2 is fully dense at this leaf size)
    counts = []
    for level in (3, 4, 5):
        m = sphere_mesh(level)
        boxes = S.DofSpace(S.P0, m).support_boxes()
        tree = C.build_cluster_tree(boxes, 16)
        counts.append(len(C.BlockTree(tree, tree, 1.0).near))
    for a, b in zip(counts, counts[1:]):
        assert 3.5 <= b / a <= 4.5


def test_empty_index_set_rejected():
    with pytest.raises(ValueError):
        C.build_cluster_tree(np.empty((0, 2, 3)), 4)
