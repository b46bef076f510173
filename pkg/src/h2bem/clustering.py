"""Geometric cluster trees over dof supports and the admissibility-driven
block tree partitioning the matrix index set into farfield and nearfield."""

import numpy as np


def box_diameter(box):
    return float(np.linalg.norm(box[1] - box[0]))


def box_distance(box_a, box_b):
    """Euclidean distance between axis-parallel boxes (0 if they touch)."""
    gaps = np.maximum(0.0, np.maximum(box_a[0] - box_b[1], box_b[0] - box_a[1]))
    return float(np.linalg.norm(gaps))


def admissible(box_t, box_s, eta):
    """max{diam(B_t), diam(B_s)} <= 2 eta dist(B_t, B_s)."""
    if eta <= 0.0:
        raise ValueError("eta must be positive")
    return max(box_diameter(box_t), box_diameter(box_s)) <= 2.0 * eta * box_distance(box_t, box_s)


class Cluster:
    """Contiguous index range [start, end) in the tree's permuted ordering."""

    __slots__ = ("start", "end", "box", "depth", "children", "uid")

    def __init__(self, start, end, box, depth, uid):
        self.start = start
        self.end = end
        self.box = box
        self.depth = depth
        self.children = []
        self.uid = uid

    @property
    def size(self):
        return self.end - self.start

    @property
    def is_leaf(self):
        return not self.children

    def __repr__(self):
        return f"Cluster([{self.start}:{self.end}), depth={self.depth})"


class ClusterTree:
    """Binary cluster tree; `perm[p]` is the original dof at permuted slot p."""

    def __init__(self, root, perm, nodes):
        self.root = root
        self.perm = perm
        self.iperm = np.empty_like(perm)
        self.iperm[perm] = np.arange(len(perm))
        self.nodes = nodes  # preorder

    @property
    def n_dofs(self):
        return len(self.perm)

    def dofs(self, cluster):
        """Original dof indices contained in a cluster."""
        return self.perm[cluster.start : cluster.end]

    def leaves(self):
        return [c for c in self.nodes if c.is_leaf]

    def bottom_up(self):
        """Children-before-parents ordering."""
        return sorted(self.nodes, key=lambda c: -c.depth)

    def depth(self):
        return max(c.depth for c in self.nodes)


def build_cluster_tree(boxes, r_leaf):
    """Geometric bisection of dof support boxes.

    Splits along the longest axis of the (tight) cluster box at the midpoint of
    the contained dof center coordinates; falls back to a median split when the
    centers do not separate.  Leaves hold at most r_leaf indices.
    """
    boxes = np.asarray(boxes, dtype=float)
    n = len(boxes)
    if n == 0:
        raise ValueError("cannot build a cluster tree over an empty index set")
    if r_leaf < 1:
        raise ValueError("r_leaf must be >= 1")
    centers = 0.5 * (boxes[:, 0, :] + boxes[:, 1, :])
    perm = np.empty(n, dtype=np.int64)
    nodes = []
    counter = [0]

    def build(ids, start, depth):
        box = np.stack([boxes[ids, 0, :].min(axis=0), boxes[ids, 1, :].max(axis=0)])
        node = Cluster(start, start + len(ids), box, depth, counter[0])
        counter[0] += 1
        nodes.append(node)
        if len(ids) <= r_leaf:
            perm[start : start + len(ids)] = ids
            return node
        axis = int(np.argmax(box[1] - box[0]))
        c = centers[ids, axis]
        mid = 0.5 * (c.min() + c.max())
        mask = c <= mid
        if mask.all() or not mask.any():
            order = np.argsort(c, kind="stable")
            half = len(ids) // 2
            mask = np.zeros(len(ids), dtype=bool)
            mask[order[:half]] = True
        left, right = ids[mask], ids[~mask]
        node.children = [
            build(left, start, depth + 1),
            build(right, start + len(left), depth + 1),
        ]
        return node

    root = build(np.arange(n, dtype=np.int64), 0, 0)
    return ClusterTree(root, perm, nodes)


class Block:
    __slots__ = ("row", "col", "admissible")

    def __init__(self, row, col, adm):
        self.row = row
        self.col = col
        self.admissible = adm

    def __repr__(self):
        tag = "far" if self.admissible else "near"
        return f"Block({self.row!r}, {self.col!r}, {tag})"


class BlockTree:
    """Leaf partition of Idx x Jdx into admissible (farfield) and small
    (nearfield) blocks."""

    def __init__(self, row_tree, col_tree, eta):
        self.row_tree = row_tree
        self.col_tree = col_tree
        self.eta = eta
        self.far = []
        self.near = []
        self._descend(row_tree.root, col_tree.root)

    def _descend(self, t, s):
        if admissible(t.box, s.box, self.eta):
            self.far.append(Block(t, s, True))
            return
        if t.is_leaf and s.is_leaf:
            self.near.append(Block(t, s, False))
            return
        ts = t.children if not t.is_leaf else [t]
        ss = s.children if not s.is_leaf else [s]
        for tc in ts:
            for sc in ss:
                self._descend(tc, sc)

    def leaves(self):
        return self.far + self.near

    def check_partition(self):
        """Exhaustively verify every index pair lies in exactly one leaf."""
        nr, nc = self.row_tree.n_dofs, self.col_tree.n_dofs
        cover = np.zeros((nr, nc), dtype=np.int32)
        for b in self.leaves():
            cover[b.row.start : b.row.end, b.col.start : b.col.end] += 1
        return bool((cover == 1).all())
