"""Closed triangulated surfaces: octahedron/sphere generation, red refinement, I/O."""

import numpy as np


class MeshError(Exception):
    """Raised when a surface fails validation or parsing."""


class SurfaceMesh:
    """Closed, consistently oriented triangle mesh.

    vertices:  (V, 3) float64
    triangles: (F, 3) int64, counter-clockwise seen from outside
    normals:   (F, 3) unit outward normals (flat panels)
    areas:     (F,) positive triangle areas
    """

    def __init__(self, vertices, triangles):
        self.vertices = np.ascontiguousarray(vertices, dtype=np.float64)
        self.triangles = np.ascontiguousarray(triangles, dtype=np.int64)
        if self.vertices.ndim != 2 or self.vertices.shape[1] != 3:
            raise MeshError("vertices must have shape (V, 3)")
        if self.triangles.ndim != 2 or self.triangles.shape[1] != 3:
            raise MeshError("triangles must have shape (F, 3)")
        if not np.isfinite(self.vertices).all():
            raise MeshError("non-finite vertex coordinates")
        if self.triangles.min(initial=0) < 0 or self.triangles.max(initial=-1) >= len(self.vertices):
            raise MeshError("triangle references vertex index out of range")
        v = self.vertices
        t = self.triangles
        cross = np.cross(v[t[:, 1]] - v[t[:, 0]], v[t[:, 2]] - v[t[:, 0]])
        norms = np.linalg.norm(cross, axis=1)
        if (norms <= 0.0).any():
            raise MeshError("degenerate (zero-area) triangle")
        self.normals = cross / norms[:, None]
        self.areas = 0.5 * norms

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_triangles(self):
        return len(self.triangles)

    def corners(self):
        """Vertex coordinates per triangle, shape (F, 3, 3)."""
        return self.vertices[self.triangles]

    def validate(self):
        """Check closedness and consistent orientation; raise MeshError if violated.

        A closed oriented surface has every directed edge exactly once, hence
        every undirected edge shared by exactly two triangles traversed in
        opposite directions.
        """
        directed = {}
        for f, (i, j, k) in enumerate(self.triangles):
            for a, b in ((i, j), (j, k), (k, i)):
                key = (int(a), int(b))
                if key in directed:
                    raise MeshError(
                        f"directed edge {key} appears twice (triangles {directed[key]} and {f}): "
                        "inconsistent orientation or non-manifold edge"
                    )
                directed[key] = f
        for (a, b), f in directed.items():
            if (b, a) not in directed:
                raise MeshError(f"open edge ({a}, {b}) of triangle {f}: surface is not closed")
        bad = np.abs(np.linalg.norm(self.normals, axis=1) - 1.0) > 1e-12
        if bad.any():
            raise MeshError(f"non-unit normal on triangle {int(np.flatnonzero(bad)[0])}")
        return self

    def signed_volume(self):
        """(1/6) sum of <v1, v2 x v3>; positive for outward orientation."""
        c = self.corners()
        return float(np.einsum("fi,fi->f", c[:, 0], np.cross(c[:, 1], c[:, 2])).sum() / 6.0)

    def vertex_triangles(self):
        """List of incident triangle indices per vertex."""
        inc = [[] for _ in range(self.n_vertices)]
        for f, tri in enumerate(self.triangles):
            for v in tri:
                inc[int(v)].append(f)
        return inc


def build_octahedron():
    """Surface |x1|+|x2|+|x3| = 1 as 6 vertices and 8 outward-oriented triangles."""
    vertices = np.array(
        [
            [1.0, 0.0, 0.0],
            [-1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, -1.0, 0.0],
            [0.0, 0.0, 1.0],
            [0.0, 0.0, -1.0],
        ]
    )
    triangles = np.array(
        [
            [0, 2, 4],
            [2, 1, 4],
            [1, 3, 4],
            [3, 0, 4],
            [2, 0, 5],
            [1, 2, 5],
            [3, 1, 5],
            [0, 3, 5],
        ]
    )
    return SurfaceMesh(vertices, triangles).validate()


def refine_red(mesh):
    """Split every triangle into 4 via edge midpoints, orientation preserved."""
    mesh.validate()
    verts = list(mesh.vertices)
    midpoint = {}

    def mid(a, b):
        key = (a, b) if a < b else (b, a)
        if key not in midpoint:
            verts.append(0.5 * (mesh.vertices[a] + mesh.vertices[b]))
            midpoint[key] = len(verts) - 1
        return midpoint[key]

    tris = []
    for i, j, k in mesh.triangles:
        i, j, k = int(i), int(j), int(k)
        ij, jk, ki = mid(i, j), mid(j, k), mid(k, i)
        tris += [[i, ij, ki], [ij, j, jk], [ki, jk, k], [ij, jk, ki]]
    return SurfaceMesh(np.array(verts), np.array(tris))


def project_unit_sphere(mesh):
    """Normalize every vertex to the unit sphere; normals and areas recomputed."""
    norms = np.linalg.norm(mesh.vertices, axis=1)
    if (norms == 0.0).any():
        raise MeshError("cannot project: vertex at origin")
    return SurfaceMesh(mesh.vertices / norms[:, None], mesh.triangles)


def sphere_mesh(level):
    """Sphere approximation: octahedron refined `level` times, vertices projected
    to the unit sphere after each refinement pass. 8 * 4**level triangles."""
    if level < 0:
        raise ValueError("level must be >= 0")
    mesh = build_octahedron()
    for _ in range(level):
        mesh = project_unit_sphere(refine_red(mesh))
    return mesh


def mesh_width(mesh):
    """Maximal edge length."""
    c = mesh.corners()
    e = np.stack([c[:, 1] - c[:, 0], c[:, 2] - c[:, 1], c[:, 0] - c[:, 2]])
    return float(np.linalg.norm(e, axis=2).max())


def write_mesh(mesh, path):
    """Plain text format: 'V F' header, V lines 'x y z', F lines 'i j k' (0-based)."""
    with open(path, "w") as fh:
        fh.write(f"{mesh.n_vertices} {mesh.n_triangles}\n")
        for x, y, z in mesh.vertices:
            fh.write(f"{float(x)!r} {float(y)!r} {float(z)!r}\n")
        for i, j, k in mesh.triangles:
            fh.write(f"{i} {j} {k}\n")


def read_mesh(path):
    """Inverse of write_mesh; validates the result. Parse errors carry line numbers."""
    with open(path) as fh:
        lines = fh.read().splitlines()

    def fail(lineno, msg):
        raise MeshError(f"{path}:{lineno}: {msg}")

    if not lines:
        fail(1, "empty file")
    head = lines[0].split()
    if len(head) != 2:
        fail(1, "expected header 'V F'")
    try:
        nv, nf = int(head[0]), int(head[1])
    except ValueError:
        fail(1, "expected integer header 'V F'")
    if len(lines) < 1 + nv + nf:
        fail(len(lines), f"expected {1 + nv + nf} lines, got {len(lines)}")
    vertices = np.empty((nv, 3))
    for n in range(nv):
        parts = lines[1 + n].split()
        if len(parts) != 3:
            fail(2 + n, "expected 3 coordinates")
        try:
            vertices[n] = [float(p) for p in parts]
        except ValueError:
            fail(2 + n, f"bad coordinate in {parts!r}")
    triangles = np.empty((nf, 3), dtype=np.int64)
    for n in range(nf):
        parts = lines[1 + nv + n].split()
        if len(parts) != 3:
            fail(2 + nv + n, "expected 3 vertex indices")
        try:
            triangles[n] = [int(p) for p in parts]
        except ValueError:
            fail(2 + nv + n, f"bad vertex index in {parts!r}")
        if triangles[n].min() < 0 or triangles[n].max() >= nv:
            fail(2 + nv + n, f"vertex index out of range in {parts!r}")
    return SurfaceMesh(vertices, triangles).validate()
