"""Procedural test geometry: icospheres, strips, and deformed pairs.

Used by the test suite and for self-contained demos of the CLI; not part
of the core correspondence pipeline.
"""

import numpy as np

from .mesh import TriMesh


def icosahedron():
    """Unit icosahedron vertices and faces."""
    phi = (1.0 + np.sqrt(5.0)) / 2.0
    verts = np.array(
        [
            [-1, phi, 0], [1, phi, 0], [-1, -phi, 0], [1, -phi, 0],
            [0, -1, phi], [0, 1, phi], [0, -1, -phi], [0, 1, -phi],
            [phi, 0, -1], [phi, 0, 1], [-phi, 0, -1], [-phi, 0, 1],
        ],
        dtype=float,
    )
    verts /= np.linalg.norm(verts, axis=1, keepdims=True)
    faces = np.array(
        [
            [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
            [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
            [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
            [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
        ],
        dtype=np.int64,
    )
    return verts, faces


def icosphere(subdivisions=3, radius=1.0):
    """Icosphere mesh. Subdivision level 3 has 642 vertices and 1280 faces."""
    verts, faces = icosahedron()
    for _ in range(subdivisions):
        verts, faces = _subdivide(verts, faces)
    verts /= np.linalg.norm(verts, axis=1, keepdims=True)
    return TriMesh(radius * verts, faces)


def _subdivide(verts, faces):
    verts = list(verts)
    midpoint = {}

    def mid(a, b):
        key = (a, b) if a < b else (b, a)
        if key not in midpoint:
            p = 0.5 * (np.asarray(verts[a]) + np.asarray(verts[b]))
            midpoint[key] = len(verts)
            verts.append(p / np.linalg.norm(p))
        return midpoint[key]

    new_faces = []
    for a, b, c in faces:
        ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
        new_faces += [[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]
    return np.asarray(verts), np.asarray(new_faces, dtype=np.int64)


def deformed_icosphere(subdivisions=3, stretch=(1.0, 1.25, 0.85), bump=0.15, seed=0):
    """Icosphere with an anisotropic stretch and a smooth radial bump.

    Shares connectivity with ``icosphere(subdivisions)``, so vertex indices
    correspond one-to-one; handy as the second shape of a near-isometric
    desk-scale pair.
    """
    base = icosphere(subdivisions)
    v = base.vertices * np.asarray(stretch)
    rng = np.random.default_rng(seed)
    center = rng.standard_normal(3)
    center /= np.linalg.norm(center)
    radial = 1.0 + bump * np.exp(-3.0 * np.linalg.norm(base.vertices - center, axis=1) ** 2)
    return TriMesh(v * radial[:, None], base.faces.copy())


def strip(n_segments, length=1.0):
    """Flat rectangular strip of 2*(n+1) vertices; a path-like test mesh."""
    n = n_segments
    xs = np.linspace(0.0, length, n + 1)
    top = np.column_stack([xs, np.full(n + 1, 0.1), np.zeros(n + 1)])
    bot = np.column_stack([xs, np.zeros(n + 1), np.zeros(n + 1)])
    verts = np.vstack([bot, top])
    faces = []
    for i in range(n):
        faces.append([i, i + 1, n + 1 + i])
        faces.append([i + 1, n + 2 + i, n + 1 + i])
    return TriMesh(verts, np.asarray(faces, dtype=np.int64))


def permute_mesh(mesh, seed=0):
    """Randomly permute vertex order, reindexing faces to match.

    Returns
    -------
    permuted : TriMesh
    perm : (m,) ndarray
        ``permuted.vertices[perm[i]] == mesh.vertices[i]``.
    """
    rng = np.random.default_rng(seed)
    m = mesh.vertex_count
    perm = rng.permutation(m)
    new_verts = np.empty_like(mesh.vertices)
    new_verts[perm] = mesh.vertices
    new_faces = perm[mesh.faces]
    return TriMesh(new_verts, new_faces), perm


def write_off(mesh, path):
    """Write a mesh as an ASCII OFF file."""
    with open(path, "w") as fh:
        fh.write("OFF\n")
        fh.write(f"{mesh.vertex_count} {mesh.face_count} 0\n")
        for v in mesh.vertices:
            fh.write(f"{v[0]:.17g} {v[1]:.17g} {v[2]:.17g}\n")
        for f in mesh.faces:
            fh.write(f"3 {f[0]} {f[1]} {f[2]}\n")
