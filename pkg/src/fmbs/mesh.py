"""Triangle meshes and the discrete operators built on them.

Provides mesh ingestion (OFF/OBJ/PLY, ASCII) and the three geometric
quantities the rest of the package consumes: the lumped (diagonal) mass
matrix, the cotangent stiffness matrix, and edge-graph geodesic distances.
"""

import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import dijkstra

from .errors import MeshError

# Faces with area below this fraction of (bbox diagonal)^2 make the
# cotangent weights blow up, so the mesh is rejected outright.
DEGENERATE_AREA_FACTOR = 1e-12


class TriMesh:
    """Manifold triangle mesh with validated connectivity.

    Parameters
    ----------
    vertices : (m, 3) array_like
        Vertex positions.
    faces : (f, 3) array_like
        Vertex-index triples, 0-based.

    Raises
    ------
    MeshError
        If an index is out of range, a face repeats a vertex, a face is
        degenerate (area below threshold), or an edge borders more than
        two faces.
    """

    def __init__(self, vertices, faces):
        self.vertices = np.asarray(vertices, dtype=np.float64)
        self.faces = np.asarray(faces, dtype=np.int64)
        if self.vertices.ndim != 2 or self.vertices.shape[1] != 3:
            raise MeshError("vertices must be an (m, 3) array")
        if self.faces.size == 0:
            raise MeshError("mesh has no faces")
        if self.faces.ndim != 2 or self.faces.shape[1] != 3:
            raise MeshError("faces must be an (f, 3) array")
        self._validate()

    @property
    def vertex_count(self):
        return self.vertices.shape[0]

    @property
    def face_count(self):
        return self.faces.shape[0]

    def _validate(self):
        m = self.vertex_count
        if self.faces.min() < 0 or self.faces.max() >= m:
            bad = int(np.flatnonzero((self.faces < 0) | (self.faces >= m)).ravel()[0] // 3)
            raise MeshError(f"face {bad}: vertex index out of range [0, {m})")
        repeated = (
            (self.faces[:, 0] == self.faces[:, 1])
            | (self.faces[:, 1] == self.faces[:, 2])
            | (self.faces[:, 0] == self.faces[:, 2])
        )
        if repeated.any():
            raise MeshError(f"face {int(np.flatnonzero(repeated)[0])} repeats a vertex")

        areas = self.face_areas()
        bbox = self.vertices.max(axis=0) - self.vertices.min(axis=0)
        diag2 = float(bbox @ bbox)
        threshold = DEGENERATE_AREA_FACTOR * diag2
        if (areas <= threshold).any():
            bad = int(np.argmin(areas))
            raise MeshError(
                f"face {bad} is degenerate (area {areas[bad]:.3e} below threshold "
                f"{threshold:.3e})"
            )

        # edge-manifold: every undirected edge belongs to at most two faces
        edges = np.sort(
            np.concatenate(
                [self.faces[:, [0, 1]], self.faces[:, [1, 2]], self.faces[:, [2, 0]]]
            ),
            axis=1,
        )
        _, counts = np.unique(edges, axis=0, return_counts=True)
        if (counts > 2).any():
            raise MeshError("non-manifold edge: an edge borders more than two faces")

    def face_areas(self):
        """Per-face triangle areas."""
        v0 = self.vertices[self.faces[:, 0]]
        v1 = self.vertices[self.faces[:, 1]]
        v2 = self.vertices[self.faces[:, 2]]
        cr = np.cross(v1 - v0, v2 - v0)
        return 0.5 * np.linalg.norm(cr, axis=1)

    def total_area(self):
        return float(self.face_areas().sum())

    def edge_graph(self):
        """Sparse symmetric matrix of Euclidean edge lengths."""
        i = np.concatenate([self.faces[:, 0], self.faces[:, 1], self.faces[:, 2]])
        j = np.concatenate([self.faces[:, 1], self.faces[:, 2], self.faces[:, 0]])
        lengths = np.linalg.norm(self.vertices[i] - self.vertices[j], axis=1)
        m = self.vertex_count
        g = sparse.coo_matrix((lengths, (i, j)), shape=(m, m)).tocsr()
        g = g.maximum(g.T)
        return g


@dataclass(frozen=True)
class MassMatrix:
    """Diagonal lumped mass matrix, stored as its diagonal.

    Entry ``diag[i]`` is one third of the area of the triangles incident to
    vertex ``i``; the sum of entries equals the total surface area.
    """

    diag: np.ndarray

    def matrix(self):
        return sparse.diags(self.diag)

    def total(self):
        return float(self.diag.sum())


def load_mesh(path):
    """Read a triangle mesh from an ASCII OFF, OBJ, or PLY file.

    Vertex and face order are preserved. The format is chosen by file
    extension, falling back to content sniffing.

    Raises
    ------
    MeshError
        On parse failure or any mesh invariant violation.
    """
    path = Path(path)
    if not path.exists():
        raise MeshError(f"mesh file not found: {path}")
    text = path.read_text()
    suffix = path.suffix.lower()
    if suffix == ".off":
        verts, faces = _parse_off(text, path)
    elif suffix == ".obj":
        verts, faces = _parse_obj(text, path)
    elif suffix == ".ply":
        verts, faces = _parse_ply(text, path)
    else:
        head = text.lstrip()[:3].upper()
        if head.startswith("OFF"):
            verts, faces = _parse_off(text, path)
        elif head.startswith("PLY"):
            verts, faces = _parse_ply(text, path)
        else:
            verts, faces = _parse_obj(text, path)
    return TriMesh(verts, faces)


def _tokens(text):
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            yield line.split()


def _parse_off(text, path):
    rows = list(_tokens(text))
    if not rows:
        raise MeshError(f"{path}: empty OFF file")
    header = rows[0]
    if header[0].upper() != "OFF":
        raise MeshError(f"{path}: missing OFF header")
    if len(header) > 1:  # counts may share the header line
        counts, body = header[1:], rows[1:]
    else:
        counts, body = rows[1], rows[2:]
    try:
        nv, nf = int(counts[0]), int(counts[1])
        verts = [[float(x) for x in body[i][:3]] for i in range(nv)]
        faces = []
        for row in body[nv : nv + nf]:
            n = int(row[0])
            if n != 3:
                raise MeshError(f"{path}: face with {n} vertices; only triangles supported")
            faces.append([int(x) for x in row[1:4]])
    except MeshError:
        raise
    except (ValueError, IndexError) as exc:
        raise MeshError(f"{path}: malformed OFF file ({exc})") from exc
    return verts, faces


def _parse_obj(text, path):
    verts, faces = [], []
    try:
        for row in _tokens(text):
            if row[0] == "v":
                verts.append([float(x) for x in row[1:4]])
            elif row[0] == "f":
                idx = [int(tok.split("/")[0]) for tok in row[1:]]
                if len(idx) != 3:
                    raise MeshError(
                        f"{path}: face with {len(idx)} vertices; only triangles supported"
                    )
                # OBJ indices are 1-based; negative indices count from the end
                faces.append([i - 1 if i > 0 else len(verts) + i for i in idx])
    except MeshError:
        raise
    except (ValueError, IndexError) as exc:
        raise MeshError(f"{path}: malformed OBJ file ({exc})") from exc
    if not verts:
        raise MeshError(f"{path}: no vertices found")
    return verts, faces


def _parse_ply(text, path):
    lines = text.splitlines()
    if not lines or lines[0].strip().lower() != "ply":
        raise MeshError(f"{path}: missing PLY header")
    nv = nf = None
    vertex_props = []
    current = None
    body_start = None
    for k, line in enumerate(lines[1:], start=1):
        row = line.strip().split()
        if not row:
            continue
        if row[0] == "format":
            if row[1] != "ascii":
                raise MeshError(f"{path}: only ASCII PLY is supported")
        elif row[0] == "element":
            current = row[1]
            if current == "vertex":
                nv = int(row[2])
            elif current == "face":
                nf = int(row[2])
        elif row[0] == "property" and current == "vertex" and row[1] != "list":
            vertex_props.append(row[-1])
        elif row[0] == "end_header":
            body_start = k + 1
            break
    if nv is None or nf is None or body_start is None:
        raise MeshError(f"{path}: incomplete PLY header")
    try:
        ix, iy, iz = (vertex_props.index(c) for c in ("x", "y", "z"))
    except ValueError as exc:
        raise MeshError(f"{path}: PLY vertex element lacks x/y/z") from exc
    body = [r for r in (line.split() for line in lines[body_start:]) if r]
    try:
        verts = [[float(body[i][ix]), float(body[i][iy]), float(body[i][iz])] for i in range(nv)]
        faces = []
        for row in body[nv : nv + nf]:
            n = int(row[0])
            if n != 3:
                raise MeshError(f"{path}: face with {n} vertices; only triangles supported")
            faces.append([int(x) for x in row[1:4]])
    except MeshError:
        raise
    except (ValueError, IndexError) as exc:
        raise MeshError(f"{path}: malformed PLY file ({exc})") from exc
    return verts, faces


def lumped_mass(mesh):
    """Lumped mass matrix: vertex i gets one third of its incident area."""
    areas = mesh.face_areas()
    diag = np.zeros(mesh.vertex_count)
    for c in range(3):
        np.add.at(diag, mesh.faces[:, c], areas / 3.0)
    return MassMatrix(diag=diag)


def cotan_weights(mesh):
    """Cotangent stiffness matrix W (sparse, symmetric, positive semidefinite).

    Off-diagonal entry (i, j) is -(cot a + cot b)/2 over the angles opposite
    edge (i, j); diagonals make rows sum to zero. With this sign convention
    f @ (W @ f) is the (nonnegative) Dirichlet energy of f.
    """
    verts, faces = mesh.vertices, mesh.faces
    m = mesh.vertex_count
    i_all, j_all, w_all = [], [], []
    # angle at corner c is opposite the edge (c+1, c+2)
    for c in range(3):
        a = verts[faces[:, c]]
        b = verts[faces[:, (c + 1) % 3]]
        d = verts[faces[:, (c + 2) % 3]]
        u, v = b - a, d - a
        cross = np.linalg.norm(np.cross(u, v), axis=1)
        cot = np.einsum("ij,ij->i", u, v) / cross
        i_all.append(faces[:, (c + 1) % 3])
        j_all.append(faces[:, (c + 2) % 3])
        w_all.append(-0.5 * cot)
    i = np.concatenate(i_all + j_all)
    j = np.concatenate(j_all + i_all)
    w = np.concatenate(w_all + w_all)
    W = sparse.coo_matrix((w, (i, j)), shape=(m, m)).tocsr()
    W = 0.5 * (W + W.T)  # exact symmetry against float accumulation order
    W = W - sparse.diags(np.asarray(W.sum(axis=1)).ravel())
    return W.tocsr()


def geodesic_distances(mesh, source):
    """Shortest-path distances from ``source`` over the edge graph.

    Edge weights are Euclidean lengths. Unreachable vertices get ``inf``
    and trigger a warning.
    """
    if not 0 <= source < mesh.vertex_count:
        raise MeshError(f"source index {source} out of range [0, {mesh.vertex_count})")
    dist = dijkstra(mesh.edge_graph(), directed=False, indices=source)
    if np.isinf(dist).any():
        warnings.warn(
            f"mesh is disconnected: {int(np.isinf(dist).sum())} vertices unreachable "
            f"from vertex {source}",
            stacklevel=2,
        )
    return dist
