"""Point-to-point map extraction from a functional map and two bases."""

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

# exact linear scan below this many target rows, spatial tree above
_TREE_THRESHOLD = 20000
_CHUNK = 512


@dataclass(frozen=True)
class PointMap:
    """Vertex correspondence: ``targets[i]`` on mesh 2 matches vertex i on
    mesh 1. Total (every source vertex mapped)."""

    targets: np.ndarray
    target_count: int

    def __post_init__(self):
        t = self.targets
        if t.size and (t.min() < 0 or t.max() >= self.target_count):
            raise ValueError("point map target index out of range")

    @property
    def source_count(self):
        return self.targets.shape[0]


def nearest_rows(X, Y):
    """Index of the Euclidean-nearest row of Y for each row of X.

    Ties break to the smallest index on the linear-scan path; large targets
    go through a k-d tree.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    Y = np.ascontiguousarray(Y, dtype=np.float64)
    if Y.shape[0] > _TREE_THRESHOLD:
        return cKDTree(Y).query(X, k=1)[1].astype(np.int64)
    out = np.empty(X.shape[0], dtype=np.int64)
    y2 = np.einsum("ij,ij->i", Y, Y)
    for start in range(0, X.shape[0], _CHUNK):
        chunk = X[start : start + _CHUNK]
        d2 = y2[None, :] - 2.0 * (chunk @ Y.T)
        out[start : start + _CHUNK] = np.argmin(d2, axis=1)
    return out


def extract_p2p(B1, B2, C):
    """Nearest-neighbor map in the spectral embedding.

    Source vertex i is embedded as row i of ``B1 @ C.T`` and matched to the
    nearest row of ``B2``.
    """
    return PointMap(targets=nearest_rows(B1 @ C.T, B2), target_count=B2.shape[0])


def icp_refine(B1, B2, C0, n_iters):
    """Alternate nearest-neighbor matching with orthogonal refitting of C.

    Each refit solves the Procrustes problem on the matched embeddings, so
    the returned C is orthogonal. Stops early once the map is stationary.

    Returns
    -------
    (C, PointMap)
    """
    C = np.asarray(C0, dtype=np.float64)
    pmap = extract_p2p(B1, B2, C)
    for _ in range(n_iters):
        H = B1.T @ B2[pmap.targets]
        U, _, Vt = np.linalg.svd(H)
        C = (U @ Vt).T
        new_map = extract_p2p(B1, B2, C)
        if np.array_equal(new_map.targets, pmap.targets):
            pmap = new_map
            break
        pmap = new_map
    return C, pmap


def transfer_function(f1, B1, B2, C, G1):
    """Push a scalar function through the map: ``B2 C B1^T G1 f1``."""
    f1 = np.asarray(f1, dtype=np.float64)
    return B2 @ (C @ (B1.T @ (G1.diag * f1)))
