"""Spectral bases and the dimensionality reduction of the search problem.

The solver never works at full mesh resolution: descriptors are compressed
onto their leading left singular vectors (POD modes) and all operators are
projected into that subspace. Laplace-Beltrami eigenbases are provided for
descriptor generation and for representation-quality comparisons.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
from scipy import sparse
from scipy.sparse.linalg import eigsh

from .descriptors import DescriptorSet

_DENSE_EIG_LIMIT = 4000


@dataclass(frozen=True)
class LBBasis:
    """Laplace-Beltrami eigenbasis: G-orthonormal columns, eigenvalues
    nonnegative and nondecreasing."""

    functions: np.ndarray
    eigenvalues: np.ndarray


@dataclass(frozen=True)
class PODSubspace:
    """Leading left singular vectors of a descriptor matrix.

    ``modes`` has Euclidean-orthonormal columns; ``rank`` is the smallest
    integer whose cumulative squared-singular-value fraction reaches
    ``coverage``. Mode signs are fixed so each column's largest-magnitude
    entry is positive.
    """

    modes: np.ndarray
    singular_values: np.ndarray
    coverage: float

    @property
    def rank(self):
        return self.modes.shape[1]


@dataclass(frozen=True)
class ReducedProblem:
    """One mesh's matrices projected into its POD subspace.

    Attributes
    ----------
    F_red : (r, n) ndarray
        Reduced scaled descriptors.
    G_red : (r, r) ndarray
        Reduced mass matrix, symmetric positive definite.
    W_red : (r, r) ndarray
        Reduced cotangent stiffness.
    U : PODSubspace
        The subspace used for the reduction.
    """

    F_red: np.ndarray
    G_red: np.ndarray
    W_red: np.ndarray
    U: PODSubspace

    @property
    def r(self):
        return self.F_red.shape[0]

    @property
    def n(self):
        return self.F_red.shape[1]


def lb_eigenbasis(W, G, k):
    """Solve the generalized eigenproblem ``W phi = lambda G phi`` for the k
    smallest eigenvalues; eigenvectors come out G-orthonormal.

    Dense LAPACK path for small meshes, shift-inverted Lanczos above
    a size threshold.
    """
    m = G.diag.shape[0]
    if k > m:
        raise ValueError(f"requested {k} eigenpairs from a mesh with {m} vertices")
    try:
        if m <= _DENSE_EIG_LIMIT or k >= m - 1:
            Wd = W.toarray() if sparse.issparse(W) else np.asarray(W)
            vals, vecs = sla.eigh(Wd, np.diag(G.diag), subset_by_index=[0, k - 1])
        else:
            sigma = -0.01 * float(W.diagonal().sum() / G.diag.sum())
            vals, vecs = eigsh(W.tocsc(), k=k, M=G.matrix().tocsc(), sigma=sigma, which="LM")
    except Exception as exc:
        raise RuntimeError(f"Laplace-Beltrami eigensolver failed: {exc}") from exc
    order = np.argsort(vals)
    vals = np.clip(vals[order], 0.0, None)
    return LBBasis(functions=vecs[:, order], eigenvalues=vals)


def pod_modes(descriptors, coverage, min_rank=None):
    """POD subspace of a raw descriptor matrix.

    The rank is the smallest r whose cumulative squared singular values
    cover the requested energy fraction, never exceeding the numerical
    rank. ``min_rank`` optionally floors r (the solver needs at least as
    many modes as basis functions).
    """
    if not 0.0 < coverage <= 1.0:
        raise ValueError("coverage must be in (0, 1]")
    raw = descriptors.raw if isinstance(descriptors, DescriptorSet) else np.asarray(descriptors)
    U, s, _ = np.linalg.svd(raw, full_matrices=False)
    num_rank = int((s > s[0] * 1e-12).sum()) if s.size else 0
    energy = np.cumsum(s**2) / np.sum(s**2)
    r = int(np.searchsorted(energy, coverage - 1e-14) + 1)
    r = min(max(r, 1), num_rank)
    if min_rank is not None:
        r = min(max(r, min_rank), num_rank)
        if r < min_rank:
            raise ValueError(
                f"descriptors have numerical rank {num_rank}, below the requested "
                f"minimum of {min_rank} modes"
            )
    U = U[:, :r].copy()
    # fix the SVD sign ambiguity: largest-magnitude entry of each mode positive
    for j in range(r):
        i = int(np.argmax(np.abs(U[:, j])))
        if U[i, j] < 0:
            U[:, j] = -U[:, j]
    return PODSubspace(modes=U, singular_values=s[:r].copy(), coverage=coverage)


def reduce_problem(U, descriptors, G, W):
    """Project scaled descriptors, mass, and stiffness into the POD subspace.

    Returns a ReducedProblem with ``F_red = U^T F``, ``G_red = U^T G U`` and
    ``W_red = U^T W U``.
    """
    F = descriptors.scaled if isinstance(descriptors, DescriptorSet) else np.asarray(descriptors)
    modes = U.modes
    F_red = modes.T @ F
    G_red = modes.T @ (G.diag[:, None] * modes)
    G_red = 0.5 * (G_red + G_red.T)
    W_red = modes.T @ (W @ modes)
    W_red = 0.5 * (W_red + W_red.T)
    return ReducedProblem(F_red=F_red, G_red=G_red, W_red=W_red, U=U)


def lift(U, B_red):
    """Map reduced coefficients back to vertex space: ``U.modes @ B_red``."""
    return U.modes @ np.asarray(B_red)
