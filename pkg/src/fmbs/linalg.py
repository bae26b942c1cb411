"""Dense linear-algebra kernels used by the ADMM solver.

Everything here targets matrices of at most a few hundred rows; the solver
always works in a reduced spectral space, never at full mesh resolution.
"""

import numpy as np
import scipy.linalg as sla

from .errors import IllPosedSteinError, NotPositiveDefiniteError, RankDeficiencyError
from .mesh import MassMatrix

_PIVOT_TOL = 1e-13


def solve_stein(M, N, K):
    """Solve the Stein equation ``M @ X @ N + X = K``.

    Both coefficient matrices are brought to complex Schur form and the
    transformed system is solved column-by-column by triangular
    back-substitution, in the spirit of Hessenberg-Schur solvers for
    discrete Lyapunov equations. Solvable iff no eigenvalue product
    ``mu_i(M) * nu_j(N)`` equals -1.

    Parameters
    ----------
    M : (p, p) ndarray
    N : (q, q) ndarray
    K : (p, q) ndarray

    Raises
    ------
    IllPosedSteinError
        If a back-substitution pivot ``1 + mu_i * nu_j`` is numerically zero;
        carries the offending eigenvalue product.
    """
    M = np.asarray(M, dtype=np.float64)
    N = np.asarray(N, dtype=np.float64)
    K = np.asarray(K, dtype=np.float64)
    p, q = K.shape
    if M.shape != (p, p) or N.shape != (q, q):
        raise ValueError(f"shape mismatch: M {M.shape}, N {N.shape}, K {K.shape}")
    if p == 0 or q == 0:
        return np.zeros((p, q))

    TM, U = sla.schur(M, output="complex")
    TN, V = sla.schur(N, output="complex")
    Kt = U.conj().T @ K @ V

    diag_M = np.diagonal(TM)
    Y = np.empty((p, q), dtype=np.complex128)
    scale = 1.0 + np.abs(diag_M).max(initial=0.0) * np.abs(np.diagonal(TN)).max(initial=0.0)
    for j in range(q):
        rhs = Kt[:, j]
        if j:
            rhs = rhs - TM @ (Y[:, :j] @ TN[:j, j])
        pivots = diag_M * TN[j, j] + 1.0
        bad = np.abs(pivots) < _PIVOT_TOL * scale
        if bad.any():
            i = int(np.flatnonzero(bad)[0])
            raise IllPosedSteinError(diag_M[i] * TN[j, j])
        A = TN[j, j] * TM
        np.fill_diagonal(A, pivots)
        Y[:, j] = sla.solve_triangular(A, rhs, lower=False)
    return np.real(U @ Y @ V.conj().T)


def pseudo_inverse(A, tol=1e-10):
    """Moore-Penrose inverse via SVD, truncating singular values below
    ``tol`` times the largest."""
    A = np.asarray(A, dtype=np.float64)
    if A.size == 0:
        return A.T.copy()
    return np.linalg.pinv(A, rcond=tol)


def solve_spd(A, B):
    """Solve ``A @ X = B`` for symmetric positive definite A (Cholesky).

    Raises
    ------
    NotPositiveDefiniteError
        If A is not symmetric within 1e-10 relative or Cholesky fails.
    """
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    asym = np.abs(A - A.T).max(initial=0.0)
    if asym > 1e-10 * max(1.0, np.abs(A).max(initial=0.0)):
        raise NotPositiveDefiniteError("matrix not positive definite: not symmetric")
    try:
        c, low = sla.cho_factor(A, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError("matrix not positive definite") from exc
    return sla.cho_solve((c, low), B, check_finite=False)


def _as_metric(G):
    """Return a callable applying the inner-product weight G to a matrix."""
    if isinstance(G, MassMatrix):
        d = G.diag
        return lambda X: d[:, None] * X
    G = np.asarray(G)
    if G.ndim == 1:
        return lambda X: G[:, None] * X
    return lambda X: G @ X


def g_orthonormalize(B, G):
    """Orthonormalize the columns of B in the G-weighted inner product.

    Modified Gram-Schmidt with a second reorthogonalization pass; the output
    spans the same column space and satisfies ``B.T @ G @ B = I``.

    Parameters
    ----------
    B : (m, k) ndarray
    G : MassMatrix, (m,) diagonal, or (m, m) symmetric positive definite

    Raises
    ------
    RankDeficiencyError
        Naming the first column that is numerically dependent on its
        predecessors in the G inner product.
    """
    apply_g = _as_metric(G)
    Q = np.array(B, dtype=np.float64, copy=True)
    k = Q.shape[1]
    norms0 = np.sqrt(np.einsum("ij,ij->j", Q, apply_g(Q)))
    for _pass in range(2):
        for j in range(k):
            gq = apply_g(Q[:, j : j + 1])
            if j:
                coeff = Q[:, :j].T @ gq
                Q[:, j : j + 1] -= Q[:, :j] @ coeff
                gq = apply_g(Q[:, j : j + 1])
            nrm = np.sqrt(float(Q[:, j] @ gq[:, 0]))
            if nrm <= 1e-12 * max(norms0[j], 1e-300):
                raise RankDeficiencyError(j)
            Q[:, j] /= nrm
    return Q
