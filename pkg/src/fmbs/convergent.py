"""ADMM over the reformulated problem whose convergence theory is known.

The orthogonality target I is replaced by a free block Z pulled toward the
identity, and slack blocks absorb the equality couplings, so the objective
splits into a smooth part over the sequential blocks
(B1, B1', B~1', B2, B2', B~2', C) and a strongly convex part over the
single joint block (Z, B1'', B~1'', B2'', B~2''). Constraints, all biaffine:

    B1^T G1 B1' = Z        B2^T G2 B2' = Z
    B1 - B1'  = B1''       B2 - B2'  = B2''
    B1 - B~1' = B~1''      B2 - B~2' = B~2''

The data term reads the tilde copies, 0.5 |C B~1'^T F1 - B~2'^T F2|^2, and
the strongly convex part is (nu/2)|Z - I|^2 plus (mu/2) times the squared
G-weighted norms of the slack blocks. Every subproblem is closed-form,
an SPD solve, or one Stein equation.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DivergenceError
from .linalg import pseudo_inverse, solve_spd, solve_stein
from .solver import ResidualRecord


@dataclass
class ConvergentBlocks:
    """Primal blocks, slack blocks, duals, and penalties of one run."""

    B1: np.ndarray
    B1p: np.ndarray
    B1t: np.ndarray
    B2: np.ndarray
    B2p: np.ndarray
    B2t: np.ndarray
    C: np.ndarray
    Z: np.ndarray
    B1pp: np.ndarray
    B1tpp: np.ndarray
    B2pp: np.ndarray
    B2tpp: np.ndarray
    P1: np.ndarray = None
    P2: np.ndarray = None
    Q1: np.ndarray = None
    Q2: np.ndarray = None
    Qt1: np.ndarray = None
    Qt2: np.ndarray = None
    nu: float = 1.0
    mu: float = 1.0
    rho: float = 1.0
    iteration: int = 0

    @property
    def X(self):
        return (self.B1, self.B1p, self.B1t, self.B2, self.B2p, self.B2t, self.C)

    @property
    def Zblocks(self):
        return (self.Z, self.B1pp, self.B1tpp, self.B2pp, self.B2tpp)


def _gnorm2(A, G):
    return float(np.sum(A * (G @ A)))


def objective(blk, prob1, prob2):
    """Smooth data term plus the strongly convex block penalty."""
    R = blk.C @ (blk.B1t.T @ prob1.F_red) - blk.B2t.T @ prob2.F_red
    g = 0.5 * float(np.sum(R * R))
    ZI = blk.Z - np.eye(blk.Z.shape[0])
    h = 0.5 * blk.nu * float(np.sum(ZI * ZI))
    h += 0.5 * blk.mu * (
        _gnorm2(blk.B1pp, prob1.G_red)
        + _gnorm2(blk.B1tpp, prob1.G_red)
        + _gnorm2(blk.B2pp, prob2.G_red)
        + _gnorm2(blk.B2tpp, prob2.G_red)
    )
    return g + h


def constraint_residuals(blk, prob1, prob2):
    """The six blocks of P(X) + Q(Z)."""
    return (
        blk.B1.T @ prob1.G_red @ blk.B1p - blk.Z,
        blk.B2.T @ prob2.G_red @ blk.B2p - blk.Z,
        blk.B1 - blk.B1p - blk.B1pp,
        blk.B2 - blk.B2p - blk.B2pp,
        blk.B1 - blk.B1t - blk.B1tpp,
        blk.B2 - blk.B2t - blk.B2tpp,
    )


def feasibility(blk, prob1, prob2):
    """Frobenius norm of the stacked constraint violations."""
    return np.sqrt(
        sum(float(np.sum(r * r)) for r in constraint_residuals(blk, prob1, prob2))
    )


def augmented_lagrangian(blk, prob1, prob2):
    """Scaled-form augmented Lagrangian value.

    The k x k constraints are penalized in the Frobenius norm and the
    spatial ones in their mesh's G-weighted norm, matching the metric used
    by the subproblem solves.
    """
    c1, c2, c3, c4, c5, c6 = constraint_residuals(blk, prob1, prob2)
    rho = blk.rho
    G1, G2 = prob1.G_red, prob2.G_red
    val = objective(blk, prob1, prob2)
    for resid, dualv in ((c1, blk.P1), (c2, blk.P2)):
        val += 0.5 * rho * (float(np.sum((resid + dualv) ** 2)) - float(np.sum(dualv**2)))
    for resid, dualv, G in (
        (c3, blk.Q1, G1), (c4, blk.Q2, G2), (c5, blk.Qt1, G1), (c6, blk.Qt2, G2),
    ):
        val += 0.5 * rho * (_gnorm2(resid + dualv, G) - _gnorm2(dualv, G))
    return val


def init_blocks(prob1, prob2, params, nu, mu):
    """Start from the POD initialization with zero slacks and Z = I."""
    k = params.k
    if k > min(prob1.r, prob2.r):
        raise ValueError(
            f"basis size k={k} exceeds a reduced dimension (r1={prob1.r}, r2={prob2.r})"
        )
    B1 = np.eye(prob1.r, k)
    B2 = np.eye(prob2.r, k)
    C = (B2.T @ prob2.F_red) @ pseudo_inverse(B1.T @ prob1.F_red)
    z1 = np.zeros((prob1.r, k))
    z2 = np.zeros((prob2.r, k))
    kk = np.zeros((k, k))
    return ConvergentBlocks(
        B1=B1, B1p=B1.copy(), B1t=B1.copy(),
        B2=B2, B2p=B2.copy(), B2t=B2.copy(),
        C=C, Z=np.eye(k),
        B1pp=z1.copy(), B1tpp=z1.copy(), B2pp=z2.copy(), B2tpp=z2.copy(),
        P1=kk.copy(), P2=kk.copy(),
        Q1=z1.copy(), Q2=z2.copy(), Qt1=z1.copy(), Qt2=z2.copy(),
        nu=nu, mu=mu, rho=params.rho0,
    )


def _update_base(B_p, B_t, Z, P, Q, Qt, Bpp, Btpp, G, rho):
    """B-block update: SPD system from the three penalties touching B."""
    GBp = G @ B_p
    A = rho * (GBp @ GBp.T) + 2.0 * rho * G
    rhs = rho * GBp @ (Z - P).T + rho * (G @ (B_p + Bpp - Q)) + rho * (G @ (B_t + Btpp - Qt))
    return solve_spd(A, rhs)


def _update_prime(B, Z, P, Q, Bpp, G, rho):
    GB = G @ B
    A = rho * (GB @ GB.T) + rho * G
    rhs = rho * GB @ (Z - P) + rho * (G @ (B - Bpp + Q))
    return solve_spd(A, rhs)


def run_convergent(prob1, prob2, params, nu, mu):
    """Run ADMM on the reformulated problem.

    Penalty rho stays fixed at ``params.rho0``: the convergence guarantees
    assume a sufficiently large constant penalty.

    Returns
    -------
    blocks : ConvergentBlocks
    record : ResidualRecord
        ``primal`` holds the feasibility |P(X) + Q(Z)|, ``dual`` the
        penalty-scaled change of the Z-block, ``lagrangian`` the scaled
        augmented-Lagrangian value.
    """
    if nu <= 0 or mu <= 0:
        raise ValueError("nu and mu must be positive")
    blk = init_blocks(prob1, prob2, params, nu, mu)
    G1, G2 = prob1.G_red, prob2.G_red
    F1, F2 = prob1.F_red, prob2.F_red
    rho = blk.rho
    record = ResidualRecord()
    for it in range(params.max_iter):
        z_old = [b.copy() for b in blk.Zblocks]

        blk.B1 = _update_base(
            blk.B1p, blk.B1t, blk.Z, blk.P1, blk.Q1, blk.Qt1,
            blk.B1pp, blk.B1tpp, G1, rho,
        )
        blk.B1p = _update_prime(blk.B1, blk.Z, blk.P1, blk.Q1, blk.B1pp, G1, rho)
        rhs = F1 @ F2.T @ blk.B2t @ blk.C + rho * (G1 @ (blk.B1 - blk.B1tpp + blk.Qt1))
        O = rho * G1
        blk.B1t = solve_stein(solve_spd(O, F1 @ F1.T), blk.C.T @ blk.C, solve_spd(O, rhs))

        blk.B2 = _update_base(
            blk.B2p, blk.B2t, blk.Z, blk.P2, blk.Q2, blk.Qt2,
            blk.B2pp, blk.B2tpp, G2, rho,
        )
        blk.B2p = _update_prime(blk.B2, blk.Z, blk.P2, blk.Q2, blk.B2pp, G2, rho)
        A = F2 @ F2.T + rho * G2
        blk.B2t = solve_spd(A, F2 @ F1.T @ blk.B1t @ blk.C.T + rho * (G2 @ (blk.B2 - blk.B2tpp + blk.Qt2)))

        blk.C = (blk.B2t.T @ F2) @ pseudo_inverse(blk.B1t.T @ F1)

        # joint Z-block: separable exact minimizers
        blk.Z = (
            nu * np.eye(params.k)
            + rho * (blk.B1.T @ G1 @ blk.B1p + blk.P1)
            + rho * (blk.B2.T @ G2 @ blk.B2p + blk.P2)
        ) / (nu + 2.0 * rho)
        shrink = rho / (mu + rho)
        blk.B1pp = shrink * (blk.B1 - blk.B1p + blk.Q1)
        blk.B1tpp = shrink * (blk.B1 - blk.B1t + blk.Qt1)
        blk.B2pp = shrink * (blk.B2 - blk.B2p + blk.Q2)
        blk.B2tpp = shrink * (blk.B2 - blk.B2t + blk.Qt2)

        c1, c2, c3, c4, c5, c6 = constraint_residuals(blk, prob1, prob2)
        blk.P1 = blk.P1 + c1
        blk.P2 = blk.P2 + c2
        blk.Q1 = blk.Q1 + c3
        blk.Q2 = blk.Q2 + c4
        blk.Qt1 = blk.Qt1 + c5
        blk.Qt2 = blk.Qt2 + c6

        primal = np.sqrt(sum(float(np.sum(c * c)) for c in (c1, c2, c3, c4, c5, c6)))
        dual = rho * np.sqrt(
            sum(float(np.sum((b - o) ** 2)) for b, o in zip(blk.Zblocks, z_old))
        )
        record.append(
            objective(blk, prob1, prob2), primal, dual, rho,
            lagrangian=augmented_lagrangian(blk, prob1, prob2),
        )
        blk.iteration = it + 1
        for b in blk.X + blk.Zblocks:
            if not np.all(np.isfinite(b)) or np.abs(b).max(initial=0.0) > params.divergence_limit:
                raise DivergenceError(it)
        scale = max(1.0, np.sqrt(float(np.sum(blk.B1**2)) + float(np.sum(blk.B2**2))))
        if primal <= params.eps_abs + params.eps_rel * scale and dual <= params.eps_abs + params.eps_rel * scale:
            break
    return blk, record
